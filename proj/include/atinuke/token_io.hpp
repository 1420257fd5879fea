#pragma once

#include <iosfwd>
#include <string>

#include "atinuke/tensor.hpp"

namespace atinuke {

/// Token batch text format: one sequence per line, base-10 unsigned token
/// ids separated by single spaces, no trailing whitespace, all lines the
/// same length. Errors carry line and column numbers (1-based).
IntTensor parse_token_batch(std::istream& in, std::size_t vocab_size);
IntTensor parse_token_batch_file(const std::string& path, std::size_t vocab_size);

/// One line per (sequence, position): vocab floats at 9 significant digits.
void write_logits_text(std::ostream& out, const Tensor& logits);

/// u32 rank, u64 dims, little-endian f64 payload.
void write_logits_binary(std::ostream& out, const Tensor& logits);

}  // namespace atinuke
