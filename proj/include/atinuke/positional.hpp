#pragma once

#include <cstddef>

#include "atinuke/tensor.hpp"

namespace atinuke {

/// Fixed sinusoidal table: table[pos][2i] = sin(pos / 10000^(2i/model_dim)),
/// table[pos][2i+1] = cos of the same argument. Immutable after construction.
struct PositionalTable {
    std::size_t max_len = 0;
    std::size_t model_dim = 0;
    Tensor table;  // max_len x model_dim
};

/// model_dim must be even (sin/cos pairing); max_len >= 1.
PositionalTable build_positional_table(std::size_t model_dim, std::size_t max_len);

/// positions: batch x seq of row indices < max_len.
/// Result: batch x seq x model_dim.
Tensor lookup_positions(const PositionalTable& table, const IntTensor& positions);

}  // namespace atinuke
