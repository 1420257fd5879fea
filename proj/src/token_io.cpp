#include "atinuke/token_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "atinuke/errors.hpp"

namespace atinuke {

IntTensor parse_token_batch(std::istream& in, std::size_t vocab_size) {
    std::vector<std::int64_t> tokens;
    std::size_t seq_len = 0, lines = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lines;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty())
            throw IoError("line " + std::to_string(lines) + ": empty sequence");
        if (line.front() == ' ' || line.back() == ' ')
            throw IoError("line " + std::to_string(lines) + ": leading or trailing whitespace");

        std::size_t count = 0, col = 1, i = 0;
        while (i < line.size()) {
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ') ++j;
            const std::string tok = line.substr(i, j - i);
            if (tok.empty())
                throw IoError("line " + std::to_string(lines) + ", column " +
                              std::to_string(col) + ": double space");
            for (char c : tok)
                if (c < '0' || c > '9')
                    throw IoError("line " + std::to_string(lines) + ", column " +
                                  std::to_string(col) + ": token '" + tok +
                                  "' is not a base-10 unsigned integer");
            const unsigned long long v = std::stoull(tok);
            if (v >= vocab_size)
                throw RangeError("line " + std::to_string(lines) + ", column " +
                                 std::to_string(col) + ": token " + tok + " >= vocab_size " +
                                 std::to_string(vocab_size));
            tokens.push_back(static_cast<std::int64_t>(v));
            ++count;
            ++col;
            i = (j < line.size()) ? j + 1 : j;
        }
        if (lines == 1)
            seq_len = count;
        else if (count != seq_len)
            throw IoError("line " + std::to_string(lines) + ": " + std::to_string(count) +
                          " tokens, expected " + std::to_string(seq_len) +
                          " (ragged batches are rejected)");
    }
    if (lines == 0) throw IoError("no sequences");
    return IntTensor({lines, seq_len}, std::move(tokens));
}

IntTensor parse_token_batch_file(const std::string& path, std::size_t vocab_size) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open token file '" + path + "'");
    return parse_token_batch(f, vocab_size);
}

void write_logits_text(std::ostream& out, const Tensor& logits) {
    const std::size_t vocab = logits.extent(logits.rank() - 1);
    const std::size_t rows = logits.size() / vocab;
    char buf[40];
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < vocab; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", logits[r * vocab + j]);
            if (j) out << ' ';
            out << buf;
        }
        out << '\n';
    }
}

void write_logits_binary(std::ostream& out, const Tensor& logits) {
    auto put_u32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    auto put_u64 = [&out](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    put_u32(static_cast<std::uint32_t>(logits.rank()));
    for (std::size_t ax = 0; ax < logits.rank(); ++ax) put_u64(logits.extent(ax));
    for (std::size_t i = 0; i < logits.size(); ++i) {
        std::uint64_t bits;
        const double d = logits[i];
        static_assert(sizeof(bits) == sizeof(d));
        __builtin_memcpy(&bits, &d, 8);
        put_u64(bits);
    }
}

}  // namespace atinuke
