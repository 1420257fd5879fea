#include "atinuke/positional.hpp"

#include <cmath>
#include <cstring>

#include "atinuke/errors.hpp"

namespace atinuke {

PositionalTable build_positional_table(std::size_t model_dim, std::size_t max_len) {
    if (model_dim == 0 || model_dim % 2 != 0)
        throw ConfigError("model_dim must be even for sin/cos positional pairs, got " +
                          std::to_string(model_dim));
    if (max_len < 1) throw ConfigError("max_len must be >= 1");

    PositionalTable pt;
    pt.max_len = max_len;
    pt.model_dim = model_dim;
    pt.table = Tensor({max_len, model_dim});
    for (std::size_t pos = 0; pos < max_len; ++pos) {
        double* row = pt.table.data() + pos * model_dim;
        for (std::size_t i = 0; i < model_dim / 2; ++i) {
            const double divisor =
                std::pow(10000.0, (2.0 * static_cast<double>(i)) / static_cast<double>(model_dim));
            const double angle = static_cast<double>(pos) / divisor;
            row[2 * i] = std::sin(angle);
            row[2 * i + 1] = std::cos(angle);
        }
    }
    return pt;
}

Tensor lookup_positions(const PositionalTable& table, const IntTensor& positions) {
    if (positions.rank() != 2) throw ShapeError("positions must be batch x seq");
    Shape out_shape = positions.shape;
    out_shape.push_back(table.model_dim);
    Tensor out(out_shape);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::int64_t pos = positions.data[i];
        if (pos < 0 || static_cast<std::size_t>(pos) >= table.max_len)
            throw RangeError("position " + std::to_string(pos) + " at slot " + std::to_string(i) +
                             " exceeds max_len " + std::to_string(table.max_len));
        std::memcpy(out.data() + i * table.model_dim,
                    table.table.data() + static_cast<std::size_t>(pos) * table.model_dim,
                    table.model_dim * sizeof(double));
    }
    return out;
}

}  // namespace atinuke
