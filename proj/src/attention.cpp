#include "atinuke/attention.hpp"

#include <limits>

#include "atinuke/errors.hpp"

namespace atinuke {

Tensor split_heads(const Tensor& x, std::size_t head_count) {
    if (x.rank() != 3) throw ShapeError("split_heads expects batch x seq x model_dim");
    const std::size_t batch = x.extent(0), seq = x.extent(1), dim = x.extent(2);
    if (head_count == 0 || dim % head_count != 0)
        throw ConfigError("model_dim " + std::to_string(dim) + " not divisible by head_count " +
                          std::to_string(head_count));
    const std::size_t head_dim = dim / head_count;
    Tensor out({batch, head_count, seq, head_dim});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t s = 0; s < seq; ++s)
            for (std::size_t h = 0; h < head_count; ++h)
                for (std::size_t d = 0; d < head_dim; ++d)
                    out[((b * head_count + h) * seq + s) * head_dim + d] =
                        x[(b * seq + s) * dim + h * head_dim + d];
    return out;
}

Tensor merge_heads(const Tensor& x) {
    if (x.rank() != 4) throw ShapeError("merge_heads expects batch x head x seq x head_dim");
    const std::size_t batch = x.extent(0), heads = x.extent(1), seq = x.extent(2),
                      head_dim = x.extent(3);
    const std::size_t dim = heads * head_dim;
    Tensor out({batch, seq, dim});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t s = 0; s < seq; ++s)
                for (std::size_t d = 0; d < head_dim; ++d)
                    out[(b * seq + s) * dim + h * head_dim + d] =
                        x[((b * heads + h) * seq + s) * head_dim + d];
    return out;
}

Tensor causal_mask(std::size_t seq) {
    if (seq < 1) throw RangeError("causal_mask needs seq >= 1");
    const double blocked = std::numeric_limits<double>::lowest();
    Tensor mask({seq, seq});
    for (std::size_t t = 0; t < seq; ++t)
        for (std::size_t s = 0; s < seq; ++s)
            mask[t * seq + s] = (s <= t) ? 0.0 : blocked;
    return mask;
}

// attention_forward lives in model.cpp, on top of the tape builder.

}  // namespace atinuke
