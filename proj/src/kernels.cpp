#include "atinuke/kernels.hpp"

#include <cmath>
#include <cstring>

#include "atinuke/errors.hpp"
#include "atinuke/simd.hpp"

namespace atinuke {

namespace {

// Right-justified broadcast map: for each axis of `out`, the source stride in
// `src` (0 where src has extent 1).
std::vector<std::size_t> broadcast_strides(const Shape& out, const Shape& src) {
    std::vector<std::size_t> strides(out.size(), 0);
    std::size_t stride = 1;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const std::size_t out_axis = out.size() - 1 - i;
        const std::size_t src_ext = src[src.size() - 1 - i];
        if (src_ext != out[out_axis] && src_ext != 1)
            throw ShapeError("cannot broadcast " + shape_str(src) + " to " + shape_str(out));
        strides[out_axis] = (src_ext == 1) ? 0 : stride;
        stride *= src_ext;
    }
    return strides;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2)
        throw ShapeError("matmul needs rank >= 2 operands, got " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    const std::size_t m = sa[sa.size() - 2], ka = sa[sa.size() - 1];
    const std::size_t kb = sb[sb.size() - 2], n = sb[sb.size() - 1];
    if (ka != kb)
        throw ShapeError("matmul inner extents differ: " + shape_str(sa) + " x " + shape_str(sb));

    // Batch axes: everything before the trailing matrix, matched or broadcast from 1.
    Shape batch_a(sa.begin(), sa.end() - 2);
    Shape batch_b(sb.begin(), sb.end() - 2);
    const std::size_t brank = std::max(batch_a.size(), batch_b.size());
    Shape batch(brank, 1);
    for (std::size_t i = 0; i < brank; ++i) {
        const std::size_t ea = i < brank - batch_a.size() ? 1 : batch_a[i - (brank - batch_a.size())];
        const std::size_t eb = i < brank - batch_b.size() ? 1 : batch_b[i - (brank - batch_b.size())];
        if (ea != eb && ea != 1 && eb != 1)
            throw ShapeError("matmul batch extents differ: " + shape_str(sa) + " x " + shape_str(sb));
        batch[i] = std::max(ea, eb);
    }

    Shape out_shape = batch;
    out_shape.push_back(m);
    out_shape.push_back(n);
    Tensor out(out_shape);

    const std::size_t batches = shape_product(batch);
    const auto stride_a = broadcast_strides(batch, batch_a);
    const auto stride_b = broadcast_strides(batch, batch_b);
    const auto& be = simd::active();

    for (std::size_t idx = 0; idx < batches; ++idx) {
        // decompose idx into batch coords, apply broadcast strides
        std::size_t rem = idx, off_a = 0, off_b = 0;
        for (std::size_t ax = batch.size(); ax-- > 0;) {
            const std::size_t coord = rem % batch[ax];
            rem /= batch[ax];
            off_a += coord * stride_a[ax];
            off_b += coord * stride_b[ax];
        }
        be.matmul_acc(a.data() + off_a * m * ka, b.data() + off_b * kb * n,
                      out.data() + idx * m * n, m, ka, n);
    }
    return out;
}

Tensor softmax_lastdim(const Tensor& x) {
    const std::size_t cols = x.extent(x.rank() - 1);
    const std::size_t rows = x.size() / cols;
    Tensor out(x.shape());
    const auto& be = simd::active();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.data() + r * cols;
        double* o = out.data() + r * cols;
        const double mx = be.max(in, cols);
        for (std::size_t j = 0; j < cols; ++j) o[j] = std::exp(in[j] - mx);
        be.scale_inplace(1.0 / be.sum(o, cols), o, cols);
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const std::size_t cols = x.extent(x.rank() - 1);
    if (gamma.size() != cols || beta.size() != cols)
        throw ShapeError("layer_norm affine extents " + shape_str(gamma.shape()) + "/" +
                         shape_str(beta.shape()) + " do not match last dim of " +
                         shape_str(x.shape()));
    if (eps <= 0.0) throw RangeError("layer_norm eps must be > 0");
    const std::size_t rows = x.size() / cols;
    Tensor out(x.shape());
    const auto& be = simd::active();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = x.data() + r * cols;
        double* o = out.data() + r * cols;
        const double mean = be.sum(in, cols) / static_cast<double>(cols);
        double var = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double d = in[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < cols; ++j)
            o[j] = gamma[j] * ((in[j] - mean) * inv) + beta[j];
    }
    return out;
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad_scalar(double x) {
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    const double Phi = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    return Phi + x * phi;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    simd::active().relu(x.data(), out.data(), x.size());
    return out;
}

Tensor gelu(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu_scalar(x[i]);
    return out;
}

Tensor activation(const Tensor& x, Activation kind) {
    return kind == Activation::relu ? relu(x) : gelu(x);
}

Tensor xavier_uniform_init(std::size_t fan_in, std::size_t fan_out, PrngState& rng) {
    if (fan_in < 1 || fan_out < 1) throw RangeError("xavier fans must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor out({fan_in, fan_out});
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.next_uniform(-bound, bound);
    return out;
}

Tensor embedding_gather(const Tensor& table, const IntTensor& ids) {
    if (table.rank() != 2) throw ShapeError("embedding table must be rank 2");
    const std::size_t vocab = table.extent(0);
    const std::size_t dim = table.extent(1);
    Shape out_shape = ids.shape;
    out_shape.push_back(dim);
    Tensor out(out_shape);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::int64_t id = ids.data[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab)
            throw IndexError("token id " + std::to_string(id) + " at position " +
                             std::to_string(i) + " outside vocab of " + std::to_string(vocab));
        std::memcpy(out.data() + i * dim, table.data() + static_cast<std::size_t>(id) * dim,
                    dim * sizeof(double));
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor out(a.shape());
    if (a.same_shape(b)) {
        simd::active().add(a.data(), b.data(), out.data(), a.size());
        return out;
    }
    if (b.rank() > a.rank())
        throw ShapeError("add: cannot broadcast " + shape_str(b.shape()) + " onto " +
                         shape_str(a.shape()));
    const auto strides = broadcast_strides(a.shape(), b.shape());
    const Shape& sh = a.shape();
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::size_t rem = i, off = 0;
        for (std::size_t ax = sh.size(); ax-- > 0;) {
            off += (rem % sh[ax]) * strides[ax];
            rem /= sh[ax];
        }
        out[i] = a[i] + b[off];
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("sub shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor scale(const Tensor& x, double c) {
    Tensor out = x;
    simd::active().scale_inplace(c, out.data(), out.size());
    return out;
}

Tensor transpose_last2(const Tensor& x) {
    if (x.rank() < 2) throw ShapeError("transpose_last2 needs rank >= 2");
    Shape out_shape = x.shape();
    std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
    Tensor out(out_shape);
    const std::size_t rows = x.extent(x.rank() - 2);
    const std::size_t cols = x.extent(x.rank() - 1);
    const std::size_t batches = x.size() / (rows * cols);
    for (std::size_t bidx = 0; bidx < batches; ++bidx) {
        const double* in = x.data() + bidx * rows * cols;
        double* o = out.data() + bidx * rows * cols;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) o[c * rows + r] = in[r * cols + c];
    }
    return out;
}

Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g;
    const auto strides = broadcast_strides(g.shape(), target);
    Tensor out(target);
    const Shape& sh = g.shape();
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t rem = i, off = 0;
        for (std::size_t ax = sh.size(); ax-- > 0;) {
            off += (rem % sh[ax]) * strides[ax];
            rem /= sh[ax];
        }
        out[off] += g[i];
    }
    return out;
}

Tensor reshape(const Tensor& x, Shape target) {
    if (shape_product(target) != x.size())
        throw ShapeError("reshape " + shape_str(x.shape()) + " to " + shape_str(target) +
                         " changes element count");
    return Tensor(std::move(target), std::vector<double>(x.data(), x.data() + x.size()));
}

}  // namespace atinuke
