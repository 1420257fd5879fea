#include "atinuke/autodiff.hpp"

#include <cmath>

#include "atinuke/attention.hpp"
#include "atinuke/errors.hpp"
#include "atinuke/simd.hpp"

namespace atinuke {

namespace {

void acc(Tensor& g, const Tensor& delta) {
    simd::active().axpy(1.0, delta.data(), g.data(), g.size());
}

// loss and, when dlogits != nullptr, its gradient scaled by upstream.
double cross_entropy_impl(const Tensor& logits, const IntTensor& targets, double upstream,
                          Tensor* dlogits) {
    if (logits.rank() != 3) throw ShapeError("cross_entropy expects batch x seq x vocab logits");
    const std::size_t vocab = logits.extent(2);
    const std::size_t positions = logits.extent(0) * logits.extent(1);
    if (targets.size() != positions)
        throw ShapeError("targets " + shape_str(targets.shape) + " do not match logits " +
                         shape_str(logits.shape()));
    const auto& be = simd::active();
    const double inv_n = 1.0 / static_cast<double>(positions);
    double loss = 0.0;
    std::vector<double> p(vocab);
    for (std::size_t r = 0; r < positions; ++r) {
        const std::int64_t tgt = targets.data[r];
        if (tgt < 0 || static_cast<std::size_t>(tgt) >= vocab)
            throw IndexError("target " + std::to_string(tgt) + " at position " +
                             std::to_string(r) + " outside vocab of " + std::to_string(vocab));
        const double* row = logits.data() + r * vocab;
        const double mx = be.max(row, vocab);
        double z = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) {
            p[j] = std::exp(row[j] - mx);
            z += p[j];
        }
        loss += std::log(z) - (row[static_cast<std::size_t>(tgt)] - mx);
        if (dlogits) {
            double* drow = dlogits->data() + r * vocab;
            const double s = upstream * inv_n / z;
            for (std::size_t j = 0; j < vocab; ++j) drow[j] += s * p[j];
            drow[static_cast<std::size_t>(tgt)] -= upstream * inv_n;
        }
    }
    return loss * inv_n;
}

}  // namespace

double cross_entropy(const Tensor& logits, const IntTensor& targets) {
    return cross_entropy_impl(logits, targets, 1.0, nullptr);
}

Tape::Ref Tape::push(Tensor value, std::vector<Ref> parents, BackwardFn back, std::string name) {
    nodes_.push_back(Node{std::move(value), std::move(name), std::move(parents), std::move(back)});
    return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::leaf(Tensor value, std::string name) {
    return push(std::move(value), {}, nullptr, std::move(name));
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
    Tensor out = atinuke::matmul(value(a), value(b));
    return push(std::move(out), {a, b},
                [a, b](const Tape& t, const Tensor& gout, std::vector<Tensor>& grads) {
                    const Tensor& av = t.value(a);
                    const Tensor& bv = t.value(b);
                    acc(grads[static_cast<std::size_t>(a)],
                        reduce_to_shape(atinuke::matmul(gout, atinuke::transpose_last2(bv)),
                                        av.shape()));
                    acc(grads[static_cast<std::size_t>(b)],
                        reduce_to_shape(atinuke::matmul(atinuke::transpose_last2(av), gout),
                                        bv.shape()));
                });
}

Tape::Ref Tape::add(Ref a, Ref b) {
    Tensor out = atinuke::add(value(a), value(b));
    return push(std::move(out), {a, b},
                [a, b](const Tape& t, const Tensor& gout, std::vector<Tensor>& grads) {
                    acc(grads[static_cast<std::size_t>(a)], gout);
                    acc(grads[static_cast<std::size_t>(b)],
                        reduce_to_shape(gout, t.value(b).shape()));
                });
}

Tape::Ref Tape::scale(Ref a, double c) {
    Tensor out = atinuke::scale(value(a), c);
    return push(std::move(out), {a},
                [a, c](const Tape&, const Tensor& gout, std::vector<Tensor>& grads) {
                    simd::active().axpy(c, gout.data(), grads[static_cast<std::size_t>(a)].data(),
                                        gout.size());
                });
}

Tape::Ref Tape::softmax_lastdim(Ref x) {
    Tensor out = atinuke::softmax_lastdim(value(x));
    Ref self = push(std::move(out), {x}, nullptr);
    // dX_row = y_row * (g_row - <g_row, y_row>)
    nodes_.back().back = [x, self](const Tape& t, const Tensor& gout, std::vector<Tensor>& grads) {
        const Tensor& y = t.value(self);
        Tensor& gx = grads[static_cast<std::size_t>(x)];
        const std::size_t cols = y.extent(y.rank() - 1);
        const std::size_t rows = y.size() / cols;
        const auto& be = simd::active();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = y.data() + r * cols;
            const double* gr = gout.data() + r * cols;
            double* o = gx.data() + r * cols;
            const double gy = be.dot(gr, yr, cols);
            for (std::size_t j = 0; j < cols; ++j) o[j] += yr[j] * (gr[j] - gy);
        }
    };
    return self;
}

Tape::Ref Tape::layer_norm(Ref x, Ref gamma, Ref beta, double eps) {
    Tensor out = atinuke::layer_norm(value(x), value(gamma), value(beta), eps);
    return push(
        std::move(out), {x, gamma, beta},
        [x, gamma, beta, eps](const Tape& t, const Tensor& gout, std::vector<Tensor>& grads) {
            const Tensor& xv = t.value(x);
            const Tensor& gv = t.value(gamma);
            Tensor& gx = grads[static_cast<std::size_t>(x)];
            Tensor& gg = grads[static_cast<std::size_t>(gamma)];
            Tensor& gb = grads[static_cast<std::size_t>(beta)];
            const std::size_t cols = xv.extent(xv.rank() - 1);
            const std::size_t rows = xv.size() / cols;
            const auto& be = simd::active();
            std::vector<double> xhat(cols), dxhat(cols);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* in = xv.data() + r * cols;
                const double* g = gout.data() + r * cols;
                const double mean = be.sum(in, cols) / static_cast<double>(cols);
                double var = 0.0;
                for (std::size_t j = 0; j < cols; ++j) {
                    const double d = in[j] - mean;
                    var += d * d;
                }
                var /= static_cast<double>(cols);
                const double inv = 1.0 / std::sqrt(var + eps);
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                for (std::size_t j = 0; j < cols; ++j) {
                    xhat[j] = (in[j] - mean) * inv;
                    dxhat[j] = g[j] * gv[j];
                    mean_dxhat += dxhat[j];
                    mean_dxhat_xhat += dxhat[j] * xhat[j];
                    gg[j] += g[j] * xhat[j];
                    gb[j] += g[j];
                }
                mean_dxhat /= static_cast<double>(cols);
                mean_dxhat_xhat /= static_cast<double>(cols);
                double* o = gx.data() + r * cols;
                for (std::size_t j = 0; j < cols; ++j)
                    o[j] += inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
            }
        });
}

Tape::Ref Tape::activation(Ref x, Activation kind) {
    Tensor out = atinuke::activation(value(x), kind);
    return push(std::move(out), {x},
                [x, kind](const Tape& t, const Tensor& gout, std::vector<Tensor>& grads) {
                    const Tensor& xv = t.value(x);
                    Tensor& gx = grads[static_cast<std::size_t>(x)];
                    if (kind == Activation::relu) {
                        for (std::size_t i = 0; i < xv.size(); ++i)
                            if (xv[i] > 0.0) gx[i] += gout[i];
                    } else {
                        for (std::size_t i = 0; i < xv.size(); ++i)
                            gx[i] += gout[i] * gelu_grad_scalar(xv[i]);
                    }
                });
}

Tape::Ref Tape::embedding_gather(Ref table, IntTensor ids) {
    Tensor out = atinuke::embedding_gather(value(table), ids);
    return push(std::move(out), {table},
                [table, ids = std::move(ids)](const Tape& t, const Tensor& gout,
                                              std::vector<Tensor>& grads) {
                    const std::size_t dim = t.value(table).extent(1);
                    Tensor& gt = grads[static_cast<std::size_t>(table)];
                    for (std::size_t i = 0; i < ids.size(); ++i) {
                        const auto row = static_cast<std::size_t>(ids.data[i]);
                        simd::active().axpy(1.0, gout.data() + i * dim, gt.data() + row * dim, dim);
                    }
                });
}

Tape::Ref Tape::reshape(Ref x, Shape target) {
    Tensor out = atinuke::reshape(value(x), target);
    return push(std::move(out), {x},
                [x](const Tape& t, const Tensor& gout, std::vector<Tensor>& grads) {
                    acc(grads[static_cast<std::size_t>(x)],
                        atinuke::reshape(gout, t.value(x).shape()));
                });
}

Tape::Ref Tape::transpose_last2(Ref x) {
    Tensor out = atinuke::transpose_last2(value(x));
    return push(std::move(out), {x},
                [x](const Tape&, const Tensor& gout, std::vector<Tensor>& grads) {
                    acc(grads[static_cast<std::size_t>(x)], atinuke::transpose_last2(gout));
                });
}

Tape::Ref Tape::split_heads(Ref x, std::size_t head_count) {
    Tensor out = atinuke::split_heads(value(x), head_count);
    return push(std::move(out), {x},
                [x](const Tape&, const Tensor& gout, std::vector<Tensor>& grads) {
                    acc(grads[static_cast<std::size_t>(x)], atinuke::merge_heads(gout));
                });
}

Tape::Ref Tape::merge_heads(Ref x) {
    const std::size_t head_count = value(x).extent(1);
    Tensor out = atinuke::merge_heads(value(x));
    return push(std::move(out), {x},
                [x, head_count](const Tape&, const Tensor& gout, std::vector<Tensor>& grads) {
                    acc(grads[static_cast<std::size_t>(x)],
                        atinuke::split_heads(gout, head_count));
                });
}

Tape::Ref Tape::slice_seq(Ref x, std::size_t start, std::size_t len) {
    const Tensor& xv = value(x);
    if (xv.rank() != 3) throw ShapeError("slice_seq expects a rank-3 tensor");
    const std::size_t batch = xv.extent(0), seq = xv.extent(1), dim = xv.extent(2);
    if (start + len > seq) throw RangeError("slice_seq window exceeds sequence length");
    Tensor out({batch, len, dim});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t s = 0; s < len; ++s)
            for (std::size_t d = 0; d < dim; ++d)
                out[(b * len + s) * dim + d] = xv[(b * seq + (start + s)) * dim + d];
    return push(std::move(out), {x},
                [x, start, len](const Tape& t, const Tensor& gout, std::vector<Tensor>& grads) {
                    const Tensor& xv2 = t.value(x);
                    const std::size_t batch2 = xv2.extent(0), seq2 = xv2.extent(1),
                                      dim2 = xv2.extent(2);
                    Tensor& gx = grads[static_cast<std::size_t>(x)];
                    for (std::size_t b = 0; b < batch2; ++b)
                        for (std::size_t s = 0; s < len; ++s)
                            simd::active().axpy(1.0, gout.data() + (b * len + s) * dim2,
                                                gx.data() + (b * seq2 + (start + s)) * dim2, dim2);
                });
}

Tape::Ref Tape::dropout(Ref x, double rate, RunMode mode, PrngState& rng) {
    if (rate < 0.0 || rate >= 1.0) throw RangeError("dropout rate must be in [0, 1)");
    if (mode == RunMode::eval || rate == 0.0) return x;  // identity, no draws
    const Tensor& xv = value(x);
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor mask(xv.shape());
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = (rng.next_double() < rate) ? 0.0 : keep_scale;
    Tensor out(xv.shape());
    simd::active().mul(xv.data(), mask.data(), out.data(), xv.size());
    return push(std::move(out), {x},
                [x, mask = std::move(mask)](const Tape&, const Tensor& gout,
                                            std::vector<Tensor>& grads) {
                    Tensor& gx = grads[static_cast<std::size_t>(x)];
                    for (std::size_t i = 0; i < gout.size(); ++i) gx[i] += gout[i] * mask[i];
                });
}

Tape::Ref Tape::cross_entropy(Ref logits, IntTensor targets) {
    const double loss = cross_entropy_impl(value(logits), targets, 1.0, nullptr);
    return push(Tensor::scalar(loss), {logits},
                [logits, targets = std::move(targets)](const Tape& t, const Tensor& gout,
                                                       std::vector<Tensor>& grads) {
                    cross_entropy_impl(t.value(logits), targets, gout[0],
                                       &grads[static_cast<std::size_t>(logits)]);
                });
}

GradMap Tape::backward(Ref loss) const {
    if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size())
        throw Error("backward: loss ref not on this tape");
    if (nodes_[static_cast<std::size_t>(loss)].value.size() != 1)
        throw Error("backward: loss must be scalar, got shape " +
                    shape_str(nodes_[static_cast<std::size_t>(loss)].value.shape()));

    std::vector<Tensor> grads;
    grads.reserve(nodes_.size());
    for (const auto& n : nodes_) grads.emplace_back(n.value.shape());
    grads[static_cast<std::size_t>(loss)][0] = 1.0;

    for (std::size_t i = static_cast<std::size_t>(loss) + 1; i-- > 0;) {
        const Node& n = nodes_[i];
        if (n.back) n.back(*this, grads[i], grads);
    }

    GradMap out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (!nodes_[i].name.empty()) out[nodes_[i].name] = std::move(grads[i]);
    return out;
}

}  // namespace atinuke
