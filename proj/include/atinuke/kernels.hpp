#pragma once

#include <cstddef>

#include "atinuke/rng.hpp"
#include "atinuke/tensor.hpp"

namespace atinuke {

enum class Activation { relu, gelu };

/// Matrix product with batching: all but the last two axes are batch axes,
/// which must match elementwise or broadcast from 1. Rank-2 operands act as
/// batch-1. Inner extents must agree.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Numerically stable softmax over the last axis (max-subtraction).
Tensor softmax_lastdim(const Tensor& x);

/// Per-last-axis standardization followed by gamma * xhat + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor activation(const Tensor& x, Activation kind);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);  // exact Gaussian-CDF form x * Phi(x)

double gelu_scalar(double x);
double gelu_grad_scalar(double x);  // Phi(x) + x * phi(x)

/// fan_in x fan_out matrix, i.i.d. uniform on [-b, b], b = sqrt(6/(fan_in+fan_out)).
Tensor xavier_uniform_init(std::size_t fan_in, std::size_t fan_out, PrngState& rng);

/// Output shape = shape(ids) x dim; row ids[i] of the table copied verbatim.
Tensor embedding_gather(const Tensor& table, const IntTensor& ids);

/// Elementwise a + b where b broadcasts to a's shape (ranks aligned at the
/// trailing axes, each b extent equal or 1).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);  // same shapes only
Tensor scale(const Tensor& x, double c);

Tensor transpose_last2(const Tensor& x);
Tensor reshape(const Tensor& x, Shape target);

/// Sum g over the axes that broadcast would have expanded, producing `target`.
/// Adjoint of broadcasting `target` up to g's shape.
Tensor reduce_to_shape(const Tensor& g, const Shape& target);

}  // namespace atinuke
