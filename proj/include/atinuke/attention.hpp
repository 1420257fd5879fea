#pragma once

#include <cstddef>

#include "atinuke/tensor.hpp"

namespace atinuke {

enum class ScaleDenominator { full_dim, head_dim };

struct AttentionParams {
    Tensor w_query, w_key, w_value, w_out;  // model_dim x model_dim each
};

struct AttentionConfig {
    std::size_t head_count = 1;
    std::size_t model_dim = 0;
    bool causal = false;
    ScaleDenominator scale_denominator = ScaleDenominator::full_dim;

    std::size_t head_dim() const { return model_dim / head_count; }
};

/// batch x seq x model_dim -> batch x head x seq x head_dim.
Tensor split_heads(const Tensor& x, std::size_t head_count);

/// Inverse of split_heads.
Tensor merge_heads(const Tensor& x);

/// seq x seq additive mask: 0 on and below the diagonal, the most negative
/// finite double above it (kept finite so softmax arithmetic stays clean).
Tensor causal_mask(std::size_t seq);

/// Per head h: A_h = softmax(Q_h K_h^T / sqrt(D) + mask), then
/// merge_heads(A_h V_h) * w_out. D is model_dim or head_dim per config.
Tensor attention_forward(const Tensor& x, const AttentionParams& p, const AttentionConfig& cfg);

}  // namespace atinuke
