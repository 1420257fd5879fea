#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "atinuke/attention.hpp"
#include "atinuke/autodiff.hpp"
#include "atinuke/positional.hpp"
#include "atinuke/rng.hpp"
#include "atinuke/tensor.hpp"

namespace atinuke {

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t model_dim = 0;
    std::size_t key_dim = 0;  // accepted for constructor parity, never used
    std::size_t hidden_dim = 0;
    std::size_t head_count = 1;
    std::size_t layer_count = 1;
    double dropout_rate = 0.0;
    std::size_t max_len = 50000;

    Activation activation = Activation::relu;
    bool causal = false;
    bool per_layer_pe = false;       // re-add the PE rows before every block
    bool disable_pe = false;         // diagnostic switch: skip PE addition entirely
    ScaleDenominator scale_denominator = ScaleDenominator::full_dim;
    double layer_norm_eps = 1e-5;
    std::uint64_t seed = 0;

    /// Empty when valid, otherwise one message per violated constraint.
    std::vector<std::string> validate() const;
    void validate_or_throw() const;  // throws ConfigError with the full list

    AttentionConfig attention_config() const {
        return {head_count, model_dim, causal, scale_denominator};
    }
};

struct BlockParams {
    AttentionParams attention;
    Tensor ff_w1;  // model_dim x hidden_dim
    Tensor ff_b1;  // hidden_dim
    Tensor ff_w2;  // hidden_dim x model_dim
    Tensor ff_b2;  // model_dim
    Tensor norm1_gamma, norm1_beta;  // model_dim
    Tensor norm2_gamma, norm2_beta;  // model_dim
};

struct ModelParams {
    Tensor embedding;  // vocab x model_dim
    std::vector<BlockParams> blocks;
    Tensor final_w;  // model_dim x vocab
    Tensor final_b;  // vocab
};

/// Xavier-uniform matrices, zero biases and norm betas, unit norm gammas.
/// Deterministic for a given seed; draw order is embedding, then per block
/// w_query, w_key, w_value, w_out, ff_w1, ff_w2, then final_w.
ModelParams init_params(const ModelConfig& cfg, PrngState& rng);

std::size_t param_count(const ModelParams& p);

/// Stable, sorted-compatible names: "embedding", "blocks.<i>.attention.w_query",
/// "blocks.<i>.ff_w1", ..., "final_w", "final_b". Shared by the checkpoint
/// writer, the tape and the optimizer.
std::vector<std::pair<std::string, const Tensor*>> named_params(const ModelParams& p);
std::vector<std::pair<std::string, Tensor*>> named_params(ModelParams& p);

Tensor dropout_apply(const Tensor& x, double rate, RunMode mode, PrngState& rng);

/// Pre-norm residual block:
///   x <- x + Drop(Attn(LN1(x)));  x <- x + Drop(FF(LN2(x)))
Tensor block_forward(const Tensor& x, const BlockParams& b, const ModelConfig& cfg,
                     RunMode mode, PrngState& rng);

/// logits = FinalLinear(Block_L(...Block_1(Drop(Embed(tokens) + PE))...)),
/// positions 0..seq-1 per row. tokens: batch x seq, result batch x seq x vocab.
Tensor model_forward(const IntTensor& tokens, const ModelParams& p, const ModelConfig& cfg,
                     RunMode mode, PrngState& rng);

// ---- tape builders (training / gradient checking) ----

struct AttentionRefs {
    Tape::Ref w_query, w_key, w_value, w_out;
};
struct BlockRefs {
    AttentionRefs attention;
    Tape::Ref ff_w1, ff_b1, ff_w2, ff_b2;
    Tape::Ref norm1_gamma, norm1_beta, norm2_gamma, norm2_beta;
};
struct ModelRefs {
    Tape::Ref embedding;
    std::vector<BlockRefs> blocks;
    Tape::Ref final_w, final_b;
};

/// Registers every parameter as a named tape leaf.
ModelRefs register_params(Tape& tape, const ModelParams& p);

Tape::Ref attention_forward_tape(Tape& tape, Tape::Ref x, const AttentionRefs& w,
                                 const AttentionConfig& cfg);
Tape::Ref block_forward_tape(Tape& tape, Tape::Ref x, const BlockRefs& b,
                             const ModelConfig& cfg, RunMode mode, PrngState& rng);
Tape::Ref model_forward_tape(Tape& tape, const IntTensor& tokens, const ModelRefs& refs,
                             const ModelConfig& cfg, RunMode mode, PrngState& rng);

/// theta <- theta - lr * g for every named parameter present in grads.
void sgd_step(ModelParams& params, const GradMap& grads, double lr);

}  // namespace atinuke
