#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "atinuke/model.hpp"

namespace atinuke {

/// Synthetic copy task: random prefix, delimiter token, prefix repeated.
/// The model is trained (causal, next-token) to reproduce the prefix after
/// the delimiter; loss is measured on the copied region only.

inline constexpr std::size_t kCopyVocab = 16;
inline constexpr std::int64_t kCopyDelimiter = 15;  // data tokens are 0..14
inline constexpr std::size_t kCopyPrefixLen = 5;

ModelConfig copy_task_config();

struct CopyBatch {
    IntTensor inputs;   // batch x (2*prefix_len)
    IntTensor targets;  // batch x prefix_len (the prefix to reproduce)
};
CopyBatch make_copy_batch(std::size_t batch, PrngState& rng);

/// Loss over the copy region of a forward pass (no tape).
double copy_task_loss(const Tensor& logits, const IntTensor& targets);

struct ToyTrainResult {
    ModelConfig config;
    ModelParams params;
    std::vector<std::pair<std::size_t, double>> logged_losses;  // (step, loss)
    double heldout_loss = 0.0;
    bool diverged = false;
};

ToyTrainResult train_copy_task(std::size_t steps, std::uint64_t seed,
                               const std::function<void(std::size_t, double)>& log = nullptr);

}  // namespace atinuke
