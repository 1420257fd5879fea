#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "atinuke/kernels.hpp"
#include "atinuke/rng.hpp"
#include "atinuke/tensor.hpp"

namespace atinuke {

enum class RunMode { train, eval };

/// Gradients keyed by parameter name. Shapes match the parameters; leaves
/// unreachable from the loss hold zeros.
using GradMap = std::map<std::string, Tensor>;

/// Mean over batch x seq of -log softmax(logits)[target], log-sum-exp
/// stabilized. logits: batch x seq x vocab, targets: batch x seq.
double cross_entropy(const Tensor& logits, const IntTensor& targets);

/// Reverse-mode tape over the tensor kernels. Records one node per produced
/// tensor in topological order; backward() replays the records in reverse.
/// Single-owner during recording and backward.
class Tape {
public:
    using Ref = std::int32_t;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf tensor. A nonempty name marks a parameter whose gradient is
    /// reported in the GradMap; unnamed leaves are constants.
    Ref leaf(Tensor value, std::string name = {});

    const Tensor& value(Ref r) const { return nodes_.at(static_cast<std::size_t>(r)).value; }
    std::size_t node_count() const { return nodes_.size(); }

    Ref matmul(Ref a, Ref b);
    Ref add(Ref a, Ref b);  // b broadcastable to a's shape
    Ref scale(Ref a, double c);
    Ref softmax_lastdim(Ref x);
    Ref layer_norm(Ref x, Ref gamma, Ref beta, double eps);
    Ref activation(Ref x, Activation kind);
    Ref embedding_gather(Ref table, IntTensor ids);
    Ref reshape(Ref x, Shape target);
    Ref transpose_last2(Ref x);
    Ref split_heads(Ref x, std::size_t head_count);
    Ref merge_heads(Ref x);
    /// Narrow along axis 1 (the sequence axis of a rank-3 tensor).
    Ref slice_seq(Ref x, std::size_t start, std::size_t len);
    /// Train mode samples and records a mask (inverted scaling); eval is the
    /// identity and consumes no randomness.
    Ref dropout(Ref x, double rate, RunMode mode, PrngState& rng);
    /// Scalar loss node.
    Ref cross_entropy(Ref logits, IntTensor targets);

    /// d(loss)/d(leaf) for every named leaf. loss must be scalar. Does not
    /// mutate the tape; repeated calls give identical results.
    GradMap backward(Ref loss) const;

private:
    using BackwardFn =
        std::function<void(const Tape&, const Tensor& gout, std::vector<Tensor>& grads)>;

    struct Node {
        Tensor value;
        std::string name;
        std::vector<Ref> parents;
        BackwardFn back;  // null for leaves
    };

    Ref push(Tensor value, std::vector<Ref> parents, BackwardFn back, std::string name = {});

    std::vector<Node> nodes_;
};

}  // namespace atinuke
