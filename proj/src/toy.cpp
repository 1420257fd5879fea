#include "atinuke/toy.hpp"

#include <cmath>

namespace atinuke {

namespace {
constexpr std::size_t kInputLen = 2 * kCopyPrefixLen;  // prefix + delim + prefix[:-1]
constexpr std::size_t kBatch = 16;
constexpr double kLearningRate = 0.05;
}  // namespace

ModelConfig copy_task_config() {
    ModelConfig cfg;
    cfg.vocab_size = kCopyVocab;
    cfg.model_dim = 32;
    cfg.key_dim = 0;
    cfg.hidden_dim = 64;
    cfg.head_count = 2;
    cfg.layer_count = 2;
    cfg.dropout_rate = 0.0;
    cfg.max_len = 32;
    cfg.causal = true;
    return cfg;
}

CopyBatch make_copy_batch(std::size_t batch, PrngState& rng) {
    CopyBatch b;
    b.inputs.shape = {batch, kInputLen};
    b.inputs.data.resize(batch * kInputLen);
    b.targets.shape = {batch, kCopyPrefixLen};
    b.targets.data.resize(batch * kCopyPrefixLen);
    for (std::size_t r = 0; r < batch; ++r) {
        std::int64_t prefix[kCopyPrefixLen];
        for (auto& t : prefix) t = static_cast<std::int64_t>(rng.next_u64() % (kCopyVocab - 1));
        std::int64_t* in = b.inputs.data.data() + r * kInputLen;
        for (std::size_t i = 0; i < kCopyPrefixLen; ++i) in[i] = prefix[i];
        in[kCopyPrefixLen] = kCopyDelimiter;
        for (std::size_t i = 0; i + 1 < kCopyPrefixLen; ++i) in[kCopyPrefixLen + 1 + i] = prefix[i];
        for (std::size_t i = 0; i < kCopyPrefixLen; ++i)
            b.targets.data[r * kCopyPrefixLen + i] = prefix[i];
    }
    return b;
}

double copy_task_loss(const Tensor& logits, const IntTensor& targets) {
    // keep only the copy window: positions kCopyPrefixLen .. end
    const std::size_t batch = logits.extent(0), seq = logits.extent(1), vocab = logits.extent(2);
    Tensor window({batch, kCopyPrefixLen, vocab});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t s = 0; s < kCopyPrefixLen; ++s)
            for (std::size_t v = 0; v < vocab; ++v)
                window[(b * kCopyPrefixLen + s) * vocab + v] =
                    logits[(b * seq + (kCopyPrefixLen + s)) * vocab + v];
    return cross_entropy(window, targets);
}

ToyTrainResult train_copy_task(std::size_t steps, std::uint64_t seed,
                               const std::function<void(std::size_t, double)>& log) {
    ToyTrainResult res;
    res.config = copy_task_config();
    res.config.seed = seed;

    PrngState init_rng(seed);
    res.params = init_params(res.config, init_rng);

    PrngState data_rng(seed ^ 0xC0FFEE123456789AULL);
    PrngState fwd_rng(seed + 1);  // dropout stream; fixed order keeps runs replayable

    for (std::size_t step = 1; step <= steps; ++step) {
        CopyBatch batch = make_copy_batch(kBatch, data_rng);
        Tape tape;
        ModelRefs refs = register_params(tape, res.params);
        auto logits = model_forward_tape(tape, batch.inputs, refs, res.config, RunMode::train,
                                         fwd_rng);
        auto window = tape.slice_seq(logits, kCopyPrefixLen, kCopyPrefixLen);
        auto loss_ref = tape.cross_entropy(window, batch.targets);
        const double loss = tape.value(loss_ref)[0];
        if (!std::isfinite(loss)) {
            res.diverged = true;
            return res;
        }
        if (step == 1 || step % 100 == 0) {
            res.logged_losses.emplace_back(step, loss);
            if (log) log(step, loss);
        }
        sgd_step(res.params, tape.backward(loss_ref), kLearningRate);
    }

    PrngState heldout_rng(seed ^ 0x5EEDFACE5EEDFACEULL);
    CopyBatch heldout = make_copy_batch(2 * kBatch, heldout_rng);
    PrngState eval_rng(0);
    Tensor logits = model_forward(heldout.inputs, res.params, res.config, RunMode::eval, eval_rng);
    res.heldout_loss = copy_task_loss(logits, heldout.targets);
    return res;
}

}  // namespace atinuke
