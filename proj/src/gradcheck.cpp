#include "atinuke/gradcheck.hpp"

#include <cmath>

namespace atinuke {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / denom;
}

ModelConfig gradcheck_config() {
    ModelConfig cfg;
    cfg.vocab_size = 5;
    cfg.model_dim = 4;
    cfg.key_dim = 0;
    cfg.hidden_dim = 8;  // lifts the total coordinate count past 200
    cfg.head_count = 2;
    cfg.layer_count = 1;
    cfg.dropout_rate = 0.0;
    cfg.max_len = 8;
    return cfg;
}

GradCheckReport run_gradcheck(std::uint64_t seed, std::size_t min_coords) {
    const ModelConfig cfg = gradcheck_config();
    PrngState init_rng(seed);
    ModelParams params = init_params(cfg, init_rng);

    PrngState data_rng(seed ^ 0x9E3779B97F4A7C15ULL);
    const std::size_t batch = 2, seq = 3;
    IntTensor tokens, targets;
    tokens.shape = targets.shape = {batch, seq};
    for (std::size_t i = 0; i < batch * seq; ++i) {
        tokens.data.push_back(static_cast<std::int64_t>(data_rng.next_u64() % cfg.vocab_size));
        targets.data.push_back(static_cast<std::int64_t>(data_rng.next_u64() % cfg.vocab_size));
    }

    // analytic gradients from one tape
    PrngState fwd_rng(0);
    Tape tape;
    ModelRefs refs = register_params(tape, params);
    auto logits = model_forward_tape(tape, tokens, refs, cfg, RunMode::eval, fwd_rng);
    GradMap grads = tape.backward(tape.cross_entropy(logits, targets));

    auto loss_at = [&](const ModelParams& p) {
        PrngState r(0);
        return cross_entropy(model_forward(tokens, p, cfg, RunMode::eval, r), targets);
    };

    const double h = 1e-5;
    GradCheckReport report;
    const std::size_t total = param_count(params);
    // every coordinate when the model is small enough, else an even stride
    const std::size_t step = total <= min_coords ? 1 : total / min_coords;

    for (auto& [name, tensor] : named_params(params)) {
        GradCheckReport::Group group;
        group.name = name;
        const Tensor& g = grads.at(name);
        for (std::size_t i = 0; i < tensor->size(); i += step) {
            const double saved = (*tensor)[i];
            (*tensor)[i] = saved + h;
            const double lp = loss_at(params);
            (*tensor)[i] = saved - h;
            const double lm = loss_at(params);
            (*tensor)[i] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double err = relative_error(g[i], fd);
            ++group.coords_checked;
            if (err > group.worst_rel_err) {
                group.worst_rel_err = err;
                group.worst_coord = name + "[" + std::to_string(i) + "]";
            }
        }
        report.coords_checked += group.coords_checked;
        if (group.worst_rel_err > report.worst_rel_err) {
            report.worst_rel_err = group.worst_rel_err;
            report.worst_coord = group.worst_coord;
        }
        report.groups.push_back(std::move(group));
    }
    return report;
}

}  // namespace atinuke
