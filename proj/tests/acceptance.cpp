// Acceptance suite: one self-contained check per engine guarantee, each
// reported as a single PASS/FAIL line. Exits non-zero when any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "atinuke/attention.hpp"
#include "atinuke/checkpoint.hpp"
#include "atinuke/gradcheck.hpp"
#include "atinuke/kernels.hpp"
#include "atinuke/model.hpp"
#include "atinuke/positional.hpp"
#include "atinuke/toy.hpp"

using namespace atinuke;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("%-4s %2d  %-28s%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.empty() ? "" : "  ", detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor random_tensor(const Shape& shape, PrngState& rng) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_uniform(-1.0, 1.0);
    return t;
}

IntTensor random_tokens(std::size_t batch, std::size_t seq, std::size_t vocab, PrngState& rng) {
    IntTensor t({batch, seq}, std::vector<std::int64_t>(batch * seq, 0));
    for (auto& v : t.data) v = static_cast<std::int64_t>(rng.next_u64() % vocab);
    return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

ModelConfig listing_config() {
    ModelConfig cfg;
    cfg.vocab_size = 10;
    cfg.model_dim = 18;
    cfg.key_dim = 50;
    cfg.hidden_dim = 100;
    cfg.head_count = 2;
    cfg.layer_count = 3;
    cfg.dropout_rate = 0.1;
    cfg.max_len = 50000;
    return cfg;
}

// Independent parameter counter: walks the documented shapes from the config
// alone, never touching the tensors.
std::size_t counted_params(const ModelConfig& c) {
    const std::size_t d = c.model_dim, h = c.hidden_dim, v = c.vocab_size;
    std::size_t per_block = 4 * d * d            // attention projections
                            + d * h + h          // ff_w1, ff_b1
                            + h * d + d          // ff_w2, ff_b2
                            + 4 * d;             // two norms, gamma + beta each
    return v * d + c.layer_count * per_block + d * v + v;
}

// Straight-line per-head attention oracle, independent of the kernel path.
Tensor attention_oracle(const Tensor& x, const AttentionParams& p, const AttentionConfig& cfg) {
    const std::size_t B = x.extent(0), S = x.extent(1), D = x.extent(2);
    const std::size_t H = cfg.head_count, hd = D / H;
    const double denom =
        cfg.scale_denominator == ScaleDenominator::full_dim ? double(D) : double(hd);

    auto project = [&](const Tensor& w) {
        std::vector<double> out(B * S * D, 0.0);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t j = 0; j < D; ++j) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < D; ++i)
                        acc += x[(b * S + s) * D + i] * w[i * D + j];
                    out[(b * S + s) * D + j] = acc;
                }
        return out;
    };
    auto q = project(p.w_query), k = project(p.w_key), v = project(p.w_value);

    std::vector<double> merged(B * S * D, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t t = 0; t < S; ++t) {
                std::vector<double> score(S);
                for (std::size_t s = 0; s < S; ++s) {
                    double acc = 0.0;
                    for (std::size_t d = 0; d < hd; ++d)
                        acc += q[(b * S + t) * D + h * hd + d] * k[(b * S + s) * D + h * hd + d];
                    score[s] = acc / std::sqrt(denom);
                    if (cfg.causal && s > t) score[s] += std::numeric_limits<double>::lowest();
                }
                double mx = score[0];
                for (double sc : score) mx = std::max(mx, sc);
                double z = 0.0;
                for (auto& sc : score) {
                    sc = std::exp(sc - mx);
                    z += sc;
                }
                for (auto& sc : score) sc /= z;
                for (std::size_t d = 0; d < hd; ++d) {
                    double acc = 0.0;
                    for (std::size_t s = 0; s < S; ++s)
                        acc += score[s] * v[(b * S + s) * D + h * hd + d];
                    merged[(b * S + t) * D + h * hd + d] = acc;
                }
            }

    Tensor out({B, S, D});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < S; ++t)
            for (std::size_t j = 0; j < D; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < D; ++i)
                    acc += merged[(b * S + t) * D + i] * p.w_out[i * D + j];
                out[(b * S + t) * D + j] = acc;
            }
    return out;
}

void check_forward_shape() {
    const auto t0 = std::chrono::steady_clock::now();
    ModelConfig cfg = listing_config();
    PrngState rng(7);
    ModelParams params = init_params(cfg, rng);
    IntTensor tokens = random_tokens(25, 100, cfg.vocab_size, rng);
    PrngState fwd(0);
    Tensor logits = model_forward(tokens, params, cfg, RunMode::eval, fwd);
    const double secs = seconds_since(t0);
    const bool ok = logits.shape() == Shape{25, 100, 10} && secs < 5.0;
    char detail[96];
    std::snprintf(detail, sizeof detail, "25x100 batch -> %zux%zux%zu in %.2f s",
                  logits.extent(0), logits.extent(1), logits.extent(2), secs);
    report(1, "forward shape", ok, detail);
}

void check_positional_table() {
    bool ok = true;
    PositionalTable t2 = build_positional_table(2, 4);
    PositionalTable t4 = build_positional_table(4, 4);
    // row 0 alternates 0,1
    for (std::size_t j = 0; j < 4; ++j) ok = ok && t4.table.at({0, j}) == (j % 2 ? 1.0 : 0.0);
    ok = ok && std::fabs(t2.table.at({1, 0}) - std::sin(1.0)) <= 1e-12;
    ok = ok && std::fabs(t2.table.at({1, 1}) - std::cos(1.0)) <= 1e-12;
    ok = ok && std::fabs(t4.table.at({2, 2}) - std::sin(0.02)) <= 1e-12;

    PositionalTable big = build_positional_table(16, 512);
    std::set<std::vector<long long>> rows;
    for (std::size_t p = 0; p < 512; ++p) {
        std::vector<long long> key(16);
        for (std::size_t j = 0; j < 16; ++j) key[j] = std::llround(big.table.at({p, j}) * 1e9);
        rows.insert(key);
    }
    ok = ok && rows.size() == 512;
    report(2, "positional table", ok, "spot values <= 1e-12, 512 distinct rows");
}

void check_attention_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    PrngState rng(31337);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t B = 1 + rng.next_u64() % 2;
        const std::size_t S = 1 + rng.next_u64() % 5;
        const std::size_t H = std::vector<std::size_t>{1, 2, 4}[rng.next_u64() % 3];
        const std::size_t D = H * (1 + rng.next_u64() % (8 / H));
        AttentionParams p{random_tensor({D, D}, rng), random_tensor({D, D}, rng),
                          random_tensor({D, D}, rng), random_tensor({D, D}, rng)};
        Tensor x = random_tensor({B, S, D}, rng);
        AttentionConfig cfg{H, D, (rng.next_u64() & 1) != 0,
                            (rng.next_u64() & 1) ? ScaleDenominator::full_dim
                                                 : ScaleDenominator::head_dim};
        worst = std::max(worst, max_abs_diff(attention_forward(x, p, cfg),
                                             attention_oracle(x, p, cfg)));
    }
    const double secs = seconds_since(t0);
    char detail[96];
    std::snprintf(detail, sizeof detail, "50 instances, worst |diff| %.2e in %.2f s", worst, secs);
    report(3, "attention oracle", worst < 1e-10 && secs < 10.0, detail);
}

void check_causal_independence() {
    ModelConfig cfg;
    cfg.vocab_size = 11;
    cfg.model_dim = 8;
    cfg.hidden_dim = 12;
    cfg.head_count = 2;
    cfg.layer_count = 2;
    cfg.causal = true;
    cfg.max_len = 16;
    PrngState rng(101);
    ModelParams params = init_params(cfg, rng);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const std::size_t S = 6;
        IntTensor tokens = random_tokens(1, S, cfg.vocab_size, rng);
        const std::size_t t = rng.next_u64() % (S - 1);
        IntTensor perturbed = tokens;
        for (std::size_t s = t + 1; s < S; ++s)
            perturbed.data[s] = static_cast<std::int64_t>(rng.next_u64() % cfg.vocab_size);
        PrngState f1(0), f2(0);
        Tensor a = model_forward(tokens, params, cfg, RunMode::eval, f1);
        Tensor b = model_forward(perturbed, params, cfg, RunMode::eval, f2);
        for (std::size_t s = 0; s <= t; ++s)
            for (std::size_t v = 0; v < cfg.vocab_size; ++v)
                ok = ok && a.at({0, s, v}) == b.at({0, s, v});
    }
    report(4, "causal independence", ok, "20 trials, prefix logits bitwise equal");
}

void check_permutation_equivariance() {
    ModelConfig cfg;
    cfg.vocab_size = 9;
    cfg.model_dim = 8;
    cfg.hidden_dim = 12;
    cfg.head_count = 2;
    cfg.layer_count = 2;
    cfg.disable_pe = true;
    cfg.max_len = 16;
    PrngState rng(202);
    ModelParams params = init_params(cfg, rng);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t S = 5;
        IntTensor tokens = random_tokens(1, S, cfg.vocab_size, rng);
        // random permutation by repeated swaps
        std::vector<std::size_t> perm{0, 1, 2, 3, 4};
        for (std::size_t i = S - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
        IntTensor shuffled({1, S}, std::vector<std::int64_t>(S, 0));
        for (std::size_t s = 0; s < S; ++s) shuffled.data[s] = tokens.data[perm[s]];
        PrngState f1(0), f2(0);
        Tensor a = model_forward(tokens, params, cfg, RunMode::eval, f1);
        Tensor b = model_forward(shuffled, params, cfg, RunMode::eval, f2);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < cfg.vocab_size; ++v)
                worst = std::max(worst, std::fabs(b.at({0, s, v}) - a.at({0, perm[s], v})));
    }
    char detail[64];
    std::snprintf(detail, sizeof detail, "20 trials, worst |diff| %.2e", worst);
    report(5, "permutation equivariance", worst < 1e-9, detail);
}

void check_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    GradCheckReport rep = run_gradcheck(2024);
    const double secs = seconds_since(t0);
    const bool ok = rep.coords_checked >= 200 && rep.worst_rel_err <= 1e-4 && secs < 60.0;
    char detail[96];
    std::snprintf(detail, sizeof detail, "%zu coords, worst rel err %.2e in %.2f s",
                  rep.coords_checked, rep.worst_rel_err, secs);
    report(6, "gradient verification", ok, detail);
}

void check_normalization_invariants() {
    PrngState rng(303);
    double worst_sum = 0.0, worst_mean = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng.next_u64() % 24;
        Tensor row({1, n});
        for (std::size_t j = 0; j < n; ++j) row[j] = rng.next_uniform(-30.0, 30.0);
        Tensor probs = softmax_lastdim(row);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += probs[j];
        worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
    }
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 2 + rng.next_u64() % 24;
        Tensor row({1, n});
        for (std::size_t j = 0; j < n; ++j) row[j] = rng.next_uniform(-30.0, 30.0);
        Tensor normed = layer_norm(row, Tensor::ones({n}), Tensor::zeros({n}), 1e-5);
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += normed[j];
        worst_mean = std::max(worst_mean, std::fabs(mean / double(n)));
    }
    char detail[96];
    std::snprintf(detail, sizeof detail, "softmax sum err %.2e, layer-norm mean %.2e", worst_sum,
                  worst_mean);
    report(7, "softmax/layer-norm invariants", worst_sum <= 1e-12 && worst_mean <= 1e-9, detail);
}

void check_checkpoint_roundtrip() {
    ModelConfig cfg = listing_config();
    PrngState rng(7);
    ModelParams params = init_params(cfg, rng);
    const std::size_t expect = counted_params(cfg);
    bool ok = param_count(params) == expect && expect == 15628;

    const fs::path dir = fs::temp_directory_path() / ("atnk_acc_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const fs::path p1 = dir / "one.atnk", p2 = dir / "two.atnk";
    save_checkpoint(params, cfg, p1.string());
    CheckpointData loaded = load_checkpoint(p1.string());
    save_checkpoint(loaded.params, loaded.config, p2.string());
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    ok = ok && !slurp(p1).empty() && slurp(p1) == slurp(p2);
    fs::remove_all(dir);
    char detail[64];
    std::snprintf(detail, sizeof detail, "save-load-save byte-identical, %zu params", expect);
    report(8, "checkpoint round-trip", ok, detail);
}

void check_toy_learning() {
    const auto t0 = std::chrono::steady_clock::now();
    ToyTrainResult res = train_copy_task(2000, 7);
    const double secs = seconds_since(t0);
    const bool ok = !res.diverged && res.heldout_loss < 0.1 && secs < 60.0;
    char detail[96];
    std::snprintf(detail, sizeof detail, "held-out loss %.4f in %.1f s", res.heldout_loss, secs);
    report(9, "toy copy-task learning", ok, detail);
}

void check_residual_passthrough() {
    ModelConfig cfg = listing_config();
    cfg.max_len = 64;
    PrngState rng(13);
    ModelParams params = init_params(cfg, rng);
    for (auto& b : params.blocks) {
        b.attention.w_out = Tensor::zeros(b.attention.w_out.shape());
        b.ff_w2 = Tensor::zeros(b.ff_w2.shape());
    }
    IntTensor tokens = random_tokens(2, 5, cfg.vocab_size, rng);
    PrngState fwd(0);
    Tensor logits = model_forward(tokens, params, cfg, RunMode::eval, fwd);

    const PositionalTable pt = build_positional_table(cfg.model_dim, cfg.max_len);
    IntTensor positions({2, 5}, {0, 1, 2, 3, 4, 0, 1, 2, 3, 4});
    Tensor base =
        add(embedding_gather(params.embedding, tokens), lookup_positions(pt, positions));
    Tensor expect = add(matmul(base, params.final_w), params.final_b);
    report(10, "residual passthrough", bitwise_equal(logits, expect),
           "zeroed blocks reduce to the final linear map");
}

}  // namespace

int main() {
    check_forward_shape();
    check_positional_table();
    check_attention_oracle();
    check_causal_independence();
    check_permutation_equivariance();
    check_gradients();
    check_normalization_invariants();
    check_checkpoint_roundtrip();
    check_toy_learning();
    check_residual_passthrough();
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
