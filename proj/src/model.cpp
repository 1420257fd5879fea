#include "atinuke/model.hpp"

#include <cmath>

#include "atinuke/errors.hpp"
#include "atinuke/simd.hpp"

namespace atinuke {

std::vector<std::string> ModelConfig::validate() const {
    std::vector<std::string> v;
    if (vocab_size < 1) v.push_back("vocab_size must be >= 1");
    if (model_dim < 1) v.push_back("model_dim must be >= 1");
    if (model_dim % 2 != 0)
        v.push_back("model_dim must be even (sin/cos positional pairs), got " +
                    std::to_string(model_dim));
    if (head_count < 1) v.push_back("head_count must be >= 1");
    if (head_count >= 1 && model_dim >= 1 && model_dim % head_count != 0)
        v.push_back("model_dim " + std::to_string(model_dim) +
                    " must be divisible by head_count " + std::to_string(head_count));
    if (hidden_dim < 1) v.push_back("hidden_dim must be >= 1");
    if (layer_count < 1) v.push_back("layer_count must be >= 1");
    if (max_len < 1) v.push_back("max_len must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        v.push_back("dropout_rate must be in [0, 1), got " + std::to_string(dropout_rate));
    if (!(layer_norm_eps > 0.0)) v.push_back("layer_norm_eps must be > 0");
    return v;
}

void ModelConfig::validate_or_throw() const {
    auto v = validate();
    if (!v.empty()) throw ConfigError(std::move(v));
}

ModelParams init_params(const ModelConfig& cfg, PrngState& rng) {
    cfg.validate_or_throw();
    ModelParams p;
    p.embedding = xavier_uniform_init(cfg.vocab_size, cfg.model_dim, rng);
    p.blocks.resize(cfg.layer_count);
    for (auto& b : p.blocks) {
        b.attention.w_query = xavier_uniform_init(cfg.model_dim, cfg.model_dim, rng);
        b.attention.w_key = xavier_uniform_init(cfg.model_dim, cfg.model_dim, rng);
        b.attention.w_value = xavier_uniform_init(cfg.model_dim, cfg.model_dim, rng);
        b.attention.w_out = xavier_uniform_init(cfg.model_dim, cfg.model_dim, rng);
        b.ff_w1 = xavier_uniform_init(cfg.model_dim, cfg.hidden_dim, rng);
        b.ff_b1 = Tensor::zeros({cfg.hidden_dim});
        b.ff_w2 = xavier_uniform_init(cfg.hidden_dim, cfg.model_dim, rng);
        b.ff_b2 = Tensor::zeros({cfg.model_dim});
        b.norm1_gamma = Tensor::ones({cfg.model_dim});
        b.norm1_beta = Tensor::zeros({cfg.model_dim});
        b.norm2_gamma = Tensor::ones({cfg.model_dim});
        b.norm2_beta = Tensor::zeros({cfg.model_dim});
    }
    p.final_w = xavier_uniform_init(cfg.model_dim, cfg.vocab_size, rng);
    p.final_b = Tensor::zeros({cfg.vocab_size});
    return p;
}

std::size_t param_count(const ModelParams& p) {
    std::size_t n = 0;
    for (const auto& [name, t] : named_params(p)) n += t->size();
    return n;
}

namespace {
template <typename Params, typename TensorPtr>
std::vector<std::pair<std::string, TensorPtr>> named_params_impl(Params& p) {
    std::vector<std::pair<std::string, TensorPtr>> out;
    out.emplace_back("embedding", &p.embedding);
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        auto& b = p.blocks[i];
        const std::string pre = "blocks." + std::to_string(i) + ".";
        out.emplace_back(pre + "attention.w_query", &b.attention.w_query);
        out.emplace_back(pre + "attention.w_key", &b.attention.w_key);
        out.emplace_back(pre + "attention.w_value", &b.attention.w_value);
        out.emplace_back(pre + "attention.w_out", &b.attention.w_out);
        out.emplace_back(pre + "ff_w1", &b.ff_w1);
        out.emplace_back(pre + "ff_b1", &b.ff_b1);
        out.emplace_back(pre + "ff_w2", &b.ff_w2);
        out.emplace_back(pre + "ff_b2", &b.ff_b2);
        out.emplace_back(pre + "norm1_gamma", &b.norm1_gamma);
        out.emplace_back(pre + "norm1_beta", &b.norm1_beta);
        out.emplace_back(pre + "norm2_gamma", &b.norm2_gamma);
        out.emplace_back(pre + "norm2_beta", &b.norm2_beta);
    }
    out.emplace_back("final_w", &p.final_w);
    out.emplace_back("final_b", &p.final_b);
    return out;
}
}  // namespace

std::vector<std::pair<std::string, const Tensor*>> named_params(const ModelParams& p) {
    return named_params_impl<const ModelParams, const Tensor*>(p);
}
std::vector<std::pair<std::string, Tensor*>> named_params(ModelParams& p) {
    return named_params_impl<ModelParams, Tensor*>(p);
}

Tensor dropout_apply(const Tensor& x, double rate, RunMode mode, PrngState& rng) {
    Tape tape;
    return tape.value(tape.dropout(tape.leaf(x), rate, mode, rng));
}

// ---- tape builders ----

ModelRefs register_params(Tape& tape, const ModelParams& p) {
    ModelRefs r;
    r.embedding = tape.leaf(p.embedding, "embedding");
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        const auto& b = p.blocks[i];
        const std::string pre = "blocks." + std::to_string(i) + ".";
        BlockRefs br;
        br.attention.w_query = tape.leaf(b.attention.w_query, pre + "attention.w_query");
        br.attention.w_key = tape.leaf(b.attention.w_key, pre + "attention.w_key");
        br.attention.w_value = tape.leaf(b.attention.w_value, pre + "attention.w_value");
        br.attention.w_out = tape.leaf(b.attention.w_out, pre + "attention.w_out");
        br.ff_w1 = tape.leaf(b.ff_w1, pre + "ff_w1");
        br.ff_b1 = tape.leaf(b.ff_b1, pre + "ff_b1");
        br.ff_w2 = tape.leaf(b.ff_w2, pre + "ff_w2");
        br.ff_b2 = tape.leaf(b.ff_b2, pre + "ff_b2");
        br.norm1_gamma = tape.leaf(b.norm1_gamma, pre + "norm1_gamma");
        br.norm1_beta = tape.leaf(b.norm1_beta, pre + "norm1_beta");
        br.norm2_gamma = tape.leaf(b.norm2_gamma, pre + "norm2_gamma");
        br.norm2_beta = tape.leaf(b.norm2_beta, pre + "norm2_beta");
        r.blocks.push_back(br);
    }
    r.final_w = tape.leaf(p.final_w, "final_w");
    r.final_b = tape.leaf(p.final_b, "final_b");
    return r;
}

Tape::Ref attention_forward_tape(Tape& tape, Tape::Ref x, const AttentionRefs& w,
                                 const AttentionConfig& cfg) {
    const std::size_t seq = tape.value(x).extent(1);
    const double denom = cfg.scale_denominator == ScaleDenominator::full_dim
                             ? static_cast<double>(cfg.model_dim)
                             : static_cast<double>(cfg.head_dim());

    auto q = tape.split_heads(tape.matmul(x, w.w_query), cfg.head_count);
    auto k = tape.split_heads(tape.matmul(x, w.w_key), cfg.head_count);
    auto v = tape.split_heads(tape.matmul(x, w.w_value), cfg.head_count);

    auto scores = tape.scale(tape.matmul(q, tape.transpose_last2(k)), 1.0 / std::sqrt(denom));
    if (cfg.causal) scores = tape.add(scores, tape.leaf(causal_mask(seq)));
    auto attn = tape.softmax_lastdim(scores);
    auto merged = tape.merge_heads(tape.matmul(attn, v));
    return tape.matmul(merged, w.w_out);
}

Tape::Ref block_forward_tape(Tape& tape, Tape::Ref x, const BlockRefs& b,
                             const ModelConfig& cfg, RunMode mode, PrngState& rng) {
    auto h1 = tape.layer_norm(x, b.norm1_gamma, b.norm1_beta, cfg.layer_norm_eps);
    auto attn = attention_forward_tape(tape, h1, b.attention, cfg.attention_config());
    x = tape.add(x, tape.dropout(attn, cfg.dropout_rate, mode, rng));

    auto h2 = tape.layer_norm(x, b.norm2_gamma, b.norm2_beta, cfg.layer_norm_eps);
    auto f = tape.add(tape.matmul(h2, b.ff_w1), b.ff_b1);
    f = tape.activation(f, cfg.activation);
    f = tape.add(tape.matmul(f, b.ff_w2), b.ff_b2);
    return tape.add(x, tape.dropout(f, cfg.dropout_rate, mode, rng));
}

Tape::Ref model_forward_tape(Tape& tape, const IntTensor& tokens, const ModelRefs& refs,
                             const ModelConfig& cfg, RunMode mode, PrngState& rng) {
    if (tokens.rank() != 2) throw ShapeError("tokens must be batch x seq");
    const std::size_t batch = tokens.extent(0), seq = tokens.extent(1);
    if (seq > cfg.max_len)
        throw RangeError("sequence length " + std::to_string(seq) + " exceeds max_len " +
                         std::to_string(cfg.max_len));

    auto x = tape.embedding_gather(refs.embedding, tokens);

    Tape::Ref pe = -1;
    if (!cfg.disable_pe) {
        const PositionalTable pt = build_positional_table(cfg.model_dim, cfg.max_len);
        IntTensor positions;
        positions.shape = {batch, seq};
        positions.data.resize(batch * seq);
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t s = 0; s < seq; ++s)
                positions.data[b * seq + s] = static_cast<std::int64_t>(s);
        pe = tape.leaf(lookup_positions(pt, positions));
        x = tape.add(x, pe);
    }
    x = tape.dropout(x, cfg.dropout_rate, mode, rng);

    for (const auto& block : refs.blocks) {
        if (cfg.per_layer_pe && !cfg.disable_pe) x = tape.add(x, pe);
        x = block_forward_tape(tape, x, block, cfg, mode, rng);
    }
    return tape.add(tape.matmul(x, refs.final_w), refs.final_b);
}

// ---- eval wrappers ----

Tensor attention_forward(const Tensor& x, const AttentionParams& p, const AttentionConfig& cfg) {
    if (!x.all_finite()) throw NumericError("attention_forward: non-finite input");
    if (x.rank() != 3 || x.extent(2) != cfg.model_dim)
        throw ShapeError("attention input " + shape_str(x.shape()) + " does not match model_dim " +
                         std::to_string(cfg.model_dim));
    Tape tape;
    AttentionRefs w{tape.leaf(p.w_query), tape.leaf(p.w_key), tape.leaf(p.w_value),
                    tape.leaf(p.w_out)};
    return tape.value(attention_forward_tape(tape, tape.leaf(x), w, cfg));
}

Tensor block_forward(const Tensor& x, const BlockParams& b, const ModelConfig& cfg,
                     RunMode mode, PrngState& rng) {
    Tape tape;
    BlockRefs br;
    br.attention = {tape.leaf(b.attention.w_query), tape.leaf(b.attention.w_key),
                    tape.leaf(b.attention.w_value), tape.leaf(b.attention.w_out)};
    br.ff_w1 = tape.leaf(b.ff_w1);
    br.ff_b1 = tape.leaf(b.ff_b1);
    br.ff_w2 = tape.leaf(b.ff_w2);
    br.ff_b2 = tape.leaf(b.ff_b2);
    br.norm1_gamma = tape.leaf(b.norm1_gamma);
    br.norm1_beta = tape.leaf(b.norm1_beta);
    br.norm2_gamma = tape.leaf(b.norm2_gamma);
    br.norm2_beta = tape.leaf(b.norm2_beta);
    Tensor out = tape.value(block_forward_tape(tape, tape.leaf(x), br, cfg, mode, rng));
    if (!out.all_finite()) throw NumericError("block_forward produced non-finite values");
    return out;
}

Tensor model_forward(const IntTensor& tokens, const ModelParams& p, const ModelConfig& cfg,
                     RunMode mode, PrngState& rng) {
    Tape tape;
    ModelRefs refs = register_params(tape, p);
    return tape.value(model_forward_tape(tape, tokens, refs, cfg, mode, rng));
}

void sgd_step(ModelParams& params, const GradMap& grads, double lr) {
    if (!(lr > 0.0)) throw RangeError("sgd_step: lr must be > 0");
    for (auto& [name, t] : named_params(params)) {
        auto it = grads.find(name);
        if (it == grads.end()) continue;
        if (it->second.shape() != t->shape())
            throw ShapeError("gradient shape " + shape_str(it->second.shape()) +
                             " does not match parameter '" + name + "' " + shape_str(t->shape()));
        simd::active().axpy(-lr, it->second.data(), t->data(), t->size());
    }
}

}  // namespace atinuke
