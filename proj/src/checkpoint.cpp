#include "atinuke/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "atinuke/errors.hpp"

namespace atinuke {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'N', 'K'};
constexpr std::uint32_t kDtypeF32 = 1;
constexpr std::uint32_t kDtypeF64 = 2;

// explicit little-endian byte serialization, independent of host order
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

// zero-valued parameters with the shapes the config dictates; the loader's
// shape authority
ModelParams shapes_from_config(const ModelConfig& cfg) {
    ModelParams p;
    p.embedding = Tensor::zeros({cfg.vocab_size, cfg.model_dim});
    p.blocks.resize(cfg.layer_count);
    for (auto& b : p.blocks) {
        b.attention.w_query = Tensor::zeros({cfg.model_dim, cfg.model_dim});
        b.attention.w_key = Tensor::zeros({cfg.model_dim, cfg.model_dim});
        b.attention.w_value = Tensor::zeros({cfg.model_dim, cfg.model_dim});
        b.attention.w_out = Tensor::zeros({cfg.model_dim, cfg.model_dim});
        b.ff_w1 = Tensor::zeros({cfg.model_dim, cfg.hidden_dim});
        b.ff_b1 = Tensor::zeros({cfg.hidden_dim});
        b.ff_w2 = Tensor::zeros({cfg.hidden_dim, cfg.model_dim});
        b.ff_b2 = Tensor::zeros({cfg.model_dim});
        b.norm1_gamma = Tensor::zeros({cfg.model_dim});
        b.norm1_beta = Tensor::zeros({cfg.model_dim});
        b.norm2_gamma = Tensor::zeros({cfg.model_dim});
        b.norm2_beta = Tensor::zeros({cfg.model_dim});
    }
    p.final_w = Tensor::zeros({cfg.model_dim, cfg.vocab_size});
    p.final_b = Tensor::zeros({cfg.vocab_size});
    return p;
}

}  // namespace

std::string config_to_text(const ModelConfig& cfg) {
    std::ostringstream os;
    os << "activation=" << (cfg.activation == Activation::relu ? "relu" : "gelu") << "\n"
       << "causal=" << (cfg.causal ? 1 : 0) << "\n"
       << "disable_pe=" << (cfg.disable_pe ? 1 : 0) << "\n"
       << "dropout_rate=" << fmt_double(cfg.dropout_rate) << "\n"
       << "head_count=" << cfg.head_count << "\n"
       << "hidden_dim=" << cfg.hidden_dim << "\n"
       << "key_dim=" << cfg.key_dim << "\n"
       << "layer_count=" << cfg.layer_count << "\n"
       << "layer_norm_eps=" << fmt_double(cfg.layer_norm_eps) << "\n"
       << "max_len=" << cfg.max_len << "\n"
       << "model_dim=" << cfg.model_dim << "\n"
       << "per_layer_pe=" << (cfg.per_layer_pe ? 1 : 0) << "\n"
       << "scale_denominator="
       << (cfg.scale_denominator == ScaleDenominator::full_dim ? "full_dim" : "head_dim") << "\n"
       << "seed=" << cfg.seed << "\n"
       << "vocab_size=" << cfg.vocab_size << "\n";
    return os.str();
}

ModelConfig config_from_text(const std::string& text) {
    ModelConfig cfg;
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value: '" +
                              line + "'");
        if (!kv.emplace(line.substr(0, eq), line.substr(eq + 1)).second)
            throw ConfigError("duplicate config key '" + line.substr(0, eq) + "'");
    }

    auto take = [&kv](const std::string& key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("missing config key '" + key + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto take_size = [&take](const std::string& key) {
        return static_cast<std::size_t>(std::stoull(take(key)));
    };

    const std::string act = take("activation");
    if (act == "relu")
        cfg.activation = Activation::relu;
    else if (act == "gelu")
        cfg.activation = Activation::gelu;
    else
        throw ConfigError("activation must be relu or gelu, got '" + act + "'");
    cfg.causal = parse_bool(take("causal"), "causal");
    cfg.disable_pe = parse_bool(take("disable_pe"), "disable_pe");
    cfg.dropout_rate = std::stod(take("dropout_rate"));
    cfg.head_count = take_size("head_count");
    cfg.hidden_dim = take_size("hidden_dim");
    cfg.key_dim = take_size("key_dim");
    cfg.layer_count = take_size("layer_count");
    cfg.layer_norm_eps = std::stod(take("layer_norm_eps"));
    cfg.max_len = take_size("max_len");
    cfg.model_dim = take_size("model_dim");
    cfg.per_layer_pe = parse_bool(take("per_layer_pe"), "per_layer_pe");
    const std::string sd = take("scale_denominator");
    if (sd == "full_dim")
        cfg.scale_denominator = ScaleDenominator::full_dim;
    else if (sd == "head_dim")
        cfg.scale_denominator = ScaleDenominator::head_dim;
    else
        throw ConfigError("scale_denominator must be full_dim or head_dim, got '" + sd + "'");
    cfg.seed = std::stoull(take("seed"));
    cfg.vocab_size = take_size("vocab_size");

    if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    return cfg;
}

void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                     const std::string& path, bool store_f32) {
    auto entries = named_params(params);
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    const std::string cfg_text = config_to_text(cfg);
    put_u64(out, cfg_text.size());
    out += cfg_text;
    put_u64(out, entries.size());
    for (const auto& [name, t] : entries) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t->rank()));
        for (std::size_t ax = 0; ax < t->rank(); ++ax) put_u64(out, t->extent(ax));
        put_u32(out, store_f32 ? kDtypeF32 : kDtypeF64);
        if (store_f32) {
            for (std::size_t i = 0; i < t->size(); ++i) {
                const auto f = static_cast<float>((*t)[i]);
                std::uint32_t bits;
                std::memcpy(&bits, &f, 4);
                put_u32(out, bits);
            }
        } else {
            for (std::size_t i = 0; i < t->size(); ++i) {
                std::uint64_t bits;
                const double d = (*t)[i];
                std::memcpy(&bits, &d, 8);
                put_u64(out, bits);
            }
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for '" + path + "'");
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();

    Reader r{buf};
    if (r.bytes(4) != std::string(kMagic, 4)) throw IoError("bad magic");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw IoError("unknown checkpoint version " + std::to_string(version));

    const std::uint64_t cfg_len = r.u64();
    CheckpointData out;
    out.config = config_from_text(r.bytes(cfg_len));
    out.config.validate_or_throw();
    out.params = shapes_from_config(out.config);

    auto expected = named_params(out.params);
    std::map<std::string, Tensor*> by_name;
    for (auto& [name, t] : expected) by_name.emplace(name, t);

    const std::uint64_t count = r.u64();
    if (count != by_name.size())
        throw IoError("checkpoint holds " + std::to_string(count) + " entries, config implies " +
                      std::to_string(by_name.size()));

    std::string prev_name;
    for (std::uint64_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = r.u32();
        const std::string name = r.bytes(name_len);
        if (e > 0 && !(prev_name < name))
            throw IoError("entry names not sorted/unique at '" + name + "'");
        prev_name = name;

        const std::uint32_t rank = r.u32();
        Shape dims(rank);
        for (auto& d : dims) d = r.u64();
        const std::uint32_t dtype = r.u32();
        if (dtype != kDtypeF32 && dtype != kDtypeF64)
            throw IoError("entry '" + name + "' has unknown dtype " + std::to_string(dtype));

        auto it = by_name.find(name);
        if (it == by_name.end()) throw IoError("unexpected entry '" + name + "'");
        Tensor* dst = it->second;
        if (dims != dst->shape())
            throw IoError("entry '" + name + "' shape " + shape_str(dims) +
                          " inconsistent with config, expected " + shape_str(dst->shape()));

        const std::size_t n = shape_product(dims);
        for (std::size_t i = 0; i < n; ++i) {
            double v;
            if (dtype == kDtypeF32) {
                const std::uint32_t bits = r.u32();
                float fv;
                std::memcpy(&fv, &bits, 4);
                v = static_cast<double>(fv);
            } else {
                const std::uint64_t bits = r.u64();
                std::memcpy(&v, &bits, 8);
            }
            if (!std::isfinite(v))
                throw NumericError("entry '" + name + "' holds a non-finite value at index " +
                                   std::to_string(i));
            (*dst)[i] = v;
        }
        by_name.erase(it);
    }
    if (r.pos != buf.size()) throw IoError("trailing bytes after last entry");
    if (!by_name.empty()) throw IoError("missing entry '" + by_name.begin()->first + "'");
    return out;
}

}  // namespace atinuke
