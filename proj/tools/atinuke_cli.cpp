#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "atinuke/checkpoint.hpp"
#include "atinuke/errors.hpp"
#include "atinuke/gradcheck.hpp"
#include "atinuke/model.hpp"
#include "atinuke/token_io.hpp"
#include "atinuke/toy.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitVerification = 4;
constexpr int kExitDivergence = 5;

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("ATINUKE_SEED");
    if (!v || !*v) return std::nullopt;
    return std::strtoull(v, nullptr, 10);
}

int cmd_init(const std::string& config_path, std::optional<std::uint64_t> seed,
             const std::string& out_path, bool store_f32) {
    std::ifstream f(config_path);
    if (!f) {
        std::cerr << "error: cannot open config file '" << config_path << "'\n";
        return kExitConfig;
    }
    std::ostringstream ss;
    ss << f.rdbuf();

    atinuke::ModelConfig cfg;
    try {
        cfg = atinuke::config_from_text(ss.str());
        if (seed)
            cfg.seed = *seed;
        else if (auto es = env_seed())
            cfg.seed = *es;
        cfg.validate_or_throw();
    } catch (const atinuke::ConfigError& e) {
        for (const auto& v : e.violations) std::cerr << "config error: " << v << "\n";
        return kExitConfig;
    }
    if (cfg.key_dim != 0)
        std::cerr << "warning: key_dim=" << cfg.key_dim << " is accepted for parity and ignored\n";

    atinuke::PrngState rng(cfg.seed);
    atinuke::ModelParams params = atinuke::init_params(cfg, rng);
    atinuke::save_checkpoint(params, cfg, out_path, store_f32);
    std::cout << "parameters: " << atinuke::param_count(params) << "\n";
    return kExitOk;
}

int cmd_forward(const std::string& ckpt_path, const std::string& input_path,
                const std::string& output_path, const std::string& format) {
    atinuke::CheckpointData ckpt;
    try {
        ckpt = atinuke::load_checkpoint(ckpt_path);
    } catch (const atinuke::Error& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        atinuke::IntTensor tokens =
            atinuke::parse_token_batch_file(input_path, ckpt.config.vocab_size);
        atinuke::PrngState rng(ckpt.config.seed);
        atinuke::Tensor logits = atinuke::model_forward(tokens, ckpt.params, ckpt.config,
                                                        atinuke::RunMode::eval, rng);

        std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
        if (!out) throw atinuke::IoError("cannot open output '" + output_path + "'");
        if (format == "binary")
            atinuke::write_logits_binary(out, logits);
        else
            atinuke::write_logits_text(out, logits);
        if (!out) throw atinuke::IoError("write failed for '" + output_path + "'");

        std::cout << "shape: " << logits.extent(0) << "×" << logits.extent(1) << "×"
                  << logits.extent(2) << "\n";
        return kExitOk;
    } catch (const atinuke::Error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    }
}

int cmd_gradcheck(std::uint64_t seed, double tolerance) {
    const atinuke::GradCheckReport report = atinuke::run_gradcheck(seed);
    for (const auto& g : report.groups)
        std::printf("%-28s coords %4zu  worst rel err %.3e\n", g.name.c_str(), g.coords_checked,
                    g.worst_rel_err);
    std::printf("total coords %zu, worst rel err %.3e\n", report.coords_checked,
                report.worst_rel_err);
    if (report.worst_rel_err > tolerance) {
        std::cerr << "gradcheck failed: " << report.worst_coord << " rel err "
                  << report.worst_rel_err << " > tolerance " << tolerance << "\n";
        return kExitVerification;
    }
    return kExitOk;
}

int cmd_train_toy(const std::string& task, std::size_t steps, std::uint64_t seed,
                  const std::string& out_path) {
    if (task != "copy") {
        std::cerr << "error: unknown task '" << task << "' (only 'copy' is available)\n";
        return kExitConfig;
    }
    if (steps < 1) {
        std::cerr << "error: steps must be >= 1\n";
        return kExitConfig;
    }
    atinuke::ToyTrainResult res = atinuke::train_copy_task(steps, seed, [](std::size_t s, double l) {
        std::printf("step %5zu  loss %.6f\n", s, l);
    });
    if (res.diverged) {
        std::cerr << "error: training diverged (loss is not finite)\n";
        return kExitDivergence;
    }
    std::printf("held-out loss %.6f\n", res.heldout_loss);
    if (!out_path.empty()) atinuke::save_checkpoint(res.params, res.config, out_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Atinuke transformer engine"};
    app.require_subcommand(1);

    std::string config_path, ckpt_path, input_path, output_path, out_path;
    std::string format = "text";
    std::string task = "copy";
    std::optional<std::uint64_t> seed_flag;
    double tolerance = 1e-4;
    std::size_t steps = 2000;
    bool store_f32 = false;

    auto* init = app.add_subcommand("init", "initialize a model and write a checkpoint");
    init->add_option("config", config_path, "config file (key=value lines)")->required();
    init->add_option("--seed", seed_flag, "seed override");
    init->add_option("--out", out_path, "checkpoint path")->required();
    init->add_flag("--f32", store_f32, "store parameters as f32");

    auto* fwd = app.add_subcommand("forward", "eval-mode forward pass over a token batch");
    fwd->add_option("--checkpoint", ckpt_path)->required();
    fwd->add_option("--input", input_path, "token batch file")->required();
    fwd->add_option("--output", output_path, "logits destination")->required();
    fwd->add_option("--format", format)->check(CLI::IsMember({"text", "binary"}));

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gc->add_option("--seed", seed_flag);
    gc->add_option("--tolerance", tolerance);

    auto* train = app.add_subcommand("train-toy", "train the copy task demo");
    train->add_option("--task", task);
    train->add_option("--steps", steps);
    train->add_option("--seed", seed_flag);
    train->add_option("--out", out_path, "final checkpoint path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    const std::uint64_t seed = seed_flag ? *seed_flag : env_seed().value_or(0);

    try {
        if (init->parsed()) return cmd_init(config_path, seed_flag, out_path, store_f32);
        if (fwd->parsed()) return cmd_forward(ckpt_path, input_path, output_path, format);
        if (gc->parsed()) return cmd_gradcheck(seed, tolerance);
        if (train->parsed()) return cmd_train_toy(task, steps, seed, out_path);
    } catch (const atinuke::ConfigError& e) {
        for (const auto& v : e.violations) std::cerr << "config error: " << v << "\n";
        return kExitConfig;
    } catch (const atinuke::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const atinuke::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitConfig;
}
