#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "atinuke/checkpoint.hpp"

using namespace atinuke;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("ATINUKE_CLI");
    REQUIRE_MESSAGE(p != nullptr, "ATINUKE_CLI must point at the built binary");
    return p;
}

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

fs::path scratch() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("atnk_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << text;
}

RunResult run(const std::string& args, const std::string& env_prefix = "") {
    const fs::path out = scratch() / "stdout.txt";
    const fs::path err = scratch() / "stderr.txt";
    const std::string cmd = env_prefix + "\"" + cli_path() + "\" " + args + " >" + out.string() +
                            " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, slurp(out), slurp(err)};
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

fs::path write_config(const ModelConfig& cfg, const std::string& name) {
    const fs::path p = scratch() / name;
    spit(p, config_to_text(cfg));
    return p;
}

}  // namespace

TEST_CASE("init reports the parameter count and is seed-deterministic") {
    const fs::path cfg = write_config(listing_config(), "listing.cfg");
    const fs::path c1 = scratch() / "a.atnk";
    const fs::path c2 = scratch() / "b.atnk";

    RunResult r1 = run("init " + cfg.string() + " --seed 7 --out " + c1.string());
    CHECK(r1.exit_code == 0);
    CHECK(r1.out == "parameters: 15628\n");

    RunResult r2 = run("init " + cfg.string() + " --seed 7 --out " + c2.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(c1) == slurp(c2));

    RunResult r3 = run("init " + cfg.string() + " --seed 8 --out " + c2.string());
    CHECK(r3.exit_code == 0);
    CHECK(slurp(c1) != slurp(c2));
}

TEST_CASE("ATINUKE_SEED is a fallback for --seed") {
    const fs::path cfg = write_config(listing_config(), "listing.cfg");
    const fs::path c1 = scratch() / "env.atnk";
    const fs::path c2 = scratch() / "flag.atnk";
    RunResult r1 =
        run("init " + cfg.string() + " --out " + c1.string(), "ATINUKE_SEED=11 ");
    CHECK(r1.exit_code == 0);
    RunResult r2 = run("init " + cfg.string() + " --seed 11 --out " + c2.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(c1) == slurp(c2));
}

TEST_CASE("init rejects an invalid config with exit code 2") {
    ModelConfig bad = listing_config();
    bad.model_dim = 17;  // not divisible by head_count, and odd so no PE table
    const fs::path cfg = write_config(bad, "bad.cfg");
    RunResult r = run("init " + cfg.string() + " --out " + (scratch() / "bad.atnk").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("divisible") != std::string::npos);
}

TEST_CASE("forward prints the logits shape and is deterministic") {
    const fs::path cfg = write_config(listing_config(), "listing.cfg");
    const fs::path ckpt = scratch() / "fwd.atnk";
    REQUIRE(run("init " + cfg.string() + " --seed 3 --out " + ckpt.string()).exit_code == 0);

    const fs::path tokens = scratch() / "tokens.txt";
    spit(tokens, "1 2 3 4\n5 6 7 8\n");
    const fs::path l1 = scratch() / "l1.txt";
    const fs::path l2 = scratch() / "l2.txt";

    RunResult r1 = run("forward --checkpoint " + ckpt.string() + " --input " + tokens.string() +
                       " --output " + l1.string());
    CHECK(r1.exit_code == 0);
    CHECK(r1.out == "shape: 2×4×10\n");

    RunResult r2 = run("forward --checkpoint " + ckpt.string() + " --input " + tokens.string() +
                       " --output " + l2.string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(l1) == slurp(l2));
    CHECK(!slurp(l1).empty());

    RunResult rb = run("forward --checkpoint " + ckpt.string() + " --input " + tokens.string() +
                       " --output " + l2.string() + " --format binary");
    CHECK(rb.exit_code == 0);
    CHECK(slurp(l2).size() == 4 + 3 * 8 + 2 * 4 * 10 * 8);
}

TEST_CASE("forward maps bad inputs to exit code 3") {
    const fs::path cfg = write_config(listing_config(), "listing.cfg");
    const fs::path ckpt = scratch() / "fwd3.atnk";
    REQUIRE(run("init " + cfg.string() + " --seed 3 --out " + ckpt.string()).exit_code == 0);
    const fs::path out = scratch() / "l3.txt";

    SUBCASE("missing checkpoint") {
        RunResult r = run("forward --checkpoint /nonexistent.atnk --input " +
                          (scratch() / "t.txt").string() + " --output " + out.string());
        CHECK(r.exit_code == 3);
    }
    SUBCASE("out-of-vocab token") {
        const fs::path tokens = scratch() / "bad_tokens.txt";
        spit(tokens, "1 2 99\n");
        RunResult r = run("forward --checkpoint " + ckpt.string() + " --input " +
                          tokens.string() + " --output " + out.string());
        CHECK(r.exit_code == 3);
        CHECK(r.err.find("line 1") != std::string::npos);
    }
    SUBCASE("corrupt checkpoint") {
        const fs::path broken = scratch() / "broken.atnk";
        std::string bytes = slurp(ckpt);
        bytes.replace(0, 4, "XXXX");
        spit(broken, bytes);
        const fs::path tokens = scratch() / "ok_tokens.txt";
        spit(tokens, "1 2\n");
        RunResult r = run("forward --checkpoint " + broken.string() + " --input " +
                          tokens.string() + " --output " + out.string());
        CHECK(r.exit_code == 3);
        CHECK(r.err.find("bad magic") != std::string::npos);
    }
}

TEST_CASE("gradcheck passes at the default tolerance and fails at 1e-12") {
    RunResult ok = run("gradcheck --seed 2024");
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.find("worst rel err") != std::string::npos);

    RunResult fail = run("gradcheck --seed 2024 --tolerance 1e-12");
    CHECK(fail.exit_code == 4);
    CHECK(fail.err.find("gradcheck failed") != std::string::npos);
}

TEST_CASE("train-toy runs a step and writes a changed checkpoint") {
    const fs::path ckpt = scratch() / "toy.atnk";
    RunResult r = run("train-toy --task copy --steps 1 --seed 7 --out " + ckpt.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("held-out loss") != std::string::npos);

    CheckpointData trained = load_checkpoint(ckpt.string());
    PrngState rng(trained.config.seed);
    ModelParams fresh = init_params(trained.config, rng);
    bool changed = false;
    for (std::size_t i = 0; i < fresh.final_w.size() && !changed; ++i)
        changed = fresh.final_w[i] != trained.params.final_w[i];
    CHECK(changed);

    RunResult bad = run("train-toy --task sort --steps 1");
    CHECK(bad.exit_code == 2);
}
