#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "usf/cli/commands.hpp"
#include "usf/cli/config_file.hpp"
#include "usf/cli/svg_plot.hpp"
#include "usf/core/error.hpp"
#include "usf/harness/metrics.hpp"

using namespace usf;
using namespace usf::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome lab(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("usf_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::vector<std::string> kSmall{"--experiment.stage1_steps=120", "--experiment.stage2_steps=60",
                                      "--experiment.goals_per_stage=4", "--experiment.holdout_goals=4",
                                      "--experiment.eval_every=60",     "--hyperparameters.feature_dim=8",
                                      "--experiment.threads=1"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
}

} // namespace

TEST_CASE("config text round-trips through serialize") {
    const auto config = parse_config(R"(
# a comment
[experiment]
env = gridworld
agent = usf_dqn_her
seeds = 0..2,9
[gridworld]
structure = mixed
[hyperparameters]
lr = 1e-3
lambda = 0.000123
[her]
future_steps = 12
)");
    CHECK(config.agent.kind == agents::AgentKind::usf_dqn_her);
    CHECK(config.grid.structure == envs::RewardStructure::mixed);
    CHECK(config.agent.lr == 1e-3);
    CHECK(config.agent.lambda == 0.000123);
    CHECK(config.her.future_steps == 12);
    CHECK(config.seeds == std::vector<std::uint64_t>{0, 1, 2, 9});
    // untouched keys keep the table default of the selected structure
    CHECK(config.agent.epsilon == 0.25);

    const std::string text = serialize(config);
    CHECK(serialize(parse_config(text)) == text);
    for (const ConfigKey& key : config_keys()) {
        CAPTURE(key.dotted());
        CHECK(key.get(parse_config(text)) == key.get(config));
    }
}

TEST_CASE("selectors pick the table before other keys apply") {
    const auto a = parse_config("[hyperparameters]\nlambda = 0.5\n[gridworld]\nstructure = room\n");
    CHECK(a.agent.lambda == 0.5);
    const auto b = parse_config("[gridworld]\nstructure = room\n");
    CHECK(b.agent.lambda == 1e-8);
}

TEST_CASE("config errors name the problem") {
    try {
        parse_config("[hyperparameters]\nlearning_rate = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("learning_rate") != std::string::npos);
        CHECK(what.find("hyperparameters.lr") != std::string::npos);
        CHECK(what.find("her.future_steps") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("lr = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[hyperparameters]\nlr\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[hyperparameters]\nlr = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[experiment]\nagent = ddpg\n"), ConfigError);
    CHECK_THROWS_AS(parse_assignment("hyperparameters.lr"), ConfigError);
}

TEST_CASE("seed lists and numbers") {
    CHECK(parse_seed_list("0..4") == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
    CHECK(parse_seed_list("3,1") == std::vector<std::uint64_t>{3, 1});
    CHECK(parse_seed_list("0..1,7") == std::vector<std::uint64_t>{0, 1, 7});
    CHECK(parse_seed_list(format_seed_list({5, 6, 7, 10})) == std::vector<std::uint64_t>{5, 6, 7, 10});
    CHECK_THROWS_AS(parse_seed_list("4..1"), ConfigError);
    CHECK_THROWS_AS(parse_seed_list("x"), ConfigError);
    for (double v : {5e-4, 0.1, 1.0 / 3.0, 1e-8, 0.0, 45000.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.01) == "0.01");
}

TEST_CASE("help lists every configuration key") {
    const Outcome r = lab({"train", "--help"});
    CHECK(r.code == 0);
    for (const ConfigKey& key : config_keys()) {
        CAPTURE(key.dotted());
        CHECK(r.out.find("--" + key.dotted()) != std::string::npos);
    }
}

TEST_CASE("exit codes") {
    CHECK(lab({}).code == 2);
    CHECK(lab({"fly"}).code == 2);
    CHECK(lab({"train", "--set", "hyperparameters.nope=1"}).code == 2);
    CHECK(lab({"train", "--hyperparameters.lr=-1"}).code == 2);
    const Outcome bad = lab({"train", "--agent", "ddpg"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("config error") != std::string::npos);
    const fs::path dir = scratch("codes");
    std::ofstream(dir / "blocker") << "a file where a directory is expected\n";
    CHECK(lab(with({"train", "-o", (dir / "blocker" / "run").string()}, kSmall)).code == 1);
    CHECK(lab({"eval", "--checkpoint", (dir / "missing.bin").string()}).code != 0);
}

TEST_CASE("verify passes") {
    const Outcome r = lab({"verify", "--seed", "3"});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("train, eval and plot end to end") {
    const fs::path dir = scratch("e2e");
    const Outcome t = lab(with({"train", "-o", dir.string(), "--seeds", "0,1", "--set", "hyperparameters.epsilon=0.3"},
                               kSmall));
    REQUIRE(t.code == 0);
    for (const char* name : {"config.cfg", "metrics.csv", "aggregate.csv", "metrics_seed0.csv", "metrics_seed1.csv",
                             "checkpoint_stage1_seed0.bin", "checkpoint_stage2_seed1.bin"}) {
        CAPTURE(name);
        CHECK(fs::exists(dir / name));
    }
    const auto saved = parse_config(slurp(dir / "config.cfg"));
    CHECK(saved.agent.epsilon == 0.3);
    CHECK(saved.seeds == std::vector<std::uint64_t>{0, 1});

    const auto records = harness::load_metrics_csv((dir / "metrics.csv").string());
    CHECK(records.size() == 2 * (2 * 3 + 2 * 2));

    const Outcome e = lab({"eval", "--checkpoint", (dir / "checkpoint_stage2_seed1.bin").string(), "--goals",
                           "holdout", "--seed", "1", "--episodes", "2"});
    CHECK(e.code == 0);
    CHECK(e.out.find("done_rate=") != std::string::npos);
    CHECK(e.out.find("episodes=8") != std::string::npos);
    CHECK(lab({"eval", "--checkpoint", (dir / "checkpoint_stage2_seed1.bin").string(), "--goals", "bogus"}).code == 2);

    const Outcome p = lab({"plot", (dir / "metrics.csv").string(), "--metric", "all", "--window", "3", "-o",
                           dir.string()});
    CHECK(p.code == 0);
    for (harness::Metric m : harness::all_metrics()) {
        const fs::path svg = dir / ("curve_" + harness::to_string(m) + ".svg");
        CHECK(fs::exists(svg));
        CHECK(slurp(svg).rfind("<svg", 0) == 0);
    }

    // identical runs give identical bytes
    const fs::path again = scratch("e2e_again");
    REQUIRE(lab(with({"train", "-o", again.string(), "--seeds", "0,1", "--set", "hyperparameters.epsilon=0.3"},
                     kSmall)).code == 0);
    CHECK(slurp(dir / "metrics.csv") == slurp(again / "metrics.csv"));
    fs::remove_all(dir);
    fs::remove_all(again);
}

TEST_CASE("the binary reads seeds from USF_LAB_SEED") {
    const fs::path dir = scratch("env_seed");
    std::string cmd = "USF_LAB_SEED=7 \"" USF_LAB_BINARY "\" train -o \"" + dir.string() + "\"";
    for (const auto& a : kSmall) {
        cmd += " " + a;
    }
    cmd += " > \"" + (dir / "log.txt").string() + "\" 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "metrics_seed7.csv"));
    CHECK(parse_config(slurp(dir / "config.cfg")).seeds == std::vector<std::uint64_t>{7});
    const std::string bad = "\"" USF_LAB_BINARY "\" train --hyperparameters.lr=nope > /dev/null 2>&1";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == 2);
    fs::remove_all(dir);
}

TEST_CASE("svg rendering") {
    PlotSpec spec;
    spec.title = "done rate <&>";
    spec.lines.push_back({"a", {0, 1, 2, 3}, {0.0, 0.5, std::nan(""), 1.0}, {0.1, 0.1, 0.1, 0.1}});
    spec.shade_from = 2.0;
    const std::string svg = render_svg(spec);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("&lt;&amp;&gt;") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}
