// Acceptance run: one PASS/FAIL line per criterion. Long training runs are
// cached as metrics CSV under --cache, keyed by the config text and the
// binary's timestamp, so criteria sharing a run train it once.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "usf/cli/config_file.hpp"
#include "usf/harness/config.hpp"
#include "usf/harness/experiment.hpp"
#include "usf/harness/goals.hpp"
#include "usf/harness/metrics.hpp"
#include "usf/harness/verification.hpp"

using namespace usf;
using harness::EnvKind;
using harness::EvalRecord;
using harness::ExperimentConfig;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

int g_seeds = 5;
fs::path g_cache;

std::vector<std::uint64_t> seed_list() {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(g_seeds));
    std::iota(seeds.begin(), seeds.end(), 0);
    return seeds;
}

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string binary_stamp() {
    std::error_code ec;
    const auto exe = fs::read_symlink("/proc/self/exe", ec);
    if (ec) {
        return "unknown";
    }
    return std::to_string(fs::last_write_time(exe, ec).time_since_epoch().count());
}

/// Metrics of run_two_stage(config), from the cache when possible.
std::vector<EvalRecord> cached_run(const std::string& tag, const ExperimentConfig& config) {
    const std::string text = cli::serialize(config);
    const std::size_t key = std::hash<std::string>{}(text + binary_stamp());
    const fs::path path = g_cache / (tag + "_" + std::to_string(key) + ".csv");
    if (fs::exists(path)) {
        std::cout << "  [" << tag << "] cached " << path.filename().string() << "\n";
        return harness::load_metrics_csv(path.string());
    }
    const auto start = std::chrono::steady_clock::now();
    const auto records = harness::collect_records(harness::run_two_stage(config));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "  [" << tag << "] trained " << config.seeds.size() << " seed(s) in " << fmt(secs, 0) << " s\n";
    fs::create_directories(g_cache);
    const fs::path tmp = path.string() + ".tmp";
    harness::save_metrics_csv(tmp.string(), records);
    fs::rename(tmp, path);
    return records;
}

/// Mean of the last `n` values (the end of a curve, less noisy than one snapshot).
double tail_mean(const std::vector<double>& v, std::size_t n) {
    if (v.empty()) {
        return std::nan("");
    }
    n = std::min(n, v.size());
    return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(n), v.end(), 0.0) / static_cast<double>(n);
}

double head_mean(const std::vector<double>& v, std::size_t n) {
    n = std::min(n, v.size());
    return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
}

harness::Series series(const std::vector<EvalRecord>& records, std::uint64_t seed, int stage,
                       const std::string& set = "train", harness::Metric m = harness::Metric::done_rate) {
    return harness::extract(records, seed, stage, set, m);
}

constexpr std::size_t kFinalWindow = 10;  // snapshots averaged for a "final" value

/// Seed-averaged final stage-1 done rate on the source goals.
double final_done_rate(const std::vector<EvalRecord>& records, int stage = 1) {
    double sum = 0.0;
    for (auto seed : seed_list()) {
        sum += tail_mean(series(records, seed, stage).values, kFinalWindow);
    }
    return sum / g_seeds;
}

ExperimentConfig grid_config(agents::AgentKind kind, int stage2_steps) {
    ExperimentConfig c = harness::default_config(EnvKind::gridworld, kind, envs::RewardStructure::constant);
    c.seeds = seed_list();
    c.stage2_steps = stage2_steps;
    return c;
}

ExperimentConfig usf_two_stage() { return grid_config(agents::AgentKind::usf_dqn, 48000); }

Verdict from_check(const harness::CheckResult& r) { return {r.passed, r.detail}; }

Verdict ac1() { return from_check(harness::check_gradients(0, 10, 1e-4)); }
Verdict ac2() { return from_check(harness::check_factorization(0, 10, 1e-8)); }
Verdict ac3() { return from_check(harness::check_td_successor_features(0, 10000, 0.5, 0.05)); }

Verdict ac4() {
    ExperimentConfig c = grid_config(agents::AgentKind::usf_dqn, 0);
    c.stage1_steps = 20000;
    c.eval_every = 500;
    c.eval_episodes_per_goal = 100;
    const envs::Cell goal{8, 3};  // one room over from the start
    int successes = 0;
    std::ostringstream detail;
    for (auto seed : seed_list()) {
        auto env = harness::make_env(c, derive_seed(seed, 2));
        auto eval_env = harness::make_env(c, derive_seed(seed, 5));
        const auto& grid = dynamic_cast<const envs::GridWorld&>(*env);
        auto agent = agents::make_agent(c.agent, agents::env_spec(*env), derive_seed(seed, 1));
        replay::DualStore store(c.replay_capacity);
        Rng rng(derive_seed(seed, 3));
        harness::RunState state{*agent, *env, *eval_env, store, nullptr, rng};
        const auto records = harness::run_stage(c, state, {grid.encode(goal)}, {}, c.stage1_steps, 1, 0, seed);
        std::int64_t first = -1;
        for (const auto& r : records) {
            if (r.done_rate >= 0.9) {
                first = r.step;
                break;
            }
        }
        successes += first >= 0 ? 1 : 0;
        detail << " seed" << seed << "=" << (first >= 0 ? std::to_string(first) : "never");
    }
    return {successes >= std::min(4, g_seeds),
            std::to_string(successes) + "/" + std::to_string(g_seeds) + " seeds hit done_rate>=0.9; first step:" +
                detail.str()};
}

Verdict ac5() {
    const double usf_rate = final_done_rate(cached_run("usf_dqn", usf_two_stage()));
    const double dqn_rate = final_done_rate(cached_run("dqn", grid_config(agents::AgentKind::dqn, 0)));
    return {usf_rate >= dqn_rate - 0.05, "final done_rate usf_dqn " + fmt(usf_rate) + " vs dqn " + fmt(dqn_rate)};
}

Verdict ac6() {
    const ExperimentConfig c = usf_two_stage();
    const auto records = cached_run("usf_dqn", c);
    double agent_rate = 0.0, random_rate = 0.0;
    for (auto seed : seed_list()) {
        for (const auto& r : records) {
            if (r.seed == seed && r.stage == 1 && r.eval_set == "holdout" && r.step == c.stage1_steps) {
                agent_rate += r.done_rate / g_seeds;
            }
        }
        auto env = harness::make_env(c, derive_seed(seed, 5));
        const harness::GoalSets sets = harness::make_goal_sets(c, *env, seed);
        Rng rng(derive_seed(seed, 6));
        random_rate += harness::random_policy_baseline(*env, sets.holdout, 100, rng).done_rate / g_seeds;
    }
    return {agent_rate >= random_rate + 0.2,
            "holdout done_rate usf_dqn " + fmt(agent_rate) + " vs uniform random " + fmt(random_rate)};
}

Verdict ac7() {
    const ExperimentConfig c = usf_two_stage();
    const auto records = cached_run("usf_dqn", c);
    const double stage1 = final_done_rate(records, 1);
    // seed-averaged stage-2 curve, lightly smoothed
    std::vector<harness::Series> runs;
    for (auto seed : seed_list()) {
        runs.push_back(series(records, seed, 2));
    }
    const harness::AggregateSeries agg = harness::aggregate(runs);
    const std::vector<double> curve = harness::smooth(agg.mean, 5);
    const std::int64_t deadline = c.stage1_steps + c.stage2_steps / 2;
    std::int64_t reached = -1;
    for (std::size_t i = 0; i < curve.size() && agg.steps[i] <= deadline; ++i) {
        if (curve[i] >= 0.8 * stage1) {
            reached = agg.steps[i] - c.stage1_steps;
            break;
        }
    }
    const double stage2 = tail_mean(agg.mean, kFinalWindow);
    return {stage1 > 0.0 && reached >= 0,
            "stage-1 final " + fmt(stage1) + ", 80% level " + fmt(0.8 * stage1) + " reached " +
                (reached >= 0 ? "after " + std::to_string(reached) + " stage-2 steps" : "not within half the stage") +
                "; stage-2 final " + fmt(stage2)};
}

Verdict ac8() {
    const double usf_rate = final_done_rate(cached_run("usf_dqn", usf_two_stage()));
    const double her_rate = final_done_rate(cached_run("usf_dqn_her", grid_config(agents::AgentKind::usf_dqn_her, 0)));
    return {her_rate >= usf_rate - 0.05, "final done_rate usf_dqn_her " + fmt(her_rate) + " vs usf_dqn " + fmt(usf_rate)};
}

Verdict ac9() {
    const auto dual = harness::check_dual_store_fraction(0, 100000);
    const auto her = harness::check_her_consistency(0, 10000);
    return {dual.passed && her.passed, dual.detail + "; " + her.detail};
}

Verdict ac10() {
    ExperimentConfig c = harness::default_config(EnvKind::reacher, agents::AgentKind::usf_ddpg);
    c.seeds = seed_list();
    c.stage1_steps = 45000;
    const auto records = cached_run("usf_ddpg", c);
    int successes = 0;
    bool finite = true, stable = true;
    std::ostringstream detail;
    for (auto seed : seed_list()) {
        double best = 0.0;
        for (double v : series(records, seed, 1).values) {
            best = std::max(best, v);
        }
        successes += best >= 0.8 ? 1 : 0;
        std::vector<double> td;
        for (const auto& r : records) {
            if (r.seed == seed && r.stage == 1 && r.eval_set == "train" && r.step > 0) {
                td.push_back(r.td_error);
                finite = finite && std::isfinite(r.td_error);
            }
        }
        const auto smoothed = harness::smooth(td, 25);
        const double head = head_mean(smoothed, kFinalWindow), tail = tail_mean(smoothed, kFinalWindow);
        stable = stable && tail < head;
        detail << " seed" << seed << " best=" << fmt(best, 2) << " td " << fmt(head, 4) << "->" << fmt(tail, 4);
    }
    const int needed = std::min(3, g_seeds);
    return {successes >= needed && finite && stable,
            std::to_string(successes) + "/" + std::to_string(g_seeds) + " seeds reach done_rate>=0.8, td finite=" +
                (finite ? "yes" : "no") + ", tail<head=" + (stable ? "yes" : "no") + ";" + detail.str()};
}

Verdict ac11() {
    ExperimentConfig c = harness::default_config(EnvKind::gridworld, agents::AgentKind::usf_dqn_her,
                                                 envs::RewardStructure::mixed);
    c.seeds = {0, 1};
    c.stage1_steps = 1500;
    c.stage2_steps = 1000;
    c.eval_every = 250;
    c.threads = 2;
    auto csv = [&c] {
        std::ostringstream out;
        harness::write_metrics_csv(out, harness::collect_records(harness::run_two_stage(c)));
        return out.str();
    };
    const std::string a = csv(), b = csv();
    return {a == b && !a.empty(), std::to_string(a.size()) + " bytes, identical=" + (a == b ? "yes" : "no")};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::string cache = "acceptance_cache";
    app.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 11));
    app.add_option("--seeds", g_seeds, "seeds per learning criterion")->capture_default_str()->check(CLI::Range(1, 100));
    app.add_option("--cache", cache, "directory for cached training metrics")->capture_default_str();
    bool no_fail = false;
    std::string summary;
    app.add_flag("--no-fail", no_fail, "exit 0 when every criterion was evaluated, whatever the verdicts");
    app.add_option("--summary", summary, "directory receiving one ACn.txt verdict line per criterion");
    CLI11_PARSE(app, argc, argv);
    g_cache = cache;

    const std::vector<std::function<Verdict()>> criteria{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10, ac11};
    const std::vector<std::string> names{"gradient correctness",     "factorization identity",
                                         "TD successor features",    "single-goal learning",
                                         "multi-goal stage 1",       "hold-out generalization",
                                         "stage-2 transfer",         "HER integration",
                                         "replay statistics",        "continuous control",
                                         "determinism"};
    if (only.empty()) {
        only.resize(criteria.size());
        std::iota(only.begin(), only.end(), 1);
    }
    int failures = 0;
    int errors = 0;
    for (int n : only) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
            ++errors;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const std::string line = std::string(v.passed ? "PASS" : "FAIL") + " AC" + std::to_string(n) + " " +
                                 names[static_cast<std::size_t>(n - 1)] + ": " + v.detail + " (" + fmt(secs, 1) +
                                 " s)";
        std::cout << line << std::endl;
        if (!summary.empty()) {
            fs::create_directories(summary);
            std::ofstream(fs::path(summary) / ("AC" + std::to_string(n) + ".txt")) << line << "\n";
        }
        failures += v.passed ? 0 : 1;
    }
    if (no_fail) {
        return errors == 0 ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
