#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "usf/core/error.hpp"
#include "usf/harness/config.hpp"
#include "usf/harness/experiment.hpp"
#include "usf/harness/goals.hpp"
#include "usf/harness/metrics.hpp"
#include "usf/harness/oracle_agent.hpp"
#include "usf/oracle/tabular.hpp"

using namespace usf;
using namespace usf::harness;
using agents::AgentKind;
using envs::RewardStructure;

namespace {

ExperimentConfig tiny(AgentKind kind = AgentKind::usf_dqn, RewardStructure structure = RewardStructure::constant) {
    ExperimentConfig c = default_config(EnvKind::gridworld, kind, structure);
    c.stage1_steps = 300;
    c.stage2_steps = 200;
    c.goals_per_stage = 4;
    c.holdout_goals = 4;
    c.eval_every = 100;
    c.agent.feature_dim = 8;
    c.threads = 1;
    return c;
}

std::set<std::pair<double, double>> as_set(const std::vector<Eigen::VectorXd>& goals) {
    std::set<std::pair<double, double>> out;
    for (const auto& g : goals) {
        out.insert({g[0], g[1]});
    }
    return out;
}

} // namespace

TEST_CASE("gridworld defaults follow the hyperparameter tables") {
    struct Row {
        AgentKind kind;
        RewardStructure structure;
        double lambda;
    };
    const Row rows[] = {
        {AgentKind::usf_dqn, RewardStructure::constant, 0.01},
        {AgentKind::usf_dqn_onehot, RewardStructure::constant, 0.01},
        {AgentKind::usf_dqn, RewardStructure::room, 1e-8},
        {AgentKind::usf_dqn_onehot, RewardStructure::room, 1e-6},
        {AgentKind::usf_dqn, RewardStructure::mixed, 1e-6},
        {AgentKind::usf_dqn_onehot, RewardStructure::mixed, 1e-6},
        {AgentKind::usf_dqn_her, RewardStructure::constant, 1e-8},
        {AgentKind::usf_dqn_her, RewardStructure::room, 1e-8},
        {AgentKind::usf_dqn_her, RewardStructure::mixed, 1e-4},
        {AgentKind::usf_rloss_ablation, RewardStructure::constant, 0.01},
        {AgentKind::usf_rloss_ablation, RewardStructure::room, 1e-8},
        {AgentKind::usf_rloss_ablation, RewardStructure::mixed, 1e-6},
    };
    for (const Row& row : rows) {
        const ExperimentConfig c = default_config(EnvKind::gridworld, row.kind, row.structure);
        CAPTURE(agents::to_string(row.kind));
        CHECK(c.agent.lambda == row.lambda);
        CHECK(c.agent.lr == 5e-4);
        CHECK(c.agent.epsilon == 0.25);
        CHECK(c.agent.batch_size == 32);
        CHECK(c.discount() == 0.99);
        CHECK(c.agent.target_update_every == 10);
        CHECK(c.her.future_steps == 30);
        CHECK(c.her.sampling_probability == 0.5);
        CHECK(c.grid.max_steps == 31);
        CHECK_NOTHROW(c.validate());
    }
}

TEST_CASE("reacher defaults") {
    const ExperimentConfig c = default_config(EnvKind::reacher, AgentKind::usf_ddpg);
    CHECK(c.agent.actor_lr == 1e-4);
    CHECK(c.agent.critic_lr == 1e-3);
    CHECK(c.agent.lambda == 1e-4);
    CHECK(c.agent.batch_size == 64);
    CHECK(c.agent.tau == 0.005);
    CHECK(c.her.future_steps == 50);
    CHECK(c.stage2_steps == 0);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("validation rejects mismatched or out-of-range settings") {
    ExperimentConfig c = tiny();
    c.env = EnvKind::reacher;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny();
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = tiny();
    c.eval_every = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(env_kind_from_string("mujoco"), ConfigError);
}

TEST_CASE("goal sets are pairwise disjoint and vary with the seed") {
    const ExperimentConfig c = tiny();
    auto env = make_env(c, 0);
    const auto& grid = dynamic_cast<const envs::GridWorld&>(*env);
    std::set<std::pair<double, double>> previous;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const GoalSets sets = make_goal_sets(c, *env, seed);
        CHECK(sets.source.size() == 4);
        CHECK(sets.target.size() == 4);
        CHECK(sets.holdout.size() == 4);
        std::set<std::pair<double, double>> all;
        for (const auto* group : {&sets.source, &sets.target, &sets.holdout}) {
            for (const auto& g : *group) {
                const envs::Cell cell = grid.decode(g);
                CHECK(grid.layout().is_floor(cell));
                CHECK(cell != grid.layout().start());
                all.insert({g[0], g[1]});
            }
        }
        CHECK(all.size() == 12);
        if (seed > 0) {
            CHECK(as_set(sets.source) != previous);
        }
        previous = as_set(sets.source);
    }
    CHECK(as_set(make_goal_sets(c, *env, 3).source) == as_set(make_goal_sets(c, *env, 3).source));
}

TEST_CASE("reacher goal sets respect the training regions") {
    ExperimentConfig c = default_config(EnvKind::reacher, AgentKind::usf_ddpg);
    c.goals_per_stage = 8;
    c.holdout_goals = 5;
    auto env = make_env(c, 0);
    const auto& arm = dynamic_cast<const envs::KinematicReacher&>(*env);
    const GoalSets sets = make_goal_sets(c, *env, 1);
    for (const auto& g : sets.source) {
        CHECK(arm.in_training_region(arm.decode_goal(g)));
    }
    for (const auto& g : sets.holdout) {
        CHECK_FALSE(arm.in_training_region(arm.decode_goal(g)));
        CHECK(arm.reachable(arm.decode_goal(g)));
    }
}

TEST_CASE("oracle agent solves every goal in the shortest number of steps") {
    const ExperimentConfig c = tiny();
    auto env = make_env(c, 0);
    const auto& grid = dynamic_cast<const envs::GridWorld&>(*env);
    const OracleAgent oracle(grid);
    const GoalSets sets = make_goal_sets(c, *env, 2);
    double bfs = 0.0;
    for (const auto& g : sets.source) {
        bfs += oracle::shortest_steps(grid.layout(), grid.layout().start(), grid.decode(g));
    }
    const EvalResult r = evaluate(oracle, *env, sets.source, 2);
    CHECK(r.done_rate == 1.0);
    CHECK(r.episodes == 8);
    CHECK(r.mean_steps == doctest::Approx(bfs / static_cast<double>(sets.source.size())));
}

TEST_CASE("evaluation leaves the agent untouched") {
    const ExperimentConfig c = tiny();
    auto env = make_env(c, 0);
    auto agent = agents::make_agent(c.agent, agents::env_spec(*env), 1);
    const GoalSets sets = make_goal_sets(c, *env, 0);
    const auto before = agent->clone();
    const EvalResult a = evaluate(*agent, *env, sets.source, 1);
    const EvalResult b = evaluate(*agent, *env, sets.source, 1);
    CHECK(a.done_rate == b.done_rate);
    CHECK(a.mean_steps == b.mean_steps);
    CHECK(agent->update_count() == 0);
    for (const auto& g : sets.holdout) {
        CHECK(agent->greedy(env->reset(g), g) == before->greedy(env->reset(g), g));
    }
}

TEST_CASE("failed episodes count the full step limit") {
    ExperimentConfig c = tiny();
    auto env = make_env(c, 0);
    Rng rng(0);
    const GoalSets sets = make_goal_sets(c, *env, 0);
    const EvalResult r = random_policy_baseline(*env, sets.source, 20, rng);
    CHECK(r.done_rate >= 0.0);
    CHECK(r.done_rate < 0.5);
    CHECK(r.mean_steps <= 31.0);
    CHECK(r.mean_steps > 20.0);
}

TEST_CASE("a zero-length stage produces no records") {
    ExperimentConfig c = tiny();
    c.stage1_steps = 0;
    c.stage2_steps = 0;
    const SeedRun run = run_seed(c, 0);
    CHECK(run.metrics.records.empty());
    CHECK(run.agent->update_count() == 0);
}

TEST_CASE("two-stage runs: record layout, step offsets and hooks") {
    ExperimentConfig c = tiny();
    c.seeds = {4, 9};
    std::vector<std::pair<std::uint64_t, int>> hooks;
    std::mutex mutex;
    const auto runs = run_two_stage(c, [&](std::uint64_t seed, int stage, const agents::Agent&,
                                           const replay::DualStore&) {
        std::lock_guard lock(mutex);
        hooks.emplace_back(seed, stage);
    });
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].seed == 4);
    CHECK(runs[1].seed == 9);
    CHECK(hooks.size() == 4);
    for (const auto& run : runs) {
        const auto& records = run.metrics.records;
        // stage 1: steps 0,100,200,300 on train and holdout; stage 2: 300..500
        CHECK(records.size() == 2 * 4 + 2 * 3);
        for (const auto& r : records) {
            CHECK(r.seed == run.seed);
            CHECK((r.eval_set == "train" || r.eval_set == "holdout"));
            if (r.stage == 2) {
                CHECK(r.step >= c.stage1_steps);
            } else {
                CHECK(r.step <= c.stage1_steps);
            }
            CHECK(r.step % c.eval_every == 0);
        }
        CHECK(run.agent->update_count() > 0);
        CHECK(run.agent->update_count() <= 500);
        const std::set<std::pair<double, double>> src = as_set(run.goals.source), tgt = as_set(run.goals.target);
        for (const auto& g : tgt) {
            CHECK(src.count(g) == 0);
        }
    }
    const auto all = collect_records(runs);
    CHECK(all.size() == runs[0].metrics.records.size() + runs[1].metrics.records.size());
    CHECK(all.front().seed == 4);
    CHECK(all.back().seed == 9);
}

TEST_CASE("runs are deterministic given a seed, whatever the thread count") {
    ExperimentConfig c = tiny(AgentKind::usf_dqn_her, RewardStructure::mixed);
    c.seeds = {1, 2};
    c.threads = 1;
    std::ostringstream a, b;
    write_metrics_csv(a, collect_records(run_two_stage(c)));
    c.threads = 2;
    write_metrics_csv(b, collect_records(run_two_stage(c)));
    CHECK(a.str() == b.str());
}

TEST_CASE("smoothing") {
    const std::vector<double> x{1, 2, 3};
    CHECK(smooth(x, 1) == x);
    const auto s = smooth(x, 3);
    CHECK(s[1] == 2.0);
    CHECK(s[0] == 1.0);
    CHECK(s[2] == 3.0);
    const std::vector<double> flat(9, 0.7);
    for (double v : smooth(flat, 5)) {
        CHECK(v == doctest::Approx(0.7));
    }
    const double nan = std::nan("");
    const auto t = smooth({nan, 4.0, nan}, 3);
    CHECK(t[1] == 4.0);
    CHECK(std::isnan(t[0]));
    CHECK(std::isnan(smooth({nan}, 3)[0]));
}

TEST_CASE("smoothing equals a brute-force centred window mean") {
    Rng rng(8);
    std::vector<double> x(37);
    for (auto& v : x) {
        v = uniform01(rng);
    }
    for (int window : {1, 2, 5, 10, 51}) {
        const auto s = smooth(x, window);
        const int h = (window - 1) / 2;
        for (int i = 0; i < 37; ++i) {
            const int w = std::min({h, i, 36 - i});
            double sum = 0.0;
            for (int j = i - w; j <= i + w; ++j) {
                sum += x[static_cast<std::size_t>(j)];
            }
            CHECK(s[static_cast<std::size_t>(i)] == doctest::Approx(sum / (2 * w + 1)).epsilon(1e-12));
        }
    }
}

TEST_CASE("aggregation across runs") {
    const Series one{{0, 10}, {0.3, 0.6}};
    const AggregateSeries single = aggregate({one});
    CHECK(single.stderr_ == std::vector<double>{0.0, 0.0});
    CHECK(single.mean == one.values);

    const AggregateSeries pair = aggregate({Series{{0, 10}, {0, 1}}, Series{{0, 10}, {1, 0}}});
    CHECK(pair.mean == std::vector<double>{0.5, 0.5});
    CHECK(pair.runs == 2);

    Rng rng(3);
    std::vector<Series> runs(6, Series{{0}, {0}});
    std::vector<double> v;
    for (auto& r : runs) {
        r.values[0] = uniform01(rng);
        v.push_back(r.values[0]);
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x / 6.0;
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    const AggregateSeries agg = aggregate(runs);
    CHECK(std::abs(agg.mean[0] - mean) < 1e-12);
    CHECK(std::abs(agg.stderr_[0] - std::sqrt(ss / 5.0) / std::sqrt(6.0)) < 1e-12);

    CHECK_THROWS_AS(aggregate({Series{{0, 10}, {0, 1}}, Series{{0, 20}, {0, 1}}}), ConfigError);
}

TEST_CASE("metrics CSV round trip") {
    std::vector<EvalRecord> records;
    records.push_back({1, 3, 0, "train", 0.25, 30.5, std::nan(""), std::nan(""), std::nan("")});
    records.push_back({2, 3, 500, "holdout", 1.0 / 3.0, 12.0, 0.123456789012345678, 1e-17, 2.5});
    std::stringstream out;
    write_metrics_csv(out, records);
    std::string header;
    std::getline(out, header);
    CHECK(header == kMetricsHeader);
    out.seekg(0);
    const auto back = read_metrics_csv(out);
    REQUIRE(back.size() == 2);
    CHECK(back[1].done_rate == records[1].done_rate);
    CHECK(back[1].td_error == records[1].td_error);
    CHECK(back[1].loss_q == records[1].loss_q);
    CHECK(back[1].eval_set == "holdout");
    CHECK(back[1].step == 500);
    CHECK(std::isnan(back[0].loss_psi));

    std::stringstream bad("stage,seed\n1,2\n");
    CHECK_THROWS_AS(read_metrics_csv(bad), ConfigError);

    const Series s = extract(back, 3, std::nullopt, "train", Metric::done_rate);
    CHECK(s.values == std::vector<double>{0.25});
    for (Metric m : all_metrics()) {
        CHECK(metric_from_string(to_string(m)) == m);
    }
}
