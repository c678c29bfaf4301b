#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "usf/agents/agent.hpp"
#include "usf/envs/goal_env.hpp"
#include "usf/harness/config.hpp"
#include "usf/harness/goals.hpp"
#include "usf/harness/metrics.hpp"
#include "usf/replay/replay_store.hpp"

namespace usf::harness {

struct EvalResult {
    double done_rate = 0.0;
    double mean_steps = 0.0;
    int episodes = 0;
};

/// Greedy rollouts, `episodes_per_goal` per goal, on `env` (which is reset
/// for every episode). Touches neither the agent nor any buffer. Failed
/// episodes count the full step limit.
EvalResult evaluate(const agents::Agent& agent, envs::GoalEnv& env, const std::vector<Eigen::VectorXd>& goals,
                    int episodes_per_goal);

/// Mutable state of one seed's run, shared by both stages.
struct RunState {
    agents::Agent& agent;
    envs::GoalEnv& env;       // training episodes
    envs::GoalEnv& eval_env;  // greedy evaluation only
    replay::DualStore& replay;
    replay::HerStore* her;    // null when HER is off
    Rng& rng;                 // exploration, goal choice and minibatches
};

/// Trains for `steps` environment steps on goals drawn uniformly from
/// `goals`, one gradient update per step once the buffer holds a batch.
/// Evaluates on `goals` and `holdout` at the start and every
/// `config.eval_every` steps; record steps are offset by `step_offset`.
/// steps == 0 returns no records. A non-finite loss throws NumericError.
std::vector<EvalRecord> run_stage(const ExperimentConfig& config, RunState& state,
                                  const std::vector<Eigen::VectorXd>& goals,
                                  const std::vector<Eigen::VectorXd>& holdout, int steps, int stage,
                                  std::int64_t step_offset, std::uint64_t seed);

/// Called after each stage of each seed (possibly from worker threads).
using StageHook = std::function<void(std::uint64_t seed, int stage, const agents::Agent& agent,
                                     const replay::DualStore& replay)>;

struct SeedRun {
    std::uint64_t seed = 0;
    RunMetrics metrics;
    GoalSets goals;
    std::unique_ptr<agents::Agent> agent;
};

/// Stage 1 on the source goals, then (if stage2_steps > 0) the goal swap:
/// the stage-1 buffer becomes the DualStore's old store and training
/// continues on the target goals with the same parameters.
SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, const StageHook& hook = {});

/// run_seed for every configured seed, in parallel worker threads; results
/// are ordered like config.seeds.
std::vector<SeedRun> run_two_stage(const ExperimentConfig& config, const StageHook& hook = {});

/// Records of all runs in seed order.
std::vector<EvalRecord> collect_records(const std::vector<SeedRun>& runs);

/// Mean done rate of a policy choosing uniform random actions, estimated
/// with `episodes_per_goal` rollouts per goal.
EvalResult random_policy_baseline(envs::GoalEnv& env, const std::vector<Eigen::VectorXd>& goals,
                                  int episodes_per_goal, Rng& rng);

} // namespace usf::harness
