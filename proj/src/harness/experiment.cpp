#include "usf/harness/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "usf/core/error.hpp"
#include "usf/replay/her.hpp"

namespace usf::harness {

EvalResult evaluate(const agents::Agent& agent, envs::GoalEnv& env, const std::vector<Eigen::VectorXd>& goals,
                    int episodes_per_goal) {
    if (goals.empty()) {
        throw ConfigError("evaluation needs at least one goal");
    }
    if (episodes_per_goal < 1) {
        throw ConfigError("episodes_per_goal must be positive");
    }
    EvalResult result;
    long reached = 0;
    long total_steps = 0;
    for (const Eigen::VectorXd& g : goals) {
        for (int e = 0; e < episodes_per_goal; ++e) {
            Eigen::VectorXd s = env.reset(g);
            int steps = 0;
            bool done = false;
            bool success = false;
            while (!done) {
                const envs::StepResult step = env.step(agent.greedy(s, g));
                ++steps;
                done = step.done;
                success = step.reached_goal;
                s = step.next_state;
            }
            reached += success ? 1 : 0;
            total_steps += steps;
            ++result.episodes;
        }
    }
    result.done_rate = static_cast<double>(reached) / result.episodes;
    result.mean_steps = static_cast<double>(total_steps) / result.episodes;
    return result;
}

EvalResult random_policy_baseline(envs::GoalEnv& env, const std::vector<Eigen::VectorXd>& goals,
                                  int episodes_per_goal, Rng& rng) {
    if (goals.empty() || episodes_per_goal < 1) {
        throw ConfigError("baseline needs goals and a positive episode count");
    }
    const envs::ActionSpace space = env.action_space();
    EvalResult result;
    long reached = 0;
    long total_steps = 0;
    for (const Eigen::VectorXd& g : goals) {
        for (int e = 0; e < episodes_per_goal; ++e) {
            env.reset(g);
            bool done = false;
            bool success = false;
            int steps = 0;
            while (!done) {
                Action a;
                if (space.discrete()) {
                    a = uniform_index(rng, space.count);
                } else {
                    Eigen::VectorXd v(static_cast<Eigen::Index>(space.dim));
                    for (Eigen::Index i = 0; i < v.size(); ++i) {
                        v[i] = uniform(rng, space.low, space.high);
                    }
                    a = v;
                }
                const envs::StepResult step = env.step(a);
                ++steps;
                done = step.done;
                success = step.reached_goal;
            }
            reached += success ? 1 : 0;
            total_steps += steps;
            ++result.episodes;
        }
    }
    result.done_rate = static_cast<double>(reached) / result.episodes;
    result.mean_steps = static_cast<double>(total_steps) / result.episodes;
    return result;
}

namespace {

struct Window {
    double td = 0.0;
    double loss_q = 0.0;
    double loss_psi = 0.0;
    long updates = 0;

    void add(const agents::LossReport& r) {
        td += r.td_error;
        loss_q += r.loss_q;
        loss_psi += r.loss_psi;
        ++updates;
    }
    double mean(double sum) const { return updates > 0 ? sum / static_cast<double>(updates) : std::nan(""); }
};

void snapshot(const ExperimentConfig& config, RunState& state, const std::vector<Eigen::VectorXd>& goals,
              const std::vector<Eigen::VectorXd>& holdout, int stage, std::int64_t step, std::uint64_t seed,
              Window& window, std::vector<EvalRecord>& out) {
    auto record = [&](const std::string& set, const std::vector<Eigen::VectorXd>& gs) {
        const EvalResult r = evaluate(state.agent, state.eval_env, gs, config.eval_episodes_per_goal);
        EvalRecord rec;
        rec.stage = stage;
        rec.seed = seed;
        rec.step = step;
        rec.eval_set = set;
        rec.done_rate = r.done_rate;
        rec.mean_steps = r.mean_steps;
        rec.td_error = window.mean(window.td);
        rec.loss_q = window.mean(window.loss_q);
        rec.loss_psi = window.mean(window.loss_psi);
        out.push_back(rec);
    };
    record("train", goals);
    if (!holdout.empty()) {
        record("holdout", holdout);
    }
    window = Window{};
}

} // namespace

std::vector<EvalRecord> run_stage(const ExperimentConfig& config, RunState& state,
                                  const std::vector<Eigen::VectorXd>& goals,
                                  const std::vector<Eigen::VectorXd>& holdout, int steps, int stage,
                                  std::int64_t step_offset, std::uint64_t seed) {
    std::vector<EvalRecord> records;
    if (steps < 0) {
        throw ConfigError("steps must be non-negative");
    }
    if (steps == 0) {
        return records;
    }
    if (goals.empty()) {
        throw ConfigError("a training stage needs at least one goal");
    }
    const std::size_t batch = config.agent.batch_size;
    Window window;
    snapshot(config, state, goals, holdout, stage, step_offset, seed, window, records);

    replay::RewardFn reward_fn;
    replay::AchievedGoalFn achieved;
    if (state.her != nullptr) {
        const envs::GoalEnv* env = &state.env;
        reward_fn = [env](const Eigen::VectorXd& s, const Action& a, const Eigen::VectorXd& sn,
                          const Eigen::VectorXd& g) { return env->reward_fn(s, a, sn, g); };
        achieved = [env](const Eigen::VectorXd& s) { return env->achieved_goal(s); };
    }

    Eigen::VectorXd goal = goals[uniform_index(state.rng, goals.size())];
    Eigen::VectorXd s = state.env.reset(goal);
    std::vector<replay::Transition> episode;
    for (int t = 0; t < steps; ++t) {
        const Action a = state.agent.act(s, goal, state.rng);
        const envs::StepResult step = state.env.step(a);
        replay::Transition tr{goal, s, a, step.next_state, step.reward, step.gamma};
        if (state.her != nullptr) {
            episode.push_back(tr);
        }
        state.replay.store(std::move(tr));
        if (state.replay.size() >= batch) {
            const replay::Batch b = replay::draw_mixed(state.replay, state.her, batch, state.rng);
            const agents::LossReport report = state.agent.update(b);
            if (!std::isfinite(report.loss)) {
                throw NumericError("non-finite loss at step " + std::to_string(step_offset + t + 1) + " (seed " +
                                   std::to_string(seed) + ")");
            }
            window.add(report);
        }
        s = step.next_state;
        if (step.done) {
            if (state.her != nullptr) {
                for (replay::Transition& h :
                     replay::her_relabel(episode, config.her.future_steps, reward_fn, achieved, state.rng)) {
                    state.her->store.store(std::move(h));
                }
                episode.clear();
            }
            goal = goals[uniform_index(state.rng, goals.size())];
            s = state.env.reset(goal);
        }
        if ((t + 1) % config.eval_every == 0) {
            snapshot(config, state, goals, holdout, stage, step_offset + t + 1, seed, window, records);
        }
    }
    return records;
}

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, const StageHook& hook) {
    config.validate();
    SeedRun run;
    run.seed = seed;
    run.metrics.seed = seed;
    std::unique_ptr<envs::GoalEnv> env = make_env(config, derive_seed(seed, 2));
    std::unique_ptr<envs::GoalEnv> eval_env = make_env(config, derive_seed(seed, 5));
    run.goals = make_goal_sets(config, *env, seed);

    agents::AgentConfig agent_config = config.agent;
    run.agent = agents::make_agent(agent_config, agents::env_spec(*env), derive_seed(seed, 1));
    replay::DualStore replay(config.replay_capacity);
    std::unique_ptr<replay::HerStore> her;
    if (config.her_enabled()) {
        her = std::make_unique<replay::HerStore>(config.replay_capacity, config.her.sampling_probability);
    }
    Rng rng(derive_seed(seed, 3));
    RunState state{*run.agent, *env, *eval_env, replay, her.get(), rng};

    run.metrics.records =
        run_stage(config, state, run.goals.source, run.goals.holdout, config.stage1_steps, 1, 0, seed);
    if (hook) {
        hook(seed, 1, *run.agent, replay);
    }
    if (config.stage2_steps > 0) {
        replay.retire();
        std::vector<EvalRecord> stage2 = run_stage(config, state, run.goals.target, run.goals.holdout,
                                                   config.stage2_steps, 2, config.stage1_steps, seed);
        run.metrics.records.insert(run.metrics.records.end(), stage2.begin(), stage2.end());
        if (hook) {
            hook(seed, 2, *run.agent, replay);
        }
    }
    return run;
}

std::vector<SeedRun> run_two_stage(const ExperimentConfig& config, const StageHook& hook) {
    config.validate();
    const std::size_t n = config.seeds.size();
    std::vector<SeedRun> runs(n);
    unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                runs[i] = run_seed(config, config.seeds[i], hook);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return runs;
}

std::vector<EvalRecord> collect_records(const std::vector<SeedRun>& runs) {
    std::vector<EvalRecord> out;
    for (const SeedRun& r : runs) {
        out.insert(out.end(), r.metrics.records.begin(), r.metrics.records.end());
    }
    return out;
}

} // namespace usf::harness
