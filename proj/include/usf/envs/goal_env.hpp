#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <variant>

#include <Eigen/Core>

namespace usf {

/// A discrete action index or a continuous action vector.
using Action = std::variant<std::size_t, Eigen::VectorXd>;

} // namespace usf

namespace usf::envs {

struct ActionSpace {
    std::size_t count = 0;     // > 0 for finite action sets
    std::size_t dim = 0;       // > 0 for continuous boxes
    double low = 0.0;
    double high = 0.0;

    bool discrete() const { return count > 0; }
};

struct StepResult {
    Eigen::VectorXd next_state;
    double reward = 0.0;
    /// Pseudo-discount of the transition: 0 exactly when the goal was reached.
    double gamma = 0.0;
    bool done = false;
    bool reached_goal = false;
};

struct RewardOutcome {
    double reward = 0.0;
    double gamma = 0.0;
    bool reached_goal = false;
};

/// Episodic multi-goal environment. Goals and states are real vectors in the
/// encoding the networks consume.
class GoalEnv {
public:
    virtual ~GoalEnv() = default;

    virtual std::string name() const = 0;
    virtual std::size_t state_dim() const = 0;
    virtual std::size_t goal_dim() const = 0;
    virtual ActionSpace action_space() const = 0;
    virtual int max_steps() const = 0;

    virtual Eigen::VectorXd reset(const Eigen::VectorXd& goal) = 0;
    virtual StepResult step(const Action& action) = 0;
    virtual bool episode_active() const = 0;

    /// Pseudo-reward and pseudo-discount of (s, a, s') under goal g, using the
    /// reward structure of the current episode.
    virtual RewardOutcome reward_fn(const Eigen::VectorXd& state, const Action& action,
                                    const Eigen::VectorXd& next_state, const Eigen::VectorXd& goal) const = 0;
    /// The goal that `state` satisfies (used to relabel goals in hindsight).
    virtual Eigen::VectorXd achieved_goal(const Eigen::VectorXd& state) const = 0;

    virtual std::unique_ptr<GoalEnv> clone() const = 0;
};

} // namespace usf::envs
