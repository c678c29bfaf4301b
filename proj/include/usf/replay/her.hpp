#pragma once

#include <functional>
#include <vector>

#include "usf/core/random.hpp"
#include "usf/replay/replay_store.hpp"

namespace usf::replay {

using RewardFn = std::function<envs::RewardOutcome(const Eigen::VectorXd& s, const Action& a,
                                                   const Eigen::VectorXd& s_next, const Eigen::VectorXd& g)>;
using AchievedGoalFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& state)>;

/// "Future" relabelling of one episode. Transition t (0-based, episode length
/// T) gets one copy whose goal is the achieved goal of state s_j with j
/// uniform in [t + 1, min(t + future_steps, T)]; r and gamma are recomputed
/// with `reward_fn`. future_steps == 0 yields nothing.
/// Throws Unsupported when `reward_fn` is empty.
std::vector<Transition> her_relabel(const std::vector<Transition>& trajectory, int future_steps,
                                    const RewardFn& reward_fn, const AchievedGoalFn& achieved_goal, Rng& rng);

} // namespace usf::replay
