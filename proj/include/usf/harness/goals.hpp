#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "usf/envs/goal_env.hpp"
#include "usf/harness/config.hpp"

namespace usf::harness {

struct GoalSets {
    std::vector<Eigen::VectorXd> source;
    std::vector<Eigen::VectorXd> target;
    std::vector<Eigen::VectorXd> holdout;
};

/// Builds the environment described by `config`; `seed` drives the
/// per-episode structure coin of the mixed gridworld.
std::unique_ptr<envs::GoalEnv> make_env(const ExperimentConfig& config, std::uint64_t seed);

/// Pairwise-disjoint source, target and hold-out goals. Gridworld: an equal
/// number per room from room interiors. Reacher: source and target from the
/// training regions, hold-out from reachable points outside them.
GoalSets make_goal_sets(const ExperimentConfig& config, const envs::GoalEnv& env, std::uint64_t seed);

} // namespace usf::harness
