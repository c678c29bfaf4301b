#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace usf::harness {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double value = 0.0;  // the measured quantity compared against the threshold
};

/// Central-difference checks of the USF loss (learned, one-hot and
/// continuous), the reward-prediction loss, the DQN loss (finite and
/// continuous) and the actor objective under both critics, each at `points`
/// random parameter points. Passes when the worst relative error < tolerance.
CheckResult check_gradients(std::uint64_t seed, int points = 10, double tolerance = 1e-4);

/// On a 5x5 open grid with one-hot features: policy evaluation of rewards
/// phi(s')^T w equals tabular successor features times w, for `pairs` random
/// (goal, w, policy) draws.
CheckResult check_factorization(std::uint64_t seed, int pairs = 10, double tolerance = 1e-8);

/// TD learning of a successor-feature table under the optimal policy of a
/// 5x5 open grid, compared with the exact solution in the sup norm.
CheckResult check_td_successor_features(std::uint64_t seed, int updates = 10000, double learning_rate = 0.5,
                                        double tolerance = 0.05);

/// Greedy value-iteration policies reach every goal of the four-room grid in
/// exactly the BFS shortest-path number of steps from every cell.
CheckResult check_value_iteration_paths(std::uint64_t seed, int goals = 6);

/// Dual-store old fraction over `draws` draws lies in [0.49, 0.51].
CheckResult check_dual_store_fraction(std::uint64_t seed, int draws = 100000);

/// Hindsight-relabelled transitions agree exactly with the reward function
/// (`count` transitions from random episodes of the mixed four-room grid).
CheckResult check_her_consistency(std::uint64_t seed, int count = 10000);

std::vector<CheckResult> run_verification_suite(std::uint64_t seed);

} // namespace usf::harness
