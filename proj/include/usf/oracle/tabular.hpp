#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "usf/envs/grid_world.hpp"

namespace usf::oracle {

/// Deterministic finite MDP for one goal. Entry s * action_count + a holds
/// the successor, reward and pseudo-discount of taking a in s.
struct TabularMdp {
    std::size_t state_count = 0;
    std::size_t action_count = 0;
    std::vector<std::size_t> next;
    std::vector<double> reward;
    std::vector<double> gamma;
    std::size_t goal = 0;

    std::size_t at(std::size_t s, std::size_t a) const { return s * action_count + a; }
    /// Throws ConfigError unless the tables are complete and the goal is absorbing.
    void validate() const;
};

/// MDP of `env`'s layout for `goal` under a resolved (constant or room)
/// structure. States are the layout's cell indices; the goal self-loops with
/// reward 0 and gamma 0.
TabularMdp grid_mdp(const envs::GridWorld& env, envs::Cell goal, envs::RewardStructure structure);

/// Same dynamics with rewards replaced by phi(s')^T w.
TabularMdp with_feature_rewards(const TabularMdp& mdp, const Eigen::MatrixXd& phi, const Eigen::VectorXd& w);

/// Bellman-optimal Q (state_count x action_count), iterated until the
/// sup-norm change of a sweep is below `tol`. When `residuals` is given it
/// receives the sup-norm change of every sweep.
Eigen::MatrixXd value_iteration(const TabularMdp& mdp, double tol, std::vector<double>* residuals = nullptr);

/// Argmax per row; ties go to the lowest action index.
std::vector<std::size_t> greedy_policy(const Eigen::MatrixXd& q);

/// Exact Q of a deterministic policy by a linear solve. Throws NumericError
/// when the system is singular.
Eigen::MatrixXd policy_evaluation(const TabularMdp& mdp, const std::vector<std::size_t>& policy);

/// Successor features of `policy` for per-state features `phi` (n x d):
/// psi(s, a) = phi(s') + gamma(s, a) * psi(s', pi(s')). Row s * action_count
/// + a of the result is psi(s, a). Uses a dense solve up to 1e5 entries of
/// n * d and fixpoint iteration beyond; both to 1e-10.
Eigen::MatrixXd tabular_sr(const TabularMdp& mdp, const std::vector<std::size_t>& policy, const Eigen::MatrixXd& phi);

/// BFS length in cardinal moves. Throws ConfigError if `to` is unreachable.
int shortest_steps(const envs::GridLayout& layout, envs::Cell from, envs::Cell to);

/// Steps the greedy policy needs from `from` to the goal, or -1 if it does
/// not arrive within `limit` steps.
int rollout_steps(const TabularMdp& mdp, const std::vector<std::size_t>& policy, std::size_t from, int limit);

} // namespace usf::oracle
