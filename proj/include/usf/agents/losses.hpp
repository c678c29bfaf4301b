#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "usf/agents/networks.hpp"
#include "usf/core/random.hpp"
#include "usf/replay/replay_store.hpp"

namespace usf::agents {

/// A replay batch laid out one transition per column.
struct BatchMatrices {
    Eigen::MatrixXd s;
    Eigen::MatrixXd g;
    Eigen::MatrixXd s_next;
    std::vector<std::size_t> actions;  // finite action sets
    Eigen::MatrixXd a;                 // continuous actions, action_dim x B
    Eigen::VectorXd r;
    Eigen::VectorXd gamma;

    std::size_t size() const { return static_cast<std::size_t>(r.size()); }
};

BatchMatrices to_matrices(const replay::Batch& batch);
BatchMatrices to_matrices(const std::vector<replay::Transition>& batch);

struct LossReport {
    double loss = 0.0;
    /// Q loss, or the reward-prediction loss for that objective.
    double loss_q = 0.0;
    double loss_psi = 0.0;
    /// Mean |Q_hat - Q| over the batch.
    double td_error = 0.0;
};

/// Index of the largest entry; ties go to the lowest index. Throws on empty input.
std::size_t argmax(const Eigen::VectorXd& q);

/// Epsilon-greedy: a uniform action with probability epsilon, else argmax.
std::size_t select_action(const Eigen::VectorXd& q, double epsilon, Rng& rng);

Eigen::VectorXd q_values(const UsfNetwork& net, const Eigen::VectorXd& s, const Eigen::VectorXd& g);

/// Bootstrapped targets, computed entirely with `target` parameters.
struct UsfTargets {
    Eigen::VectorXd q_hat;
    Eigen::MatrixXd psi_hat;  // d x B
    std::vector<std::size_t> next_actions;  // a* per transition (finite actions)
};

/// a* = argmax_a psi'(s', a, g) . w'(g) for finite actions, or the given
/// `next_actions` columns for continuous ones; Q_hat = r + gamma * psi'(s', a*) . w'
/// and psi_hat = phi'(s') + gamma * psi'(s', a*).
UsfTargets usf_targets(const UsfNetwork& target, const BatchMatrices& batch,
                       const Eigen::MatrixXd* next_actions = nullptr);

enum class UsfObjective { q_loss, reward_loss };

/// L = mean (Q_hat - psi . w)^2 + lambda * mean |psi_hat - psi|^2, or with the
/// first term replaced by mean (r - phi(s') . w)^2. Gradients (state, goal,
/// psi head, w) are added into `grads` when non-null; the targets are constants.
LossReport usf_loss(const UsfNetwork& net, const BatchMatrices& batch, const UsfTargets& targets, double lambda,
                    std::vector<Eigen::VectorXd>* grads, UsfObjective objective = UsfObjective::q_loss);

/// mean (r - phi(s') . w(g))^2 alone.
double reward_loss(const UsfNetwork& net, const BatchMatrices& batch, std::vector<Eigen::VectorXd>* grads = nullptr);

/// y = r + gamma * max_a Q'(s', a, g), or Q'(s', a', g) for given continuous `next_actions`.
Eigen::VectorXd dqn_target(const QNetwork& target, const BatchMatrices& batch,
                           const Eigen::MatrixXd* next_actions = nullptr);

/// mean (y - Q(s, a, g))^2; gradients (state, goal, head) into `grads`.
LossReport dqn_loss(const QNetwork& net, const BatchMatrices& batch, const Eigen::VectorXd& y,
                    std::vector<Eigen::VectorXd>* grads);

/// Actor output plus N(0, sigma^2) noise per dimension, clipped to the bounds.
Eigen::VectorXd ddpg_action(const ActorNetwork& actor, const Eigen::VectorXd& s, const Eigen::VectorXd& g,
                            double sigma, Rng& rng);

/// -mean Q(s, pi(s, g), g) under the critic; adds its gradient with respect
/// to the actor parameters into `actor_grad` when non-null.
double actor_loss(const ActorNetwork& actor, const UsfNetwork& critic, const Eigen::MatrixXd& s,
                  const Eigen::MatrixXd& g, Eigen::VectorXd* actor_grad);
double actor_loss(const ActorNetwork& actor, const QNetwork& critic, const Eigen::MatrixXd& s,
                  const Eigen::MatrixXd& g, Eigen::VectorXd* actor_grad);

/// When target copies follow the online networks.
struct TargetSchedule {
    enum class Mode { hard, polyak };

    Mode mode = Mode::hard;
    int every = 10;
    double tau = 0.005;
    std::int64_t updates = 0;

    /// Registers one online update and syncs when due. Returns true on a sync.
    bool after_update(const std::vector<nn::DenseNet*>& target, const std::vector<const nn::DenseNet*>& online);
};

/// Hard copy when tau == 1, Polyak blend otherwise.
void sync_targets(const std::vector<nn::DenseNet*>& target, const std::vector<const nn::DenseNet*>& online,
                  double tau = 1.0);

} // namespace usf::agents
