#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usf/nn/archive.hpp"
#include "usf/nn/dense_net.hpp"

namespace usf::agents {

/// Per-state feature map used when phi is not learned (one-hot cells).
using FeatureFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& state)>;

enum class PhiMode { learned, one_hot };

std::string to_string(PhiMode mode);

/// Layer widths of the state tower, goal tower and head.
struct TowerWidths {
    std::vector<std::size_t> state_hidden{81};
    std::size_t goal_width = 64;
    std::vector<std::size_t> head_hidden{256};
};

/// State tower + goal tower whose outputs (plus an optional action) are
/// concatenated into a head network. Matrices hold one sample per column.
class TowerNet {
public:
    struct Pass {
        Eigen::MatrixXd state_out;
        Eigen::MatrixXd goal_out;
        Eigen::MatrixXd out;
        nn::GradientTape state_tape;
        nn::GradientTape goal_tape;
        nn::GradientTape head_tape;
    };

    TowerNet() = default;
    /// `state_out` is the state tower output width; its activation is
    /// `state_activation`. `action_dim` > 0 appends an action to the head input.
    TowerNet(std::size_t state_dim, std::size_t goal_dim, std::size_t action_dim, std::size_t state_out,
             nn::Activation state_activation, const TowerWidths& widths, std::size_t head_out, std::uint64_t seed);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g,
                            const Eigen::MatrixXd* a = nullptr) const;
    Pass forward_train(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g, const Eigen::MatrixXd* a = nullptr) const;
    /// Adds parameter gradients into grads[0..2] (state, goal, head) and,
    /// when `d_action` is non-null, stores dLoss/dAction there.
    /// `d_state_extra` is an additional gradient on the state tower output.
    void backward(const Pass& pass, const Eigen::MatrixXd& d_out, Eigen::VectorXd* grads,
                  Eigen::MatrixXd* d_action = nullptr, const Eigen::MatrixXd* d_state_extra = nullptr) const;

    std::size_t action_dim() const { return action_dim_; }
    std::size_t state_out() const { return state_net.output_size(); }

    nn::DenseNet state_net;
    nn::DenseNet goal_net;
    nn::DenseNet head;

private:
    Eigen::MatrixXd head_input(const Eigen::MatrixXd& so, const Eigen::MatrixXd& go, const Eigen::MatrixXd* a) const;
    std::size_t action_dim_ = 0;
};

struct UsfShape {
    std::size_t state_dim = 2;
    std::size_t goal_dim = 2;
    std::size_t action_count = 0;  // finite action sets
    std::size_t action_dim = 0;    // continuous actions
    PhiMode mode = PhiMode::learned;
    /// Learned-phi width; ignored in one-hot mode where d is the feature count.
    std::size_t feature_dim = 64;
    TowerWidths widths{};
    std::vector<std::size_t> w_hidden{64, 64};
};

/// Universal successor-feature network. Learned mode: phi = state tower
/// output z (width d) scaled to unit length, the norm of one-hot phi; the
/// psi head reads z itself. One-hot mode: phi comes from a FeatureFn and the state
/// tower is an embedding. The head returns psi for every action stacked
/// (finite actions, |A| * d rows) or for the given action (d rows); w_net
/// maps the goal to w(g). Q = psi . w.
class UsfNetwork {
public:
    UsfNetwork() = default;
    UsfNetwork(const UsfShape& shape, std::uint64_t seed, FeatureFn one_hot = {}, std::size_t one_hot_dim = 0);

    const UsfShape& shape() const { return shape_; }
    std::size_t d() const { return d_; }
    bool discrete() const { return shape_.action_count > 0; }
    std::size_t action_count() const { return shape_.action_count; }

    /// phi of each column of `s`.
    Eigen::MatrixXd phi(const Eigen::MatrixXd& s) const;
    /// Learned mode only: phi with the state tower's tape and raw output kept
    /// for phi_backward, which adds the state tower gradient for dLoss/dphi.
    Eigen::MatrixXd phi_train(const Eigen::MatrixXd& s, nn::GradientTape& tape, Eigen::MatrixXd& raw) const;
    void phi_backward(const nn::GradientTape& tape, const Eigen::MatrixXd& raw, const Eigen::MatrixXd& d_phi,
                      Eigen::VectorXd& grad) const;
    Eigen::MatrixXd psi(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g, const Eigen::MatrixXd* a = nullptr) const {
        return tower.forward(s, g, a);
    }
    Eigen::MatrixXd w(const Eigen::MatrixXd& g) const { return w_net.forward_batch(g); }

    /// Q(s, a, g) for every action of a single state.
    Eigen::VectorXd q_values(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const;
    /// Q for a single continuous action.
    double q_value(const Eigen::VectorXd& s, const Eigen::VectorXd& g, const Eigen::VectorXd& a) const;

    /// Parameter nets in gradient order: state, goal, psi head, w.
    std::vector<nn::DenseNet*> nets();
    std::vector<const nn::DenseNet*> nets() const;

    void save(nn::Archive& archive, const std::string& prefix) const;
    void load(const nn::Archive& archive, const std::string& prefix);

    TowerNet tower;
    nn::DenseNet w_net;
    FeatureFn feature_fn;

private:
    UsfShape shape_{};
    std::size_t d_ = 0;
};

/// Goal-conditioned Q network: |A| outputs for finite actions, or a single
/// output with the action appended to the head input.
class QNetwork {
public:
    QNetwork() = default;
    QNetwork(std::size_t state_dim, std::size_t goal_dim, std::size_t action_count, std::size_t action_dim,
             const TowerWidths& widths, std::uint64_t seed);

    bool discrete() const { return action_count_ > 0; }
    std::size_t action_count() const { return action_count_; }
    Eigen::VectorXd q_values(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const;
    double q_value(const Eigen::VectorXd& s, const Eigen::VectorXd& g, const Eigen::VectorXd& a) const;

    std::vector<nn::DenseNet*> nets();
    std::vector<const nn::DenseNet*> nets() const;
    void save(nn::Archive& archive, const std::string& prefix) const;
    void load(const nn::Archive& archive, const std::string& prefix);

    TowerNet tower;

private:
    std::size_t action_count_ = 0;
};

/// Deterministic policy [s; g] -> bound * tanh(.).
class ActorNetwork {
public:
    ActorNetwork() = default;
    ActorNetwork(std::size_t state_dim, std::size_t goal_dim, std::size_t action_dim, double bound,
                 const std::vector<std::size_t>& hidden, std::uint64_t seed);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g) const;
    Eigen::MatrixXd forward_train(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g, nn::GradientTape& tape) const;
    /// Adds dLoss/dParameters given dLoss/dAction.
    void backward(const nn::GradientTape& tape, const Eigen::MatrixXd& d_action, Eigen::VectorXd& grad) const;

    double bound() const { return bound_; }
    std::size_t action_dim() const { return net.output_size(); }

    nn::DenseNet net;

private:
    double bound_ = 1.0;
};

} // namespace usf::agents
