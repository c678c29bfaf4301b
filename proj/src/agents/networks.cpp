#include "usf/agents/networks.hpp"

#include <algorithm>

#include "usf/core/error.hpp"
#include "usf/core/random.hpp"

namespace usf::agents {

std::string to_string(PhiMode mode) {
    return mode == PhiMode::learned ? "learned" : "one_hot";
}

namespace {

Eigen::MatrixXd column(const Eigen::VectorXd& v) {
    return Eigen::MatrixXd(v);
}

void load_into(nn::DenseNet& net, const nn::Archive& archive, const std::string& name) {
    nn::DenseNet loaded = nn::get_net(archive, name);
    if (!net.shapes().empty() && loaded.shapes() != net.shapes()) {
        throw ConfigError("checkpoint network '" + name + "' does not match the configured architecture");
    }
    net = std::move(loaded);
}

// Shrinks the output layer so initial products psi.w stay near zero; at full
// scale the max in the bootstrap target feeds on the random initial values.
constexpr double kOutputScale = 0.1;

void shrink_output(nn::DenseNet& net, double factor) {
    const std::size_t last = net.layer_count() - 1;
    net.weight(last) *= factor;
    net.bias(last) *= factor;
}

} // namespace

TowerNet::TowerNet(std::size_t state_dim, std::size_t goal_dim, std::size_t action_dim, std::size_t state_out,
                   nn::Activation state_activation, const TowerWidths& widths, std::size_t head_out,
                   std::uint64_t seed)
    : state_net(nn::DenseNet::mlp(state_dim, widths.state_hidden, state_out, state_activation, derive_seed(seed, 1))),
      goal_net(nn::DenseNet::mlp(goal_dim, {}, widths.goal_width, nn::Activation::relu, derive_seed(seed, 2))),
      head(nn::DenseNet::mlp(state_out + widths.goal_width + action_dim, widths.head_hidden, head_out,
                             nn::Activation::identity, derive_seed(seed, 3))),
      action_dim_(action_dim) {}

Eigen::MatrixXd TowerNet::head_input(const Eigen::MatrixXd& so, const Eigen::MatrixXd& go,
                                     const Eigen::MatrixXd* a) const {
    const Eigen::Index rows = so.rows() + go.rows() + static_cast<Eigen::Index>(action_dim_);
    Eigen::MatrixXd in(rows, so.cols());
    in.topRows(so.rows()) = so;
    in.middleRows(so.rows(), go.rows()) = go;
    if (action_dim_ > 0) {
        if (a == nullptr || a->rows() != static_cast<Eigen::Index>(action_dim_) || a->cols() != so.cols()) {
            throw ConfigError("head expects an action block of " + std::to_string(action_dim_) + " rows");
        }
        in.bottomRows(static_cast<Eigen::Index>(action_dim_)) = *a;
    }
    return in;
}

namespace {

constexpr double kMinNorm = 1e-8;

Eigen::MatrixXd unit_columns(const Eigen::MatrixXd& raw) {
    Eigen::MatrixXd out = raw;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        out.col(j) /= std::max(raw.col(j).norm(), kMinNorm);
    }
    return out;
}

} // namespace

Eigen::MatrixXd TowerNet::forward(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g, const Eigen::MatrixXd* a) const {
    return head.forward_batch(head_input(state_net.forward_batch(s), goal_net.forward_batch(g), a));
}

TowerNet::Pass TowerNet::forward_train(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g,
                                       const Eigen::MatrixXd* a) const {
    Pass pass;
    pass.state_out = state_net.forward_batch(s, pass.state_tape);
    pass.goal_out = goal_net.forward_batch(g, pass.goal_tape);
    pass.out = head.forward_batch(head_input(pass.state_out, pass.goal_out, a), pass.head_tape);
    return pass;
}

void TowerNet::backward(const Pass& pass, const Eigen::MatrixXd& d_out, Eigen::VectorXd* grads,
                        Eigen::MatrixXd* d_action, const Eigen::MatrixXd* d_state_extra) const {
    const Eigen::MatrixXd d_in = head.backward(pass.head_tape, d_out, grads[2]);
    const Eigen::Index ns = pass.state_out.rows();
    const Eigen::Index ng = pass.goal_out.rows();
    Eigen::MatrixXd d_state = d_in.topRows(ns);
    if (d_state_extra != nullptr) {
        d_state += *d_state_extra;
    }
    state_net.backward(pass.state_tape, d_state, grads[0]);
    goal_net.backward(pass.goal_tape, d_in.middleRows(ns, ng), grads[1]);
    if (d_action != nullptr) {
        *d_action = d_in.bottomRows(static_cast<Eigen::Index>(action_dim_));
    }
}

UsfNetwork::UsfNetwork(const UsfShape& shape, std::uint64_t seed, FeatureFn one_hot, std::size_t one_hot_dim)
    : feature_fn(std::move(one_hot)), shape_(shape) {
    if ((shape.action_count > 0) == (shape.action_dim > 0)) {
        throw ConfigError("a USF network needs either a finite action count or a continuous action dimension");
    }
    std::size_t state_out = 0;
    nn::Activation state_activation = nn::Activation::identity;
    if (shape.mode == PhiMode::one_hot) {
        if (!feature_fn || one_hot_dim == 0) {
            throw ConfigError("one-hot phi needs a feature map and its dimension");
        }
        d_ = one_hot_dim;
        // the state tower is an embedding here, not phi
        state_out = shape.widths.state_hidden.empty() ? 64 : shape.widths.state_hidden.back();
        state_activation = nn::Activation::relu;
        TowerWidths widths = shape.widths;
        if (!widths.state_hidden.empty()) {
            widths.state_hidden.pop_back();
        }
        const std::size_t head_out = shape.action_count > 0 ? shape.action_count * d_ : d_;
        tower = TowerNet(shape.state_dim, shape.goal_dim, shape.action_dim, state_out, state_activation, widths,
                         head_out, seed);
    } else {
        if (shape.feature_dim == 0) {
            throw ConfigError("feature dimension must be positive");
        }
        d_ = shape.feature_dim;
        const std::size_t head_out = shape.action_count > 0 ? shape.action_count * d_ : d_;
        tower = TowerNet(shape.state_dim, shape.goal_dim, shape.action_dim, d_, state_activation, shape.widths,
                         head_out, seed);
    }
    w_net = nn::DenseNet::mlp(shape.goal_dim, shape.w_hidden, d_, nn::Activation::identity, derive_seed(seed, 4));
    shrink_output(tower.head, kOutputScale);
    shrink_output(w_net, kOutputScale);
}

Eigen::MatrixXd UsfNetwork::phi(const Eigen::MatrixXd& s) const {
    if (shape_.mode == PhiMode::learned) {
        return unit_columns(tower.state_net.forward_batch(s));
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(d_), s.cols());
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        out.col(j) = feature_fn(s.col(j));
    }
    return out;
}

Eigen::MatrixXd UsfNetwork::phi_train(const Eigen::MatrixXd& s, nn::GradientTape& tape, Eigen::MatrixXd& raw) const {
    if (shape_.mode != PhiMode::learned) {
        throw UsageError("phi_train needs learned features");
    }
    raw = tower.state_net.forward_batch(s, tape);
    return unit_columns(raw);
}

void UsfNetwork::phi_backward(const nn::GradientTape& tape, const Eigen::MatrixXd& raw, const Eigen::MatrixXd& d_phi,
                              Eigen::VectorXd& grad) const {
    // d(z/|z|) = (I - u u^T) dz / |z|
    Eigen::MatrixXd d_raw(d_phi.rows(), d_phi.cols());
    for (Eigen::Index j = 0; j < d_phi.cols(); ++j) {
        const double n = std::max(raw.col(j).norm(), kMinNorm);
        const Eigen::VectorXd u = raw.col(j) / n;
        d_raw.col(j) = (d_phi.col(j) - u * u.dot(d_phi.col(j))) / n;
    }
    tower.state_net.backward(tape, d_raw, grad);
}

Eigen::VectorXd UsfNetwork::q_values(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const {
    if (!discrete()) {
        throw UsageError("q_values needs a finite action set");
    }
    const Eigen::MatrixXd p = psi(column(s), column(g));
    const Eigen::VectorXd wg = w_net.forward(g);
    const auto d = static_cast<Eigen::Index>(d_);
    Eigen::VectorXd q(static_cast<Eigen::Index>(shape_.action_count));
    for (Eigen::Index a = 0; a < q.size(); ++a) {
        q[a] = p.col(0).segment(a * d, d).dot(wg);
    }
    return q;
}

double UsfNetwork::q_value(const Eigen::VectorXd& s, const Eigen::VectorXd& g, const Eigen::VectorXd& a) const {
    if (discrete()) {
        throw UsageError("q_value needs a continuous action");
    }
    const Eigen::MatrixXd am = column(a);
    return psi(column(s), column(g), &am).col(0).dot(w_net.forward(g));
}

std::vector<nn::DenseNet*> UsfNetwork::nets() {
    return {&tower.state_net, &tower.goal_net, &tower.head, &w_net};
}

std::vector<const nn::DenseNet*> UsfNetwork::nets() const {
    return {&tower.state_net, &tower.goal_net, &tower.head, &w_net};
}

void UsfNetwork::save(nn::Archive& archive, const std::string& prefix) const {
    nn::put_net(archive, prefix + ".state", tower.state_net);
    nn::put_net(archive, prefix + ".goal", tower.goal_net);
    nn::put_net(archive, prefix + ".psi", tower.head);
    nn::put_net(archive, prefix + ".w", w_net);
}

void UsfNetwork::load(const nn::Archive& archive, const std::string& prefix) {
    load_into(tower.state_net, archive, prefix + ".state");
    load_into(tower.goal_net, archive, prefix + ".goal");
    load_into(tower.head, archive, prefix + ".psi");
    load_into(w_net, archive, prefix + ".w");
}

QNetwork::QNetwork(std::size_t state_dim, std::size_t goal_dim, std::size_t action_count, std::size_t action_dim,
                   const TowerWidths& widths, std::uint64_t seed)
    : action_count_(action_count) {
    if ((action_count > 0) == (action_dim > 0)) {
        throw ConfigError("a Q network needs either a finite action count or a continuous action dimension");
    }
    TowerWidths tw = widths;
    std::size_t state_out = 64;
    if (!tw.state_hidden.empty()) {
        state_out = tw.state_hidden.back();
        tw.state_hidden.pop_back();
    }
    tower = TowerNet(state_dim, goal_dim, action_dim, state_out, nn::Activation::relu, tw,
                     action_count > 0 ? action_count : 1, seed);
}

Eigen::VectorXd QNetwork::q_values(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const {
    if (!discrete()) {
        throw UsageError("q_values needs a finite action set");
    }
    return tower.forward(column(s), column(g)).col(0);
}

double QNetwork::q_value(const Eigen::VectorXd& s, const Eigen::VectorXd& g, const Eigen::VectorXd& a) const {
    if (discrete()) {
        throw UsageError("q_value needs a continuous action");
    }
    const Eigen::MatrixXd am = column(a);
    return tower.forward(column(s), column(g), &am)(0, 0);
}

std::vector<nn::DenseNet*> QNetwork::nets() {
    return {&tower.state_net, &tower.goal_net, &tower.head};
}

std::vector<const nn::DenseNet*> QNetwork::nets() const {
    return {&tower.state_net, &tower.goal_net, &tower.head};
}

void QNetwork::save(nn::Archive& archive, const std::string& prefix) const {
    nn::put_net(archive, prefix + ".state", tower.state_net);
    nn::put_net(archive, prefix + ".goal", tower.goal_net);
    nn::put_net(archive, prefix + ".head", tower.head);
}

void QNetwork::load(const nn::Archive& archive, const std::string& prefix) {
    load_into(tower.state_net, archive, prefix + ".state");
    load_into(tower.goal_net, archive, prefix + ".goal");
    load_into(tower.head, archive, prefix + ".head");
}

ActorNetwork::ActorNetwork(std::size_t state_dim, std::size_t goal_dim, std::size_t action_dim, double bound,
                           const std::vector<std::size_t>& hidden, std::uint64_t seed)
    : net(nn::DenseNet::mlp(state_dim + goal_dim, hidden, action_dim, nn::Activation::tanh, seed)), bound_(bound) {
    if (!(bound > 0.0)) {
        throw ConfigError("action bound must be positive");
    }
}

namespace {

Eigen::MatrixXd stack(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g) {
    Eigen::MatrixXd in(s.rows() + g.rows(), s.cols());
    in.topRows(s.rows()) = s;
    in.bottomRows(g.rows()) = g;
    return in;
}

} // namespace

Eigen::MatrixXd ActorNetwork::forward(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g) const {
    return bound_ * net.forward_batch(stack(s, g));
}

Eigen::MatrixXd ActorNetwork::forward_train(const Eigen::MatrixXd& s, const Eigen::MatrixXd& g,
                                            nn::GradientTape& tape) const {
    return bound_ * net.forward_batch(stack(s, g), tape);
}

void ActorNetwork::backward(const nn::GradientTape& tape, const Eigen::MatrixXd& d_action,
                            Eigen::VectorXd& grad) const {
    net.backward(tape, bound_ * d_action, grad);
}

} // namespace usf::agents
