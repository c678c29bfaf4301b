#include "usf/agents/losses.hpp"

#include <algorithm>
#include <cmath>

#include "usf/core/error.hpp"

namespace usf::agents {

namespace {

template <typename Get>
BatchMatrices build(std::size_t n, Get get) {
    if (n == 0) {
        throw UsageError("empty batch");
    }
    const replay::Transition& first = get(0);
    const auto b = static_cast<Eigen::Index>(n);
    BatchMatrices m;
    m.s.resize(first.s.size(), b);
    m.g.resize(first.g.size(), b);
    m.s_next.resize(first.s_next.size(), b);
    m.r.resize(b);
    m.gamma.resize(b);
    const bool discrete = std::holds_alternative<std::size_t>(first.a);
    if (discrete) {
        m.actions.resize(n);
    } else {
        m.a.resize(std::get<Eigen::VectorXd>(first.a).size(), b);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const replay::Transition& t = get(i);
        const auto j = static_cast<Eigen::Index>(i);
        m.s.col(j) = t.s;
        m.g.col(j) = t.g;
        m.s_next.col(j) = t.s_next;
        m.r[j] = t.r;
        m.gamma[j] = t.gamma;
        if (discrete) {
            m.actions[i] = std::get<std::size_t>(t.a);
        } else {
            m.a.col(j) = std::get<Eigen::VectorXd>(t.a);
        }
    }
    return m;
}

void check_finite(double value, const char* what) {
    if (!std::isfinite(value)) {
        throw NumericError(std::string("non-finite ") + what);
    }
}

void ensure_grads(std::vector<Eigen::VectorXd>* grads, const std::vector<const nn::DenseNet*>& nets) {
    if (grads == nullptr) {
        return;
    }
    if (grads->size() != nets.size()) {
        grads->assign(nets.size(), Eigen::VectorXd());
    }
    for (std::size_t k = 0; k < nets.size(); ++k) {
        if ((*grads)[k].size() == 0) {
            (*grads)[k] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nets[k]->parameter_count()));
        }
    }
}

} // namespace

BatchMatrices to_matrices(const replay::Batch& batch) {
    return build(batch.size(), [&](std::size_t i) -> const replay::Transition& { return *batch[i]; });
}

BatchMatrices to_matrices(const std::vector<replay::Transition>& batch) {
    return build(batch.size(), [&](std::size_t i) -> const replay::Transition& { return batch[i]; });
}

std::size_t argmax(const Eigen::VectorXd& q) {
    if (q.size() == 0) {
        throw UsageError("argmax of an empty vector");
    }
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q.size(); ++a) {
        if (q[a] > q[best]) {
            best = a;
        }
    }
    return static_cast<std::size_t>(best);
}

std::size_t select_action(const Eigen::VectorXd& q, double epsilon, Rng& rng) {
    if (q.size() == 0) {
        throw UsageError("cannot select an action from empty action values");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ConfigError("epsilon must lie in [0, 1]");
    }
    if (uniform01(rng) < epsilon) {
        return uniform_index(rng, static_cast<std::size_t>(q.size()));
    }
    return argmax(q);
}

Eigen::VectorXd q_values(const UsfNetwork& net, const Eigen::VectorXd& s, const Eigen::VectorXd& g) {
    return net.q_values(s, g);
}

UsfTargets usf_targets(const UsfNetwork& target, const BatchMatrices& batch, const Eigen::MatrixXd* next_actions) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) {
        throw UsageError("empty batch");
    }
    const auto d = static_cast<Eigen::Index>(target.d());
    const Eigen::MatrixXd w = target.w(batch.g);
    const Eigen::MatrixXd phi = target.phi(batch.s_next);
    UsfTargets out;
    out.q_hat.resize(b);
    out.psi_hat.resize(d, b);
    if (target.discrete()) {
        const Eigen::MatrixXd psi = target.psi(batch.s_next, batch.g);
        const auto na = static_cast<Eigen::Index>(target.action_count());
        out.next_actions.resize(static_cast<std::size_t>(b));
        Eigen::VectorXd q(na);
        for (Eigen::Index j = 0; j < b; ++j) {
            for (Eigen::Index a = 0; a < na; ++a) {
                q[a] = psi.col(j).segment(a * d, d).dot(w.col(j));
            }
            const auto best = static_cast<Eigen::Index>(argmax(q));
            out.next_actions[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
            out.q_hat[j] = batch.r[j] + batch.gamma[j] * q[best];
            out.psi_hat.col(j) = phi.col(j) + batch.gamma[j] * psi.col(j).segment(best * d, d);
        }
    } else {
        if (next_actions == nullptr) {
            throw UsageError("continuous targets need the next actions");
        }
        const Eigen::MatrixXd psi = target.psi(batch.s_next, batch.g, next_actions);
        for (Eigen::Index j = 0; j < b; ++j) {
            out.q_hat[j] = batch.r[j] + batch.gamma[j] * psi.col(j).dot(w.col(j));
            out.psi_hat.col(j) = phi.col(j) + batch.gamma[j] * psi.col(j);
        }
    }
    return out;
}

LossReport usf_loss(const UsfNetwork& net, const BatchMatrices& batch, const UsfTargets& targets, double lambda,
                    std::vector<Eigen::VectorXd>* grads, UsfObjective objective) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) {
        throw UsageError("empty batch");
    }
    if (!(lambda >= 0.0)) {
        throw ConfigError("lambda must be non-negative");
    }
    const auto d = static_cast<Eigen::Index>(net.d());
    const double inv_b = 1.0 / static_cast<double>(b);
    const bool discrete = net.discrete();

    const TowerNet::Pass pass = net.tower.forward_train(batch.s, batch.g, discrete ? nullptr : &batch.a);
    nn::GradientTape w_tape;
    const Eigen::MatrixXd w = net.w_net.forward_batch(batch.g, w_tape);

    // psi of the taken action, d x B
    Eigen::MatrixXd psi(d, b);
    for (Eigen::Index j = 0; j < b; ++j) {
        const Eigen::Index offset = discrete ? static_cast<Eigen::Index>(batch.actions[static_cast<std::size_t>(j)]) * d : 0;
        if (discrete && batch.actions[static_cast<std::size_t>(j)] >= net.action_count()) {
            throw ConfigError("action index out of range");
        }
        psi.col(j) = pass.out.col(j).segment(offset, d);
    }

    LossReport report;
    Eigen::VectorXd q(b);
    for (Eigen::Index j = 0; j < b; ++j) {
        q[j] = psi.col(j).dot(w.col(j));
    }
    const Eigen::VectorXd delta = q - targets.q_hat;  // Q - Q_hat
    report.td_error = delta.cwiseAbs().mean();
    const Eigen::MatrixXd psi_err = psi - targets.psi_hat;
    report.loss_psi = psi_err.colwise().squaredNorm().sum() * inv_b;

    Eigen::MatrixXd d_psi = (2.0 * lambda * inv_b) * psi_err;
    Eigen::MatrixXd d_w = Eigen::MatrixXd::Zero(d, b);
    Eigen::MatrixXd d_phi_next;
    nn::GradientTape phi_tape;
    Eigen::MatrixXd phi_raw;

    if (objective == UsfObjective::q_loss) {
        report.loss_q = delta.squaredNorm() * inv_b;
        for (Eigen::Index j = 0; j < b; ++j) {
            d_psi.col(j) += (2.0 * inv_b * delta[j]) * w.col(j);
            d_w.col(j) += (2.0 * inv_b * delta[j]) * psi.col(j);
        }
    } else {
        const bool learned = net.shape().mode == PhiMode::learned;
        const Eigen::MatrixXd phi =
            learned ? net.phi_train(batch.s_next, phi_tape, phi_raw) : net.phi(batch.s_next);
        Eigen::VectorXd e(b);  // phi . w - r
        for (Eigen::Index j = 0; j < b; ++j) {
            e[j] = phi.col(j).dot(w.col(j)) - batch.r[j];
        }
        report.loss_q = e.squaredNorm() * inv_b;
        for (Eigen::Index j = 0; j < b; ++j) {
            d_w.col(j) += (2.0 * inv_b * e[j]) * phi.col(j);
        }
        if (learned && grads != nullptr) {
            d_phi_next = w * (2.0 * inv_b * e).asDiagonal();
        }
    }
    report.loss = report.loss_q + lambda * report.loss_psi;
    check_finite(report.loss, "USF loss");

    if (grads != nullptr) {
        ensure_grads(grads, net.nets());
        Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(pass.out.rows(), b);
        for (Eigen::Index j = 0; j < b; ++j) {
            const Eigen::Index offset =
                discrete ? static_cast<Eigen::Index>(batch.actions[static_cast<std::size_t>(j)]) * d : 0;
            d_out.col(j).segment(offset, d) = d_psi.col(j);
        }
        net.tower.backward(pass, d_out, grads->data());
        net.w_net.backward(w_tape, d_w, (*grads)[3]);
        if (d_phi_next.size() > 0) {
            net.phi_backward(phi_tape, phi_raw, d_phi_next, (*grads)[0]);
        }
    }
    return report;
}

double reward_loss(const UsfNetwork& net, const BatchMatrices& batch, std::vector<Eigen::VectorXd>* grads) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) {
        throw UsageError("empty batch");
    }
    const double inv_b = 1.0 / static_cast<double>(b);
    const bool learned = net.shape().mode == PhiMode::learned;
    nn::GradientTape phi_tape;
    nn::GradientTape w_tape;
    Eigen::MatrixXd phi_raw;
    const Eigen::MatrixXd phi =
        learned ? net.phi_train(batch.s_next, phi_tape, phi_raw) : net.phi(batch.s_next);
    const Eigen::MatrixXd w = net.w_net.forward_batch(batch.g, w_tape);
    Eigen::VectorXd e(b);
    for (Eigen::Index j = 0; j < b; ++j) {
        e[j] = phi.col(j).dot(w.col(j)) - batch.r[j];
    }
    const double loss = e.squaredNorm() * inv_b;
    check_finite(loss, "reward loss");
    if (grads != nullptr) {
        ensure_grads(grads, net.nets());
        net.w_net.backward(w_tape, phi * (2.0 * inv_b * e).asDiagonal(), (*grads)[3]);
        if (learned) {
            net.phi_backward(phi_tape, phi_raw, w * (2.0 * inv_b * e).asDiagonal(), (*grads)[0]);
        }
    }
    return loss;
}

Eigen::VectorXd dqn_target(const QNetwork& target, const BatchMatrices& batch, const Eigen::MatrixXd* next_actions) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) {
        throw UsageError("empty batch");
    }
    Eigen::VectorXd y(b);
    if (target.discrete()) {
        const Eigen::MatrixXd q = target.tower.forward(batch.s_next, batch.g);
        for (Eigen::Index j = 0; j < b; ++j) {
            y[j] = batch.r[j] + batch.gamma[j] * q.col(j).maxCoeff();
        }
    } else {
        if (next_actions == nullptr) {
            throw UsageError("continuous targets need the next actions");
        }
        const Eigen::MatrixXd q = target.tower.forward(batch.s_next, batch.g, next_actions);
        y = batch.r + batch.gamma.cwiseProduct(q.row(0).transpose());
    }
    return y;
}

LossReport dqn_loss(const QNetwork& net, const BatchMatrices& batch, const Eigen::VectorXd& y,
                    std::vector<Eigen::VectorXd>* grads) {
    const auto b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) {
        throw UsageError("empty batch");
    }
    const double inv_b = 1.0 / static_cast<double>(b);
    const bool discrete = net.discrete();
    const TowerNet::Pass pass = net.tower.forward_train(batch.s, batch.g, discrete ? nullptr : &batch.a);
    Eigen::VectorXd delta(b);
    for (Eigen::Index j = 0; j < b; ++j) {
        Eigen::Index row = 0;
        if (discrete) {
            if (batch.actions[static_cast<std::size_t>(j)] >= net.action_count()) {
                throw ConfigError("action index out of range");
            }
            row = static_cast<Eigen::Index>(batch.actions[static_cast<std::size_t>(j)]);
        }
        delta[j] = pass.out(row, j) - y[j];
    }
    LossReport report;
    report.loss_q = delta.squaredNorm() * inv_b;
    report.loss = report.loss_q;
    report.loss_psi = std::nan("");
    report.td_error = delta.cwiseAbs().mean();
    check_finite(report.loss, "DQN loss");
    if (grads != nullptr) {
        ensure_grads(grads, net.nets());
        Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(pass.out.rows(), b);
        for (Eigen::Index j = 0; j < b; ++j) {
            const Eigen::Index row = discrete ? static_cast<Eigen::Index>(batch.actions[static_cast<std::size_t>(j)]) : 0;
            d_out(row, j) = 2.0 * inv_b * delta[j];
        }
        net.tower.backward(pass, d_out, grads->data());
    }
    return report;
}

Eigen::VectorXd ddpg_action(const ActorNetwork& actor, const Eigen::VectorXd& s, const Eigen::VectorXd& g,
                            double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) {
        throw ConfigError("exploration sigma must be non-negative");
    }
    Eigen::VectorXd a = actor.forward(Eigen::MatrixXd(s), Eigen::MatrixXd(g)).col(0);
    if (sigma > 0.0) {
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            a[i] += sigma * standard_normal(rng);
        }
    }
    return a.cwiseMax(-actor.bound()).cwiseMin(actor.bound());
}

namespace {

template <typename Critic, typename QFromPass>
double actor_loss_impl(const ActorNetwork& actor, const Critic& critic, const Eigen::MatrixXd& s,
                       const Eigen::MatrixXd& g, Eigen::VectorXd* actor_grad, QFromPass q_and_grad) {
    const auto b = s.cols();
    if (b == 0) {
        throw UsageError("empty batch");
    }
    nn::GradientTape actor_tape;
    const Eigen::MatrixXd a = actor.forward_train(s, g, actor_tape);
    const TowerNet::Pass pass = critic.tower.forward_train(s, g, &a);
    Eigen::MatrixXd d_out;
    const double loss = q_and_grad(pass, d_out);
    check_finite(loss, "actor loss");
    if (actor_grad != nullptr) {
        std::vector<Eigen::VectorXd> scratch(3);
        Eigen::MatrixXd d_action;
        critic.tower.backward(pass, d_out, scratch.data(), &d_action);
        if (actor_grad->size() == 0) {
            *actor_grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(actor.net.parameter_count()));
        }
        actor.backward(actor_tape, d_action, *actor_grad);
    }
    return loss;
}

} // namespace

double actor_loss(const ActorNetwork& actor, const UsfNetwork& critic, const Eigen::MatrixXd& s,
                  const Eigen::MatrixXd& g, Eigen::VectorXd* actor_grad) {
    if (critic.discrete()) {
        throw UsageError("actor loss needs a continuous-action critic");
    }
    const Eigen::MatrixXd w = critic.w(g);
    const double inv_b = 1.0 / static_cast<double>(s.cols());
    return actor_loss_impl(actor, critic, s, g, actor_grad, [&](const TowerNet::Pass& pass, Eigen::MatrixXd& d_out) {
        d_out = -inv_b * w;
        return -(pass.out.cwiseProduct(w)).sum() * inv_b;
    });
}

double actor_loss(const ActorNetwork& actor, const QNetwork& critic, const Eigen::MatrixXd& s,
                  const Eigen::MatrixXd& g, Eigen::VectorXd* actor_grad) {
    if (critic.discrete()) {
        throw UsageError("actor loss needs a continuous-action critic");
    }
    const double inv_b = 1.0 / static_cast<double>(s.cols());
    return actor_loss_impl(actor, critic, s, g, actor_grad, [&](const TowerNet::Pass& pass, Eigen::MatrixXd& d_out) {
        d_out = Eigen::MatrixXd::Constant(1, s.cols(), -inv_b);
        return -pass.out.sum() * inv_b;
    });
}

void sync_targets(const std::vector<nn::DenseNet*>& target, const std::vector<const nn::DenseNet*>& online, double tau) {
    if (target.size() != online.size()) {
        throw UsageError("target and online network lists differ in length");
    }
    for (std::size_t k = 0; k < target.size(); ++k) {
        if (tau >= 1.0) {
            if (target[k]->shapes() != online[k]->shapes()) {
                throw UsageError("target and online architectures differ");
            }
            target[k]->parameters() = online[k]->parameters();
        } else {
            nn::blend_parameters(*target[k], *online[k], tau);
        }
    }
}

bool TargetSchedule::after_update(const std::vector<nn::DenseNet*>& target,
                                  const std::vector<const nn::DenseNet*>& online) {
    ++updates;
    if (mode == Mode::polyak) {
        sync_targets(target, online, tau);
        return true;
    }
    if (every < 1) {
        throw ConfigError("target update period must be positive");
    }
    if (updates % every == 0) {
        sync_targets(target, online, 1.0);
        return true;
    }
    return false;
}

} // namespace usf::agents
