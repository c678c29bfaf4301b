#include "usf/nn/adam.hpp"

#include <cmath>
#include <string>

#include "usf/core/error.hpp"

namespace usf::nn {

AdamState::AdamState(std::size_t parameter_count, double b1, double b2, double epsilon)
    : first_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count))),
      second_moment(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count))),
      beta1(b1),
      beta2(b2),
      eps(epsilon) {}

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, AdamState& state, double lr) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw ConfigError("learning rate must be finite and non-negative");
    }
    if (grads.size() != params.size()) {
        throw ConfigError("gradient has " + std::to_string(grads.size()) + " entries, parameters " +
                          std::to_string(params.size()));
    }
    if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
        throw ConfigError("optimizer state does not match parameter count");
    }
    if (!grads.allFinite()) {
        throw NumericError("non-finite gradient rejected by Adam");
    }

    const std::int64_t t = state.step_count + 1;
    Eigen::VectorXd m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
    Eigen::VectorXd v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));

    if (lr > 0.0) {
        Eigen::VectorXd delta =
            (lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps)).matrix();
        Eigen::VectorXd updated = params - delta;
        if (!updated.allFinite()) {
            throw NumericError("Adam update produced non-finite parameters");
        }
        params = updated;
    }
    state.first_moment = std::move(m);
    state.second_moment = std::move(v);
    state.step_count = t;
}

double clip_global_norm(std::vector<Eigen::VectorXd*> grads, double max_norm) {
    double sq = 0.0;
    for (const auto* g : grads) {
        sq += g->squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto* g : grads) {
            *g *= scale;
        }
    }
    return norm;
}

AdamGroup::AdamGroup(const std::vector<const DenseNet*>& nets) {
    states_.reserve(nets.size());
    for (const auto* net : nets) {
        states_.emplace_back(net->parameter_count());
    }
}

void AdamGroup::step(const std::vector<DenseNet*>& nets, std::vector<Eigen::VectorXd>& grads, double lr,
                     double clip_norm) {
    if (nets.size() != states_.size() || grads.size() != nets.size()) {
        throw ConfigError("optimizer group size mismatch");
    }
    if (clip_norm > 0.0) {
        std::vector<Eigen::VectorXd*> ptrs;
        for (auto& g : grads) {
            ptrs.push_back(&g);
        }
        clip_global_norm(ptrs, clip_norm);
    }
    // Validate everything first so a rejected update leaves all nets untouched.
    for (std::size_t i = 0; i < nets.size(); ++i) {
        if (!grads[i].allFinite()) {
            throw NumericError("non-finite gradient rejected by Adam");
        }
    }
    for (std::size_t i = 0; i < nets.size(); ++i) {
        adam_step(nets[i]->parameters(), grads[i], states_[i], lr);
    }
}

} // namespace usf::nn
