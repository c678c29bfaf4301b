#include "usf/agents/tabular_sr.hpp"

#include "usf/core/error.hpp"

namespace usf::agents {

TabularSrLearner::TabularSrLearner(std::size_t state_count, std::size_t action_count, Eigen::MatrixXd phi,
                                   std::vector<std::size_t> policy)
    : state_count_(state_count), action_count_(action_count), phi_(std::move(phi)), policy_(std::move(policy)) {
    if (state_count_ == 0 || action_count_ == 0) {
        throw ConfigError("tabular SR needs states and actions");
    }
    if (phi_.rows() != static_cast<Eigen::Index>(state_count_)) {
        throw ConfigError("feature table needs one row per state");
    }
    if (policy_.size() != state_count_) {
        throw ConfigError("policy needs one action per state");
    }
    for (std::size_t a : policy_) {
        if (a >= action_count_) {
            throw ConfigError("policy action out of range");
        }
    }
    psi_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(state_count_ * action_count_), phi_.cols());
}

double TabularSrLearner::update(std::size_t s, std::size_t a, std::size_t s_next, double gamma, double lr) {
    if (s >= state_count_ || s_next >= state_count_ || a >= action_count_) {
        throw ConfigError("transition index out of range");
    }
    const Eigen::RowVectorXd target =
        phi_.row(static_cast<Eigen::Index>(s_next)) + gamma * psi_.row(row(s_next, policy_[s_next]));
    const Eigen::RowVectorXd td = target - psi_.row(row(s, a));
    psi_.row(row(s, a)) += lr * td;
    return td.cwiseAbs().maxCoeff();
}

} // namespace usf::agents
