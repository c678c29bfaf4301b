#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace usf::agents {

/// Table of successor features for a fixed policy, trained by TD:
/// psi(s, a) += lr * (phi(s') + gamma * psi(s', pi(s')) - psi(s, a)).
/// Row s * action_count + a holds psi(s, a).
class TabularSrLearner {
public:
    TabularSrLearner(std::size_t state_count, std::size_t action_count, Eigen::MatrixXd phi,
                     std::vector<std::size_t> policy);

    /// Returns the largest absolute TD error component of the step.
    double update(std::size_t s, std::size_t a, std::size_t s_next, double gamma, double lr);

    const Eigen::MatrixXd& psi() const { return psi_; }
    Eigen::VectorXd psi(std::size_t s, std::size_t a) const { return psi_.row(row(s, a)).transpose(); }

private:
    Eigen::Index row(std::size_t s, std::size_t a) const {
        return static_cast<Eigen::Index>(s * action_count_ + a);
    }

    std::size_t state_count_;
    std::size_t action_count_;
    Eigen::MatrixXd phi_;
    std::vector<std::size_t> policy_;
    Eigen::MatrixXd psi_;
};

} // namespace usf::agents
