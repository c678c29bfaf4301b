#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "usf/nn/dense_net.hpp"

namespace usf::nn {

/// Evaluates a scalar loss. When `grads` is non-null it holds one zeroed
/// vector per checked network and the callee adds its analytic gradient.
using MultiLossFn = std::function<double(std::vector<Eigen::VectorXd>* grads)>;
using LossFn = std::function<double(const DenseNet& net, Eigen::VectorXd* grad)>;

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_net = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t checked = 0;
};

/// Compares analytic gradients with central differences over every parameter
/// of every listed network. Relative error is |a - n| / max(|a|, |n|, 1e-6).
/// Coordinates that disagree are probed again at h/10 and h/100 and keep
/// the best of the three differences.
/// Parameters are restored before returning.
GradCheckReport grad_check_report(const std::vector<DenseNet*>& nets, const MultiLossFn& loss, double h);

double grad_check(const std::vector<DenseNet*>& nets, const MultiLossFn& loss, double h);
double grad_check(DenseNet& net, const LossFn& loss, double h);

} // namespace usf::nn
