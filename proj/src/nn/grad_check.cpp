#include "usf/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "usf/core/error.hpp"

namespace usf::nn {

namespace {
constexpr double kDenominatorFloor = 1e-6;
constexpr double kRetryAbove = 1e-5;

std::vector<Eigen::VectorXd> zero_grads(const std::vector<DenseNet*>& nets) {
    std::vector<Eigen::VectorXd> grads;
    grads.reserve(nets.size());
    for (const auto* net : nets) {
        grads.push_back(Eigen::VectorXd::Zero(net->parameters().size()));
    }
    return grads;
}
} // namespace

GradCheckReport grad_check_report(const std::vector<DenseNet*>& nets, const MultiLossFn& loss, double h) {
    if (!(h > 0.0 && h <= 1e-3)) {
        throw ConfigError("finite-difference step must lie in (0, 1e-3]");
    }
    if (nets.empty()) {
        throw ConfigError("grad_check needs at least one network");
    }
    for (const auto* net : nets) {
        if (net == nullptr || net->layer_count() == 0) {
            throw ConfigError("grad_check rejects networks without layers");
        }
    }

    auto analytic = zero_grads(nets);
    loss(&analytic);

    GradCheckReport report;
    for (std::size_t n = 0; n < nets.size(); ++n) {
        Eigen::VectorXd& params = nets[n]->parameters();
        for (Eigen::Index i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            const double a = analytic[n][i];
            auto central = [&](double step) {
                params[i] = saved + step;
                const double up = loss(nullptr);
                params[i] = saved - step;
                const double down = loss(nullptr);
                params[i] = saved;
                return (up - down) / (2.0 * step);
            };
            auto relative = [&](double numeric) {
                return std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kDenominatorFloor});
            };
            double numeric = central(h);
            double rel = relative(numeric);
            // A probe straddling a ReLU kink spoils the difference; smaller
            // steps rarely straddle the same kink.
            for (double step = h / 10.0; rel > kRetryAbove && step >= h / 100.0; step /= 10.0) {
                const double retry = central(step);
                if (relative(retry) < rel) {
                    numeric = retry;
                    rel = relative(retry);
                }
            }
            ++report.checked;
            if (rel > report.max_relative_error || !std::isfinite(rel)) {
                report.max_relative_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
                report.worst_net = n;
                report.worst_index = static_cast<std::size_t>(i);
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

double grad_check(const std::vector<DenseNet*>& nets, const MultiLossFn& loss, double h) {
    return grad_check_report(nets, loss, h).max_relative_error;
}

double grad_check(DenseNet& net, const LossFn& loss, double h) {
    DenseNet* ptr = &net;
    return grad_check({ptr}, [&](std::vector<Eigen::VectorXd>* grads) {
        return loss(net, grads != nullptr ? &(*grads)[0] : nullptr);
    }, h);
}

} // namespace usf::nn
