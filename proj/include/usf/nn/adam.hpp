#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "usf/nn/dense_net.hpp"

namespace usf::nn {

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    std::int64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(std::size_t parameter_count, double b1 = 0.9, double b2 = 0.999, double epsilon = 1e-8);
};

/// One bias-corrected Adam update of `params` in place. Rejects non-finite
/// gradients and any update that would leave a non-finite parameter; on
/// rejection neither the parameters nor the state change. lr == 0 leaves
/// the parameters untouched.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, AdamState& state, double lr);

/// Rescales `grads` (jointly) so their global L2 norm is at most `max_norm`.
/// max_norm <= 0 disables clipping. Returns the norm before clipping.
double clip_global_norm(std::vector<Eigen::VectorXd*> grads, double max_norm);

/// Adam states for a fixed list of networks updated together.
class AdamGroup {
public:
    AdamGroup() = default;
    explicit AdamGroup(const std::vector<const DenseNet*>& nets);

    void step(const std::vector<DenseNet*>& nets, std::vector<Eigen::VectorXd>& grads, double lr, double clip_norm = 0.0);

    std::vector<AdamState>& states() { return states_; }
    const std::vector<AdamState>& states() const { return states_; }

private:
    std::vector<AdamState> states_;
};

} // namespace usf::nn
