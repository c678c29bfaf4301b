#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace usf::nn {

enum class Activation { identity, relu, tanh };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);

struct LayerShape {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation activation = Activation::identity;

    bool operator==(const LayerShape&) const = default;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightMap = Eigen::Map<RowMajorMatrix>;
using ConstWeightMap = Eigen::Map<const RowMajorMatrix>;
using BiasMap = Eigen::Map<Eigen::VectorXd>;
using ConstBiasMap = Eigen::Map<const Eigen::VectorXd>;

/// Activations recorded by a training-mode forward pass. Column j of every
/// matrix belongs to sample j of the batch.
class GradientTape {
public:
    bool empty() const { return activations_.empty(); }
    std::size_t batch_size() const { return empty() ? 0 : static_cast<std::size_t>(activations_.front().cols()); }
    void clear() { activations_.clear(); }

private:
    friend class DenseNet;
    // activations_[0] is the network input, activations_[k + 1] the output of layer k.
    std::vector<Eigen::MatrixXd> activations_;
};

/// Fully connected feed-forward network. All parameters live in one flat
/// vector (per layer: row-major weight, then bias) so optimizers, target
/// syncing and checkpoints operate on a single contiguous buffer.
class DenseNet {
public:
    DenseNet() = default;

    /// Builds a network with uniform(+-sqrt(6 / fan_in)) weights and zero biases.
    DenseNet(std::vector<LayerShape> shapes, std::uint64_t seed);

    /// Builds a network from explicit shapes and parameter values.
    DenseNet(std::vector<LayerShape> shapes, Eigen::VectorXd parameters, std::uint64_t seed = 0);

    /// Relu hidden layers of the given widths followed by an output layer.
    static DenseNet mlp(std::size_t in, std::initializer_list<std::size_t> hidden, std::size_t out,
                        Activation output_activation, std::uint64_t seed);
    static DenseNet mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                        Activation output_activation, std::uint64_t seed);

    std::size_t input_size() const;
    std::size_t output_size() const;
    std::size_t layer_count() const { return shapes_.size(); }
    std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }
    std::uint64_t seed() const { return seed_; }
    const std::vector<LayerShape>& shapes() const { return shapes_; }

    Eigen::VectorXd& parameters() { return params_; }
    const Eigen::VectorXd& parameters() const { return params_; }

    WeightMap weight(std::size_t layer);
    ConstWeightMap weight(std::size_t layer) const;
    BiasMap bias(std::size_t layer);
    ConstBiasMap bias(std::size_t layer) const;

    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
    /// Training-mode forward: also records what backward needs into `tape`.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs, GradientTape& tape) const;

    /// Reverse pass for the batch recorded in `tape`. Adds dLoss/dParameters
    /// into `param_grad` (resized and zeroed when empty) and returns
    /// dLoss/dInput with the same layout as the recorded inputs.
    Eigen::MatrixXd backward(const GradientTape& tape, const Eigen::MatrixXd& output_grad,
                             Eigen::VectorXd& param_grad) const;

    bool parameters_finite() const;

private:
    void validate() const;
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_[layer] + shapes_[layer].in * shapes_[layer].out;
    }

    std::vector<LayerShape> shapes_;
    std::vector<std::size_t> offsets_;
    Eigen::VectorXd params_;
    std::uint64_t seed_ = 0;
};

/// Polyak blend: target <- (1 - tau) * target + tau * online.
void blend_parameters(DenseNet& target, const DenseNet& online, double tau);

} // namespace usf::nn
