#include "usf/nn/dense_net.hpp"

#include <cmath>
#include <random>
#include <utility>

#include "usf/core/error.hpp"

namespace usf::nn {

std::string to_string(Activation activation) {
    switch (activation) {
    case Activation::identity:
        return "identity";
    case Activation::relu:
        return "relu";
    case Activation::tanh:
        return "tanh";
    }
    return "identity";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") {
        return Activation::identity;
    }
    if (name == "relu") {
        return Activation::relu;
    }
    if (name == "tanh") {
        return Activation::tanh;
    }
    throw ConfigError("unknown activation '" + name + "'");
}

namespace {

std::vector<std::size_t> compute_offsets(const std::vector<LayerShape>& shapes, std::size_t& total) {
    std::vector<std::size_t> offsets;
    offsets.reserve(shapes.size());
    total = 0;
    for (const auto& shape : shapes) {
        offsets.push_back(total);
        total += shape.in * shape.out + shape.out;
    }
    return offsets;
}

void apply_activation(Eigen::MatrixXd& z, Activation activation) {
    switch (activation) {
    case Activation::identity:
        break;
    case Activation::relu:
        z = z.cwiseMax(0.0);
        break;
    case Activation::tanh:
        z = z.array().tanh().matrix();
        break;
    }
}

} // namespace

DenseNet::DenseNet(std::vector<LayerShape> shapes, std::uint64_t seed)
    : shapes_(std::move(shapes)), seed_(seed) {
    validate();
    std::size_t total = 0;
    offsets_ = compute_offsets(shapes_, total);
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));

    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < shapes_.size(); ++k) {
        const double limit = std::sqrt(6.0 / static_cast<double>(shapes_[k].in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        auto w = weight(k);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = dist(rng);
            }
        }
    }
}

DenseNet::DenseNet(std::vector<LayerShape> shapes, Eigen::VectorXd parameters, std::uint64_t seed)
    : shapes_(std::move(shapes)), params_(std::move(parameters)), seed_(seed) {
    validate();
    std::size_t total = 0;
    offsets_ = compute_offsets(shapes_, total);
    if (static_cast<std::size_t>(params_.size()) != total) {
        throw ConfigError("parameter vector has " + std::to_string(params_.size()) + " entries, shapes need " +
                          std::to_string(total));
    }
    if (!parameters_finite()) {
        throw NumericError("non-finite parameter values");
    }
}

DenseNet DenseNet::mlp(std::size_t in, std::initializer_list<std::size_t> hidden, std::size_t out,
                       Activation output_activation, std::uint64_t seed) {
    return mlp(in, std::vector<std::size_t>(hidden), out, output_activation, seed);
}

DenseNet DenseNet::mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                       Activation output_activation, std::uint64_t seed) {
    std::vector<LayerShape> shapes;
    std::size_t prev = in;
    for (std::size_t width : hidden) {
        shapes.push_back({prev, width, Activation::relu});
        prev = width;
    }
    shapes.push_back({prev, out, output_activation});
    return DenseNet(std::move(shapes), seed);
}

void DenseNet::validate() const {
    if (shapes_.empty()) {
        throw ConfigError("a network needs at least one layer");
    }
    for (std::size_t k = 0; k < shapes_.size(); ++k) {
        if (shapes_[k].in == 0 || shapes_[k].out == 0) {
            throw ConfigError("layer " + std::to_string(k) + " has a zero dimension");
        }
        if (k > 0 && shapes_[k - 1].out != shapes_[k].in) {
            throw ConfigError("layer " + std::to_string(k) + " expects " + std::to_string(shapes_[k].in) +
                              " inputs but layer " + std::to_string(k - 1) + " produces " +
                              std::to_string(shapes_[k - 1].out));
        }
    }
}

std::size_t DenseNet::input_size() const {
    return shapes_.empty() ? 0 : shapes_.front().in;
}

std::size_t DenseNet::output_size() const {
    return shapes_.empty() ? 0 : shapes_.back().out;
}

WeightMap DenseNet::weight(std::size_t layer) {
    const auto& s = shapes_.at(layer);
    return WeightMap(params_.data() + weight_offset(layer), static_cast<Eigen::Index>(s.out),
                     static_cast<Eigen::Index>(s.in));
}

ConstWeightMap DenseNet::weight(std::size_t layer) const {
    const auto& s = shapes_.at(layer);
    return ConstWeightMap(params_.data() + weight_offset(layer), static_cast<Eigen::Index>(s.out),
                          static_cast<Eigen::Index>(s.in));
}

BiasMap DenseNet::bias(std::size_t layer) {
    return BiasMap(params_.data() + bias_offset(layer), static_cast<Eigen::Index>(shapes_.at(layer).out));
}

ConstBiasMap DenseNet::bias(std::size_t layer) const {
    return ConstBiasMap(params_.data() + bias_offset(layer), static_cast<Eigen::Index>(shapes_.at(layer).out));
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& input) const {
    Eigen::MatrixXd out = forward_batch(Eigen::MatrixXd(input));
    return out.col(0);
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& inputs) const {
    if (shapes_.empty()) {
        throw UsageError("forward on an empty network");
    }
    if (static_cast<std::size_t>(inputs.rows()) != input_size()) {
        throw ConfigError("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                          std::to_string(input_size()));
    }
    Eigen::MatrixXd a = inputs;
    for (std::size_t k = 0; k < shapes_.size(); ++k) {
        Eigen::MatrixXd z = weight(k) * a;
        z.colwise() += bias(k);
        apply_activation(z, shapes_[k].activation);
        a = std::move(z);
    }
    return a;
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& inputs, GradientTape& tape) const {
    if (shapes_.empty()) {
        throw UsageError("forward on an empty network");
    }
    if (static_cast<std::size_t>(inputs.rows()) != input_size()) {
        throw ConfigError("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                          std::to_string(input_size()));
    }
    tape.activations_.clear();
    tape.activations_.reserve(shapes_.size() + 1);
    tape.activations_.push_back(inputs);
    for (std::size_t k = 0; k < shapes_.size(); ++k) {
        Eigen::MatrixXd z = weight(k) * tape.activations_.back();
        z.colwise() += bias(k);
        apply_activation(z, shapes_[k].activation);
        tape.activations_.push_back(std::move(z));
    }
    return tape.activations_.back();
}

Eigen::MatrixXd DenseNet::backward(const GradientTape& tape, const Eigen::MatrixXd& output_grad,
                                   Eigen::VectorXd& param_grad) const {
    if (tape.empty()) {
        throw UsageError("backward called without a recorded forward pass");
    }
    if (tape.activations_.size() != shapes_.size() + 1) {
        throw UsageError("tape was recorded by a network with a different layer count");
    }
    const auto& out = tape.activations_.back();
    if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols()) {
        throw ConfigError("output gradient shape does not match the recorded output");
    }
    if (param_grad.size() == 0) {
        param_grad = Eigen::VectorXd::Zero(params_.size());
    } else if (param_grad.size() != params_.size()) {
        throw ConfigError("gradient buffer size does not match parameter count");
    }

    Eigen::MatrixXd g = output_grad;
    for (std::size_t k = shapes_.size(); k-- > 0;) {
        const Eigen::MatrixXd& a_out = tape.activations_[k + 1];
        const Eigen::MatrixXd& a_in = tape.activations_[k];
        switch (shapes_[k].activation) {
        case Activation::identity:
            break;
        case Activation::relu:
            // zero pre-activation gives zero output and zero gradient
            g = (a_out.array() > 0.0).select(g, 0.0);
            break;
        case Activation::tanh:
            g = (g.array() * (1.0 - a_out.array().square())).matrix();
            break;
        }
        const auto& s = shapes_[k];
        WeightMap dw(param_grad.data() + weight_offset(k), static_cast<Eigen::Index>(s.out),
                     static_cast<Eigen::Index>(s.in));
        BiasMap db(param_grad.data() + bias_offset(k), static_cast<Eigen::Index>(s.out));
        dw.noalias() += g * a_in.transpose();
        db += g.rowwise().sum();
        g = weight(k).transpose() * g;
    }
    return g;
}

bool DenseNet::parameters_finite() const {
    return params_.allFinite();
}

void blend_parameters(DenseNet& target, const DenseNet& online, double tau) {
    if (target.shapes() != online.shapes()) {
        throw ConfigError("cannot blend networks with different shapes");
    }
    target.parameters() = (1.0 - tau) * target.parameters() + tau * online.parameters();
}

} // namespace usf::nn
