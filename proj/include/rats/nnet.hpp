#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "rats/rng.hpp"

namespace rats {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Activation { Relu, Identity, Softplus };

struct Layer {
    Mat weights;  // out x in
    Vec biases;   // out
    Activation activation = Activation::Identity;
};

// Minimal fully connected net. Layers chain (out_i == in_{i+1}); softplus is
// meant for standard-deviation heads where the output must stay positive.
struct DenseNet {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weights.rows()); }
};

// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
DenseNet make_net(int input_dim, const std::vector<int>& widths,
                  const std::vector<Activation>& activations, Rng& rng);

void validate_architecture(const DenseNet& net);
std::size_t parameter_count(const DenseNet& net);
bool all_finite(const DenseNet& net);

struct Gradient {
    std::vector<Mat> weights;
    std::vector<Vec> biases;
};

Gradient zero_gradient(const DenseNet& net);
// y += a * x, shapes must match.
void axpy(double a, const Gradient& x, Gradient& y);
void scale(double a, Gradient& g);
bool all_finite(const Gradient& g);

// Pure given parameters; safe for concurrent calls on shared nets.
Vec forward(const DenseNet& net, const Vec& input);

struct BackwardResult {
    Gradient grad;
    Vec input_grad;
};

// Exact gradient of dot(upstream, forward(net, input)) with respect to every
// parameter and the input.
BackwardResult backward(const DenseNet& net, const Vec& input, const Vec& upstream);

// Same, accumulating parameter gradients into `grad`; returns the input
// gradient. Used in hot loops to avoid reallocation.
Vec backward_accumulate(const DenseNet& net, const Vec& input, const Vec& upstream,
                        Gradient& grad);

struct AdamState {
    std::vector<Mat> m_weights, v_weights;
    std::vector<Vec> m_biases, v_biases;
    long step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam(const DenseNet& net, double learning_rate);

// Bias-corrected adaptive-moment update; increments the step counter by one.
void adam_step(DenseNet& net, const Gradient& grad, AdamState& state);

// Parameter snapshots: shape header followed by a flat, ordered float list.
void write_net(std::ostream& out, const DenseNet& net);
DenseNet read_net(std::istream& in);

}  // namespace rats
