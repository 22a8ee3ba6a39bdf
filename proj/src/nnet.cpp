#include "rats/nnet.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rats {

namespace {

double activate(Activation act, double z) {
    switch (act) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Identity: return z;
        case Activation::Softplus:
            // max(z,0) + log1p(exp(-|z|)) avoids overflow at both tails
            return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    }
    return z;
}

double activate_grad(Activation act, double z) {
    switch (act) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Identity: return 1.0;
        case Activation::Softplus: return 1.0 / (1.0 + std::exp(-z));
    }
    return 1.0;
}

Vec apply_activation(Activation act, const Vec& z) {
    if (act == Activation::Identity) return z;
    Vec out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = activate(act, z[i]);
    return out;
}

void check_input(const DenseNet& net, const Vec& input) {
    if (net.layers.empty()) throw std::invalid_argument("nnet: empty network");
    if (input.size() != net.layers.front().weights.cols())
        throw std::invalid_argument("nnet: input length " + std::to_string(input.size()) +
                                    " does not match first layer input dimension " +
                                    std::to_string(net.layers.front().weights.cols()));
}

void write_double(std::ostream& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

}  // namespace

DenseNet make_net(int input_dim, const std::vector<int>& widths,
                  const std::vector<Activation>& activations, Rng& rng) {
    if (widths.empty() || widths.size() != activations.size())
        throw std::invalid_argument("nnet: widths and activations must be non-empty and equal length");
    DenseNet net;
    int in = input_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        const int out = widths[i];
        if (in <= 0 || out <= 0) throw std::invalid_argument("nnet: non-positive layer dimension");
        Layer layer;
        layer.weights = Mat(out, in);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
        layer.biases = Vec::Zero(out);
        layer.activation = activations[i];
        net.layers.push_back(std::move(layer));
        in = out;
    }
    return net;
}

void validate_architecture(const DenseNet& net) {
    if (net.layers.empty()) throw std::invalid_argument("nnet: empty network");
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (l.biases.size() != l.weights.rows())
            throw std::invalid_argument("nnet: bias/weight row mismatch at layer " + std::to_string(i));
        if (i + 1 < net.layers.size() &&
            net.layers[i + 1].weights.cols() != l.weights.rows())
            throw std::invalid_argument("nnet: layer dimensions do not chain at layer " + std::to_string(i));
    }
    if (!all_finite(net)) throw std::invalid_argument("nnet: non-finite parameters");
}

std::size_t parameter_count(const DenseNet& net) {
    std::size_t n = 0;
    for (const Layer& l : net.layers) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
    return n;
}

bool all_finite(const DenseNet& net) {
    for (const Layer& l : net.layers)
        if (!l.weights.allFinite() || !l.biases.allFinite()) return false;
    return true;
}

Gradient zero_gradient(const DenseNet& net) {
    Gradient g;
    g.weights.reserve(net.layers.size());
    g.biases.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        g.weights.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
        g.biases.push_back(Vec::Zero(l.biases.size()));
    }
    return g;
}

void axpy(double a, const Gradient& x, Gradient& y) {
    if (x.weights.size() != y.weights.size())
        throw std::invalid_argument("nnet: gradient shape mismatch");
    for (std::size_t i = 0; i < x.weights.size(); ++i) {
        y.weights[i] += a * x.weights[i];
        y.biases[i] += a * x.biases[i];
    }
}

void scale(double a, Gradient& g) {
    for (std::size_t i = 0; i < g.weights.size(); ++i) {
        g.weights[i] *= a;
        g.biases[i] *= a;
    }
}

bool all_finite(const Gradient& g) {
    for (std::size_t i = 0; i < g.weights.size(); ++i)
        if (!g.weights[i].allFinite() || !g.biases[i].allFinite()) return false;
    return true;
}

Vec forward(const DenseNet& net, const Vec& input) {
    check_input(net, input);
    Vec a = input;
    for (const Layer& l : net.layers)
        a = apply_activation(l.activation, (l.weights * a + l.biases).eval());
    return a;
}

Vec backward_accumulate(const DenseNet& net, const Vec& input, const Vec& upstream,
                        Gradient& grad) {
    check_input(net, input);
    if (upstream.size() != net.layers.back().weights.rows())
        throw std::invalid_argument("nnet: upstream length does not match output dimension");
    const std::size_t n = net.layers.size();

    std::vector<Vec> pre(n);          // pre-activations
    std::vector<Vec> act(n + 1);      // act[0] = input, act[i] = layer i-1 output
    act[0] = input;
    for (std::size_t i = 0; i < n; ++i) {
        pre[i] = net.layers[i].weights * act[i] + net.layers[i].biases;
        act[i + 1] = apply_activation(net.layers[i].activation, pre[i]);
    }

    Vec delta = upstream;
    for (std::size_t i = n; i-- > 0;) {
        const Layer& l = net.layers[i];
        Vec dz(delta.size());
        for (Eigen::Index j = 0; j < delta.size(); ++j)
            dz[j] = delta[j] * activate_grad(l.activation, pre[i][j]);
        grad.weights[i].noalias() += dz * act[i].transpose();
        grad.biases[i] += dz;
        delta = l.weights.transpose() * dz;
    }
    return delta;
}

BackwardResult backward(const DenseNet& net, const Vec& input, const Vec& upstream) {
    BackwardResult result{zero_gradient(net), Vec()};
    result.input_grad = backward_accumulate(net, input, upstream, result.grad);
    return result;
}

AdamState make_adam(const DenseNet& net, double learning_rate) {
    if (learning_rate <= 0.0) throw std::invalid_argument("nnet: learning rate must be positive");
    AdamState s;
    s.learning_rate = learning_rate;
    for (const Layer& l : net.layers) {
        s.m_weights.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
        s.v_weights.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
        s.m_biases.push_back(Vec::Zero(l.biases.size()));
        s.v_biases.push_back(Vec::Zero(l.biases.size()));
    }
    return s;
}

void adam_step(DenseNet& net, const Gradient& grad, AdamState& state) {
    if (grad.weights.size() != net.layers.size() || state.m_weights.size() != net.layers.size())
        throw std::invalid_argument("nnet: adam shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (grad.weights[i].rows() != net.layers[i].weights.rows() ||
            grad.weights[i].cols() != net.layers[i].weights.cols())
            throw std::invalid_argument("nnet: adam gradient shape mismatch at layer " + std::to_string(i));
        auto update = [&](auto& m, auto& v, const auto& g, auto& p) {
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
            const auto m_hat = m / bc1;
            const auto v_hat = v / bc2;
            p -= state.learning_rate *
                 (m_hat.array() / (v_hat.array().sqrt() + state.epsilon)).matrix();
        };
        update(state.m_weights[i], state.v_weights[i], grad.weights[i], net.layers[i].weights);
        update(state.m_biases[i], state.v_biases[i], grad.biases[i], net.layers[i].biases);
    }
}

void write_net(std::ostream& out, const DenseNet& net) {
    out << "net layers " << net.layers.size() << "\n";
    for (const Layer& l : net.layers) {
        const char* act = l.activation == Activation::Relu      ? "relu"
                          : l.activation == Activation::Softplus ? "softplus"
                                                                  : "identity";
        out << "layer " << l.weights.rows() << " " << l.weights.cols() << " " << act << "\n";
    }
    for (const Layer& l : net.layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
                write_double(out, l.weights(r, c));
                out << "\n";
            }
        for (Eigen::Index r = 0; r < l.biases.size(); ++r) {
            write_double(out, l.biases[r]);
            out << "\n";
        }
    }
}

DenseNet read_net(std::istream& in) {
    std::string word;
    std::size_t n_layers = 0;
    in >> word;
    if (word != "net") throw std::runtime_error("nnet: bad checkpoint header");
    in >> word >> n_layers;
    DenseNet net;
    for (std::size_t i = 0; i < n_layers; ++i) {
        std::string act;
        Eigen::Index rows = 0, cols = 0;
        in >> word >> rows >> cols >> act;
        if (word != "layer" || rows <= 0 || cols <= 0)
            throw std::runtime_error("nnet: bad layer header in checkpoint");
        Layer l;
        l.weights = Mat(rows, cols);
        l.biases = Vec(rows);
        l.activation = act == "relu"       ? Activation::Relu
                       : act == "softplus" ? Activation::Softplus
                                           : Activation::Identity;
        net.layers.push_back(std::move(l));
    }
    for (Layer& l : net.layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) in >> l.weights(r, c);
        for (Eigen::Index r = 0; r < l.biases.size(); ++r) in >> l.biases[r];
    }
    if (!in) throw std::runtime_error("nnet: truncated checkpoint");
    validate_architecture(net);
    return net;
}

}  // namespace rats
