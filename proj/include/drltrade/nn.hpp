#pragma once

// Dense multilayer perceptrons with analytic backpropagation, Adam, and
// soft (Polyak) target updates. Samples are stored column-wise: a batch of
// N inputs of width k is a k x N matrix.

#include "drltrade/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

namespace drltrade::nn {

enum class Activation { Identity, Relu, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Mlp {
    std::vector<Eigen::Index> layer_sizes;
    Activation hidden_activation = Activation::Relu;
    Activation output_activation = Activation::Identity;
    std::vector<Matrix<Scalar>> weights;  // weights[l]: layer_sizes[l+1] x layer_sizes[l]
    std::vector<Vector<Scalar>> biases;

    std::size_t num_layers() const { return weights.size(); }
    Eigen::Index input_size() const { return layer_sizes.front(); }
    Eigen::Index output_size() const { return layer_sizes.back(); }
    Activation activation(std::size_t layer) const {
        return layer + 1 == num_layers() ? output_activation : hidden_activation;
    }

    Eigen::Index num_parameters() const {
        Eigen::Index n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
        return n;
    }

    bool same_architecture(const Mlp& o) const {
        return layer_sizes == o.layer_sizes && hidden_activation == o.hidden_activation &&
               output_activation == o.output_activation;
    }

    bool all_finite() const {
        for (std::size_t l = 0; l < weights.size(); ++l)
            if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
        return true;
    }

    bool operator==(const Mlp& o) const {
        return same_architecture(o) && weights == o.weights && biases == o.biases;
    }
};

using Mlpd = Mlp<double>;

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
template <typename Scalar>
Mlp<Scalar> init(const std::vector<Eigen::Index>& layer_sizes, Activation hidden, Activation output,
                 std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw config_error("an MLP needs at least an input and an output layer");
    for (auto w : layer_sizes)
        if (w < 1) throw config_error("layer widths must be at least 1");

    Mlp<Scalar> net;
    net.layer_sizes = layer_sizes;
    net.hidden_activation = hidden;
    net.output_activation = output;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const Eigen::Index fan_in = layer_sizes[l];
        const Eigen::Index fan_out = layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix<Scalar> w(fan_out, fan_in);
        for (Eigen::Index j = 0; j < fan_in; ++j)
            for (Eigen::Index i = 0; i < fan_out; ++i) w(i, j) = static_cast<Scalar>(dist(rng));
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vector<Scalar>::Zero(fan_out));
    }
    return net;
}

namespace detail {

template <typename Scalar>
void apply_activation(Matrix<Scalar>& z, Activation a) {
    switch (a) {
        case Activation::Identity: break;
        case Activation::Relu: z = z.cwiseMax(Scalar(0)); break;
        case Activation::Tanh: z = z.array().tanh().matrix(); break;
    }
}

// Multiplies an upstream gradient by the activation derivative, expressed in
// terms of the activation output y.
template <typename Scalar>
void apply_activation_derivative(Matrix<Scalar>& grad, const Matrix<Scalar>& y, Activation a) {
    switch (a) {
        case Activation::Identity: break;
        case Activation::Relu: grad = (y.array() > Scalar(0)).select(grad, Scalar(0)); break;
        case Activation::Tanh: grad = grad.cwiseProduct((Scalar(1) - y.array().square()).matrix()); break;
    }
}

}  // namespace detail

/// Cached layer activations from a forward pass. activations[0] is the input,
/// activations[l + 1] the output of layer l.
template <typename Scalar>
struct Tape {
    std::vector<Matrix<Scalar>> activations;
};

template <typename Scalar>
struct ForwardResult {
    Matrix<Scalar> output;
    Tape<Scalar> tape;
};

template <typename Scalar>
ForwardResult<Scalar> forward(const Mlp<Scalar>& net, const std::type_identity_t<Matrix<Scalar>>& input) {
    if (input.rows() != net.input_size()) {
        throw config_error("forward: input has " + std::to_string(input.rows()) + " rows, network expects " +
                           std::to_string(net.input_size()));
    }
    ForwardResult<Scalar> r;
    r.tape.activations.reserve(net.num_layers() + 1);
    r.tape.activations.push_back(input);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        Matrix<Scalar> z = net.weights[l] * r.tape.activations.back();
        z.colwise() += net.biases[l];
        detail::apply_activation(z, net.activation(l));
        r.tape.activations.push_back(std::move(z));
    }
    r.output = r.tape.activations.back();
    return r;
}

// Forward pass without keeping a tape.
template <typename Scalar>
Matrix<Scalar> predict(const Mlp<Scalar>& net, const std::type_identity_t<Matrix<Scalar>>& input) {
    if (input.rows() != net.input_size()) throw config_error("predict: input dimension mismatch");
    Matrix<Scalar> x = input;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        Matrix<Scalar> z = net.weights[l] * x;
        z.colwise() += net.biases[l];
        detail::apply_activation(z, net.activation(l));
        x = std::move(z);
    }
    return x;
}

template <typename Scalar>
Vector<Scalar> predict(const Mlp<Scalar>& net, const Vector<Scalar>& input) {
    return predict<Scalar>(net, Matrix<Scalar>(input)).col(0);
}

/// Gradients shaped like an Mlp's parameters, plus the gradient with respect to
/// the input batch (one column per sample).
template <typename Scalar>
struct GradientSet {
    std::vector<Matrix<Scalar>> weights;
    std::vector<Vector<Scalar>> biases;
    Matrix<Scalar> input;

    static GradientSet zeros_like(const Mlp<Scalar>& net, Eigen::Index batch = 1) {
        GradientSet g;
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            g.weights.push_back(Matrix<Scalar>::Zero(net.weights[l].rows(), net.weights[l].cols()));
            g.biases.push_back(Vector<Scalar>::Zero(net.biases[l].size()));
        }
        g.input = Matrix<Scalar>::Zero(net.input_size(), batch);
        return g;
    }

    bool all_finite() const {
        for (std::size_t l = 0; l < weights.size(); ++l)
            if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
        return input.allFinite();
    }

    GradientSet& operator*=(Scalar s) {
        for (auto& w : weights) w *= s;
        for (auto& b : biases) b *= s;
        input *= s;
        return *this;
    }
};

/// Exact gradients of sum_over_columns(output_grad . output) with respect to
/// every parameter (summed over the batch) and to each input column.
template <typename Scalar>
GradientSet<Scalar> backward(const Mlp<Scalar>& net, const Tape<Scalar>& tape,
                             const std::type_identity_t<Matrix<Scalar>>& output_grad) {
    if (tape.activations.size() != net.num_layers() + 1 || tape.activations.back().rows() != net.output_size() ||
        output_grad.rows() != net.output_size() || output_grad.cols() != tape.activations.back().cols()) {
        throw config_error("backward: tape or output gradient does not match the network");
    }
    GradientSet<Scalar> g;
    g.weights.resize(net.num_layers());
    g.biases.resize(net.num_layers());
    Matrix<Scalar> delta = output_grad;
    for (std::size_t l = net.num_layers(); l-- > 0;) {
        detail::apply_activation_derivative(delta, tape.activations[l + 1], net.activation(l));
        g.weights[l].noalias() = delta * tape.activations[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        delta = net.weights[l].transpose() * delta;
    }
    g.input = std::move(delta);
    return g;
}

/// Adam optimizer state, one moment pair per parameter tensor.
template <typename Scalar>
struct OptimizerState {
    std::vector<Matrix<Scalar>> m_weights, v_weights;
    std::vector<Vector<Scalar>> m_biases, v_biases;
    std::int64_t step = 0;
    Scalar learning_rate = Scalar(1e-3);
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar epsilon = Scalar(1e-8);

    bool operator==(const OptimizerState&) const = default;
};

template <typename Scalar>
OptimizerState<Scalar> make_optimizer(const Mlp<Scalar>& net, Scalar learning_rate, Scalar beta1 = Scalar(0.9),
                                      Scalar beta2 = Scalar(0.999), Scalar epsilon = Scalar(1e-8)) {
    OptimizerState<Scalar> opt;
    opt.learning_rate = learning_rate;
    opt.beta1 = beta1;
    opt.beta2 = beta2;
    opt.epsilon = epsilon;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        opt.m_weights.push_back(Matrix<Scalar>::Zero(net.weights[l].rows(), net.weights[l].cols()));
        opt.v_weights.push_back(opt.m_weights.back());
        opt.m_biases.push_back(Vector<Scalar>::Zero(net.biases[l].size()));
        opt.v_biases.push_back(opt.m_biases.back());
    }
    return opt;
}

namespace detail {

template <typename Param, typename Moment>
void adam_update(Param& param, const Param& grad, Moment& m, Moment& v, typename Param::Scalar lr_t,
                 typename Param::Scalar beta1, typename Param::Scalar beta2, typename Param::Scalar eps_t) {
    m = beta1 * m + (1 - beta1) * grad;
    v = beta2 * v + (1 - beta2) * grad.cwiseAbs2();
    param.array() -= lr_t * m.array() / (v.array().sqrt() + eps_t);
}

}  // namespace detail

/// One descent step (parameters move against the gradient). Throws on
/// non-finite gradients without touching the network or the state.
template <typename Scalar>
void optimizer_step(Mlp<Scalar>& net, const GradientSet<Scalar>& grads, OptimizerState<Scalar>& opt) {
    if (grads.weights.size() != net.num_layers() || opt.m_weights.size() != net.num_layers()) {
        throw config_error("optimizer_step: gradient or optimizer shape mismatch");
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        if (grads.weights[l].rows() != net.weights[l].rows() || grads.weights[l].cols() != net.weights[l].cols() ||
            grads.biases[l].size() != net.biases[l].size()) {
            throw config_error("optimizer_step: gradient shape mismatch");
        }
        if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
            throw numeric_error("optimizer_step: non-finite gradient");
        }
    }
    ++opt.step;
    const auto t = static_cast<Scalar>(opt.step);
    const Scalar bc1 = Scalar(1) - std::pow(opt.beta1, t);
    const Scalar bc2 = Scalar(1) - std::pow(opt.beta2, t);
    // Bias correction folded into the step size and epsilon.
    const Scalar lr_t = opt.learning_rate * std::sqrt(bc2) / bc1;
    const Scalar eps_t = opt.epsilon * std::sqrt(bc2);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        detail::adam_update(net.weights[l], grads.weights[l], opt.m_weights[l], opt.v_weights[l], lr_t, opt.beta1,
                            opt.beta2, eps_t);
        detail::adam_update(net.biases[l], grads.biases[l], opt.m_biases[l], opt.v_biases[l], lr_t, opt.beta1,
                            opt.beta2, eps_t);
    }
}

/// target <- tau * source + (1 - tau) * target, evaluated in gap form
/// source + (1 - tau) * (target - source). tau = 0 and tau = 1 are exact.
template <typename Scalar>
void soft_update(Mlp<Scalar>& target, const Mlp<Scalar>& source, Scalar tau) {
    if (!target.same_architecture(source)) throw config_error("soft_update: architecture mismatch");
    if (!(tau >= Scalar(0) && tau <= Scalar(1))) throw config_error("soft_update: tau must lie in [0, 1]");
    if (tau == Scalar(0)) return;
    if (tau == Scalar(1)) {
        target.weights = source.weights;
        target.biases = source.biases;
        return;
    }
    const Scalar keep = Scalar(1) - tau;
    for (std::size_t l = 0; l < target.num_layers(); ++l) {
        target.weights[l] = source.weights[l] + keep * (target.weights[l] - source.weights[l]);
        target.biases[l] = source.biases[l] + keep * (target.biases[l] - source.biases[l]);
    }
}

// Calls fn(Scalar&) on every parameter, layer by layer, weights (column-major) then biases.
template <typename Scalar, typename Fn>
void for_each_parameter(Mlp<Scalar>& net, Fn&& fn) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) fn(net.weights[l].data()[i]);
        for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) fn(net.biases[l].data()[i]);
    }
}

template <typename Scalar, typename Fn>
void for_each_gradient(const GradientSet<Scalar>& g, Fn&& fn) {
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < g.weights[l].size(); ++i) fn(g.weights[l].data()[i]);
        for (Eigen::Index i = 0; i < g.biases[l].size(); ++i) fn(g.biases[l].data()[i]);
    }
}

/// Central finite-difference gradient of a scalar function of the network
/// parameters. objective(net) is evaluated 2 * num_parameters() times.
template <typename Scalar, typename Objective>
GradientSet<Scalar> numeric_parameter_gradient(Mlp<Scalar> net, Objective&& objective, Scalar h) {
    GradientSet<Scalar> g = GradientSet<Scalar>::zeros_like(net, 0);
    std::vector<Scalar*> params;
    for_each_parameter(net, [&](Scalar& p) { params.push_back(&p); });
    std::vector<Scalar> values;
    values.reserve(params.size());
    for (Scalar* p : params) {
        const Scalar saved = *p;
        *p = saved + h;
        const Scalar up = objective(static_cast<const Mlp<Scalar>&>(net));
        *p = saved - h;
        const Scalar down = objective(static_cast<const Mlp<Scalar>&>(net));
        *p = saved;
        values.push_back((up - down) / (2 * h));
    }
    std::size_t k = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < g.weights[l].size(); ++i) g.weights[l].data()[i] = values[k++];
        for (Eigen::Index i = 0; i < g.biases[l].size(); ++i) g.biases[l].data()[i] = values[k++];
    }
    return g;
}

template <typename Scalar>
Scalar relative_error(Scalar a, Scalar b) {
    const Scalar denom = std::max({std::abs(a), std::abs(b), Scalar(1e-8)});
    return std::abs(a - b) / denom;
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = true;
};

/// Compares analytic gradients of output_grad . net(input) against central
/// finite differences on every parameter and every input entry.
template <typename Scalar>
GradCheckReport compare_gradients(const Mlp<Scalar>& net, const Vector<Scalar>& input,
                                  const Vector<Scalar>& output_grad, const GradientSet<Scalar>& analytic, Scalar h,
                                  Scalar tol) {
    if (!(h > Scalar(0))) throw config_error("grad_check: step must be positive");
    const auto objective_at = [&](const Mlp<Scalar>& n, const Vector<Scalar>& x) {
        return output_grad.dot(predict(n, x));
    };
    const GradientSet<Scalar> numeric =
        numeric_parameter_gradient(net, [&](const Mlp<Scalar>& n) { return objective_at(n, input); }, h);

    GradCheckReport report;
    std::vector<Scalar> a_flat;
    std::vector<Scalar> n_flat;
    for_each_gradient(analytic, [&](Scalar v) { a_flat.push_back(v); });
    for_each_gradient(numeric, [&](Scalar v) { n_flat.push_back(v); });
    if (a_flat.size() != n_flat.size() || analytic.input.rows() != input.size()) {
        throw config_error("grad_check: analytic gradient shape mismatch");
    }
    for (std::size_t i = 0; i < a_flat.size(); ++i) {
        report.max_rel_err = std::max(report.max_rel_err, static_cast<double>(relative_error(a_flat[i], n_flat[i])));
    }
    Vector<Scalar> x = input;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Scalar saved = x[i];
        x[i] = saved + h;
        const Scalar up = objective_at(net, x);
        x[i] = saved - h;
        const Scalar down = objective_at(net, x);
        x[i] = saved;
        const Scalar fd = (up - down) / (2 * h);
        report.max_rel_err = std::max(report.max_rel_err, static_cast<double>(relative_error(analytic.input(i, 0), fd)));
    }
    report.pass = report.max_rel_err < static_cast<double>(tol);
    return report;
}

template <typename Scalar>
GradCheckReport grad_check(const Mlp<Scalar>& net, const Vector<Scalar>& input, const Vector<Scalar>& output_grad,
                           Scalar h, Scalar tol) {
    const auto fwd = forward(net, Matrix<Scalar>(input));
    const auto analytic = backward(net, fwd.tape, Matrix<Scalar>(output_grad));
    return compare_gradients(net, input, output_grad, analytic, h, tol);
}

}  // namespace drltrade::nn
