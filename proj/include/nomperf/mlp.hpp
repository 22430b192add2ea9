#pragma once

// Single-hidden-layer perceptron with a linear output layer:
//
//     y = W2^T act(W1^T x + b1) + b2
//
// trained against the regularized sum-of-squares error
//
//     E = 1/2 sum_n |y(x_n) - t_n|^2 + alpha/2 sum(W1^2) + alpha/2 sum(W2^2)
//
// Biases are not penalized. Parameters are exchanged with optimizers and the
// model file as one flat vector in this order:
//
//     W1 (n_in x n_hidden, row-major), b1, W2 (n_hidden x n_out, row-major), b2

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "nomperf/error.hpp"

namespace nomperf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { Logistic, Tanh };

inline std::string_view to_string(Activation a) { return a == Activation::Logistic ? "logistic" : "tanh"; }

inline std::optional<Activation> parse_activation(std::string_view s) {
    if (s == "logistic") return Activation::Logistic;
    if (s == "tanh") return Activation::Tanh;
    return std::nullopt;
}

struct MlpModel {
    Matrix w1;  // n_in x n_hidden
    Vector b1;  // n_hidden
    Matrix w2;  // n_hidden x n_out
    Vector b2;  // n_out
    Activation activation = Activation::Logistic;
    double alpha = 0.0;

    [[nodiscard]] Eigen::Index n_in() const noexcept { return w1.rows(); }
    [[nodiscard]] Eigen::Index n_hidden() const noexcept { return w1.cols(); }
    [[nodiscard]] Eigen::Index n_out() const noexcept { return w2.cols(); }
    [[nodiscard]] Eigen::Index param_count() const noexcept {
        return n_in() * n_hidden() + n_hidden() + n_hidden() * n_out() + n_out();
    }

    static MlpModel zeros(Eigen::Index n_in, Eigen::Index n_hidden, Eigen::Index n_out,
                          Activation activation = Activation::Logistic, double alpha = 0.0) {
        if (n_in < 1 || n_hidden < 1 || n_out < 1) throw ShapeError("network dimensions must be at least 1");
        if (!(alpha >= 0.0)) throw ConfigError("weight-decay coefficient must be non-negative");
        return {Matrix::Zero(n_in, n_hidden), Vector::Zero(n_hidden), Matrix::Zero(n_hidden, n_out),
                Vector::Zero(n_out), activation, alpha};
    }

    /// Parameters in canonical order.
    [[nodiscard]] Vector flatten() const {
        Vector p(param_count());
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < w1.rows(); ++i)
            for (Eigen::Index j = 0; j < w1.cols(); ++j) p[k++] = w1(i, j);
        for (Eigen::Index j = 0; j < b1.size(); ++j) p[k++] = b1[j];
        for (Eigen::Index j = 0; j < w2.rows(); ++j)
            for (Eigen::Index o = 0; o < w2.cols(); ++o) p[k++] = w2(j, o);
        for (Eigen::Index o = 0; o < b2.size(); ++o) p[k++] = b2[o];
        return p;
    }

    void set_params(const Vector& p) {
        if (p.size() != param_count()) throw ShapeError("parameter vector has wrong length");
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < w1.rows(); ++i)
            for (Eigen::Index j = 0; j < w1.cols(); ++j) w1(i, j) = p[k++];
        for (Eigen::Index j = 0; j < b1.size(); ++j) b1[j] = p[k++];
        for (Eigen::Index j = 0; j < w2.rows(); ++j)
            for (Eigen::Index o = 0; o < w2.cols(); ++o) w2(j, o) = p[k++];
        for (Eigen::Index o = 0; o < b2.size(); ++o) b2[o] = p[k++];
    }

    [[nodiscard]] MlpModel with_params(const Vector& p) const {
        MlpModel m = *this;
        m.set_params(p);
        return m;
    }

    /// Mask over the flat parameter vector: 1 for weights, 0 for biases.
    [[nodiscard]] Vector decay_mask() const {
        Vector mask = Vector::Zero(param_count());
        const Eigen::Index nw1 = n_in() * n_hidden();
        const Eigen::Index nw2 = n_hidden() * n_out();
        mask.segment(0, nw1).setOnes();
        mask.segment(nw1 + n_hidden(), nw2).setOnes();
        return mask;
    }

    void check() const {
        if (b1.size() != w1.cols() || w2.rows() != w1.cols() || b2.size() != w2.cols() || w1.rows() < 1 ||
            w1.cols() < 1 || w2.cols() < 1) {
            throw ShapeError("inconsistent network dimensions");
        }
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("weight-decay coefficient must be non-negative");
        if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
            throw NumericError("network parameters are not finite");
        }
    }

    friend bool operator==(const MlpModel& a, const MlpModel& b) {
        return a.activation == b.activation && a.alpha == b.alpha && a.w1.rows() == b.w1.rows() &&
               a.w1.cols() == b.w1.cols() && a.w2.cols() == b.w2.cols() && a.flatten() == b.flatten();
    }
};

/// Zero-mean Gaussian weights and biases with standard deviation
/// 1/sqrt(fan-in) of the layer they feed.
inline MlpModel init_mlp(Eigen::Index n_in, Eigen::Index n_hidden, Eigen::Index n_out, Activation activation,
                         double alpha, std::uint64_t seed) {
    MlpModel m = MlpModel::zeros(n_in, n_hidden, n_out, activation, alpha);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(n_in));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(n_hidden));
    for (Eigen::Index i = 0; i < n_in; ++i)
        for (Eigen::Index j = 0; j < n_hidden; ++j) m.w1(i, j) = s1 * gauss(rng);
    for (Eigen::Index j = 0; j < n_hidden; ++j) m.b1[j] = s1 * gauss(rng);
    for (Eigen::Index j = 0; j < n_hidden; ++j)
        for (Eigen::Index o = 0; o < n_out; ++o) m.w2(j, o) = s2 * gauss(rng);
    for (Eigen::Index o = 0; o < n_out; ++o) m.b2[o] = s2 * gauss(rng);
    return m;
}

struct TrainingBatch {
    Matrix inputs;   // N x n_in
    Matrix targets;  // N x n_out

    [[nodiscard]] Eigen::Index rows() const noexcept { return inputs.rows(); }

    void check() const {
        if (inputs.rows() != targets.rows()) throw ShapeError("inputs and targets have different row counts");
        if (inputs.rows() == 0) throw EmptyInputError("training batch has no rows");
        if (!inputs.allFinite() || !targets.allFinite()) throw NumericError("training batch has non-finite entries");
    }
};

namespace detail {

// Rows processed per block; keeps the N x n_hidden activations bounded.
inline constexpr Eigen::Index kRowBlock = 2048;

template <class Derived>
Matrix activate(const Eigen::MatrixBase<Derived>& pre, Activation act) {
    if (act == Activation::Logistic) return (1.0 + (-pre.array()).exp()).inverse().matrix();
    return pre.array().tanh().matrix();
}

/// act'(a) written in terms of z = act(a).
inline Matrix activation_slope(const Matrix& z, Activation act) {
    if (act == Activation::Logistic) return (z.array() * (1.0 - z.array())).matrix();
    return (1.0 - z.array().square()).matrix();
}

inline void check_inputs(const MlpModel& model, const Matrix& inputs) {
    if (inputs.cols() != model.n_in()) {
        throw ShapeError("input width " + std::to_string(inputs.cols()) + " does not match network input count " +
                         std::to_string(model.n_in()));
    }
    if (!inputs.allFinite()) throw NumericError("non-finite network input");
}

inline void check_batch(const MlpModel& model, const TrainingBatch& batch) {
    batch.check();
    check_inputs(model, batch.inputs);
    if (batch.targets.cols() != model.n_out()) throw ShapeError("target width does not match network output count");
}

inline double decay_term(const MlpModel& m) {
    return 0.5 * m.alpha * (m.w1.squaredNorm() + m.w2.squaredNorm());
}

/// Error and (optionally) its gradient in canonical order, with the batch
/// already validated. Row blocks are summed in a fixed order.
inline double error_gradient_unchecked(const MlpModel& m, const TrainingBatch& batch, Vector* grad) {
    const Eigen::Index n = batch.rows();
    double sse = 0.0;
    Matrix gw1, gw2;
    Vector gb1, gb2;
    if (grad) {
        gw1 = Matrix::Zero(m.n_in(), m.n_hidden());
        gw2 = Matrix::Zero(m.n_hidden(), m.n_out());
        gb1 = Vector::Zero(m.n_hidden());
        gb2 = Vector::Zero(m.n_out());
    }
    for (Eigen::Index r0 = 0; r0 < n; r0 += kRowBlock) {
        const Eigen::Index len = std::min(kRowBlock, n - r0);
        const auto x = batch.inputs.middleRows(r0, len);
        const Matrix pre = (x * m.w1).rowwise() + m.b1.transpose();
        const Matrix z = activate(pre, m.activation);
        const Matrix y = (z * m.w2).rowwise() + m.b2.transpose();
        const Matrix resid = y - batch.targets.middleRows(r0, len);
        sse += resid.squaredNorm();
        if (grad) {
            gw2.noalias() += z.transpose() * resid;
            gb2 += resid.colwise().sum().transpose();
            const Matrix delta = ((resid * m.w2.transpose()).array() * activation_slope(z, m.activation).array()).matrix();
            gw1.noalias() += x.transpose() * delta;
            gb1 += delta.colwise().sum().transpose();
        }
    }
    if (grad) {
        gw1 += m.alpha * m.w1;
        gw2 += m.alpha * m.w2;
        MlpModel g{std::move(gw1), std::move(gb1), std::move(gw2), std::move(gb2), m.activation, m.alpha};
        *grad = g.flatten();
    }
    return 0.5 * sse + decay_term(m);
}

}  // namespace detail

/// Network outputs, one row per input row.
inline Matrix forward(const MlpModel& model, const Matrix& inputs) {
    model.check();
    detail::check_inputs(model, inputs);
    Matrix out(inputs.rows(), model.n_out());
    for (Eigen::Index r0 = 0; r0 < inputs.rows(); r0 += detail::kRowBlock) {
        const Eigen::Index len = std::min(detail::kRowBlock, inputs.rows() - r0);
        const Matrix pre = (inputs.middleRows(r0, len) * model.w1).rowwise() + model.b1.transpose();
        out.middleRows(r0, len) = (detail::activate(pre, model.activation) * model.w2).rowwise() + model.b2.transpose();
    }
    return out;
}

inline double error(const MlpModel& model, const TrainingBatch& batch) {
    model.check();
    detail::check_batch(model, batch);
    return detail::error_gradient_unchecked(model, batch, nullptr);
}

/// Exact dE/dtheta by backpropagation, canonical order.
inline Vector gradient(const MlpModel& model, const TrainingBatch& batch) {
    model.check();
    detail::check_batch(model, batch);
    Vector g;
    detail::error_gradient_unchecked(model, batch, &g);
    return g;
}

/// Objective adapter over the flat parameter vector, for the optimizers.
class MlpObjective {
public:
    MlpObjective(MlpModel shape, const TrainingBatch& batch) : model_(std::move(shape)), batch_(&batch) {
        model_.check();
        detail::check_batch(model_, batch);
    }

    [[nodiscard]] double value(const Vector& theta) {
        model_.set_params(theta);
        return detail::error_gradient_unchecked(model_, *batch_, nullptr);
    }

    double value_and_gradient(const Vector& theta, Vector& grad) {
        model_.set_params(theta);
        return detail::error_gradient_unchecked(model_, *batch_, &grad);
    }

    [[nodiscard]] const MlpModel& model() const noexcept { return model_; }

private:
    MlpModel model_;
    const TrainingBatch* batch_;
};

}  // namespace nomperf
