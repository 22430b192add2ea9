#pragma once

// Trainers for the regularized network error.
//
// minimize_scg is Moller's scaled conjugate gradient: Polak-Ribiere search
// directions, curvature along the direction from a gradient difference at a
// small offset, and a trust parameter lambda that shifts the curvature
// estimate. Steps that would raise the error are rejected and the direction
// falls back to steepest descent; that and a non-descent direction are the only
// restarts. There is no periodic restart every N steps: on a quadratic it
// throws away the Krylov space just when rounding has delayed convergence past
// step N.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "nomperf/error.hpp"
#include "nomperf/mlp.hpp"
#include "nomperf/trace.hpp"

namespace nomperf {

template <class F>
concept Objective = requires(F f, const Vector& x, Vector& g) {
    { f.value(x) } -> std::convertible_to<double>;
    { f.value_and_gradient(x, g) } -> std::convertible_to<double>;
};

struct ScgOptions {
    int max_cycles = 75000;
    double grad_tol = 1e-12;
    double step_tol = 1e-15;
    double sigma0 = 1e-4;
    double lambda_init = 1e-10;
    bool display = false;
    std::ostream* log = nullptr;  // display target, std::cout when null

    void check() const {
        if (max_cycles < 1) throw ConfigError("max_cycles must be at least 1");
        if (!(grad_tol > 0.0) || !(step_tol > 0.0)) throw ConfigError("SCG tolerances must be positive");
        if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
        if (!(lambda_init >= kLambdaMin && lambda_init <= kLambdaMax)) throw ConfigError("lambda_init out of range");
    }

    static constexpr double kLambdaMin = 1e-15;
    static constexpr double kLambdaMax = 1e100;
};

enum class StopReason { MaxCycles, GradientTolerance, StepTolerance, ZeroDirection, Observer, Epochs };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::MaxCycles: return "max_cycles";
        case StopReason::GradientTolerance: return "gradient_tolerance";
        case StopReason::StepTolerance: return "step_tolerance";
        case StopReason::ZeroDirection: return "zero_direction";
        case StopReason::Observer: return "observer";
        case StopReason::Epochs: return "epochs";
    }
    return "unknown";
}

struct ScgResult {
    Vector params;
    TrainingTrace trace;  // cycle 0 is the starting point, then one entry per accepted step
    StopReason reason = StopReason::MaxCycles;
    int cycles = 0;
    int accepted = 0;
    double lambda = 1.0;
};

/// Called after every accepted step with (cycle, parameters, error); returning
/// false stops the run.
using ScgObserver = std::function<bool(int, const Vector&, double)>;

namespace detail {

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline bool finite_all(double f, const Vector& g) { return std::isfinite(f) && g.allFinite(); }

}  // namespace detail

template <Objective F>
ScgResult minimize_scg(F& f, Vector x, const ScgOptions& opt, const ScgObserver& observer = {}) {
    opt.check();
    std::ostream& log = opt.log ? *opt.log : std::cout;
    ScgResult res;

    Vector grad_new(x.size());
    double f_old = f.value_and_gradient(x, grad_new);
    if (!detail::finite_all(f_old, grad_new)) {
        throw NumericFailure("objective not finite at the starting point", detail::to_std(x));
    }
    Vector grad_old = grad_new;
    Vector dir = -grad_new;
    bool steepest = true;
    bool need_curvature = true;
    double lambda = opt.lambda_init;
    double mu = 0.0, kappa = 0.0, gamma = 0.0;
    Vector x_plus, g_plus(x.size()), x_new, g_trial(x.size());

    res.trace.entries.push_back({0, f_old, grad_new.norm()});
    res.params = x;
    if (grad_new.norm() < opt.grad_tol) {
        res.reason = StopReason::GradientTolerance;
        res.lambda = lambda;
        return res;
    }

    auto fail = [&](const std::string& what) {
        throw NumericFailure(what, detail::to_std(x), res.trace);
    };

    res.reason = StopReason::MaxCycles;
    for (int cycle = 1; cycle <= opt.max_cycles; ++cycle) {
        res.cycles = cycle;
        if (need_curvature) {
            mu = dir.dot(grad_new);
            if (mu >= 0.0) {
                dir = -grad_new;
                steepest = true;
                mu = dir.dot(grad_new);
            }
            kappa = dir.squaredNorm();
            if (!(kappa > 0.0)) {
                res.reason = StopReason::ZeroDirection;
                break;
            }
            const double sigma = opt.sigma0 / std::sqrt(kappa);
            x_plus = x + sigma * dir;
            const double f_plus = f.value_and_gradient(x_plus, g_plus);
            if (!detail::finite_all(f_plus, g_plus)) fail("objective not finite during curvature estimate");
            gamma = dir.dot(g_plus - grad_new) / sigma;
            need_curvature = false;
        }

        // Shift the curvature by lambda*|d|^2, forcing it positive.
        double delta = gamma + lambda * kappa;
        if (delta <= 0.0) {
            delta = lambda * kappa;
            lambda = lambda - gamma / kappa;
            if (!(lambda <= ScgOptions::kLambdaMax)) fail("trust parameter exceeded its upper bound");
        }
        const double step = -mu / delta;
        x_new = x + step * dir;
        const double f_new = f.value_and_gradient(x_new, g_trial);
        if (!detail::finite_all(f_new, g_trial)) fail("objective not finite along the search direction");

        // Ratio of actual to predicted decrease.
        const double comparison = 2.0 * (f_new - f_old) / (step * mu);
        const bool success = comparison >= 0.0;

        if (opt.display) {
            char line[128];
            std::snprintf(line, sizeof line, "Cycle %6d  Error %14.8f  Scale %e\n", cycle, success ? f_new : f_old,
                          lambda);
            log << line;
        }

        if (success) {
            const double max_step = (step * dir).cwiseAbs().maxCoeff();
            x = x_new;
            f_old = f_new;
            grad_old = grad_new;
            grad_new = g_trial;
            ++res.accepted;
            res.trace.entries.push_back({cycle, f_new, grad_new.norm()});
            res.params = x;
            if (observer && !observer(cycle, x, f_new)) {
                res.reason = StopReason::Observer;
                break;
            }
            if (max_step < opt.step_tol) {
                res.reason = StopReason::StepTolerance;
                break;
            }
            if (grad_new.norm() < opt.grad_tol) {
                res.reason = StopReason::GradientTolerance;
                break;
            }
        }

        if (comparison < 0.25) {
            lambda *= 4.0;
            if (!(lambda <= ScgOptions::kLambdaMax)) fail("trust parameter exceeded its upper bound");
        }
        if (comparison > 0.75) lambda = std::max(0.25 * lambda, ScgOptions::kLambdaMin);

        if (success) {
            need_curvature = true;
            const double beta = (grad_old - grad_new).dot(grad_new) / mu;
            dir = beta * dir - grad_new;
            steepest = false;
        } else if (!steepest) {
            dir = -grad_new;
            steepest = true;
            need_curvature = true;
        }
    }
    res.params = x;
    res.lambda = lambda;
    return res;
}

struct TrainResult {
    MlpModel model;
    TrainingTrace trace;
    StopReason reason = StopReason::MaxCycles;
};

/// Full-batch SCG on the network error. The input model is not modified.
inline TrainResult train_scg(const MlpModel& model, const TrainingBatch& batch, const ScgOptions& opts,
                             const ScgObserver& observer = {}) {
    MlpObjective objective(model, batch);
    ScgResult r = minimize_scg(objective, model.flatten(), opts, observer);
    return {model.with_params(r.params), std::move(r.trace), r.reason};
}

// ---------------------------------------------------------------------------
// Mini-batch SGD

struct SgdOptions {
    double learning_rate = 0.01;
    int batch_size = 32;
    int epochs = 100;
    std::uint64_t seed = 1;

    void check() const {
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be non-negative");
        if (batch_size < 1) throw ConfigError("batch size must be at least 1");
        if (epochs < 1) throw ConfigError("epochs must be at least 1");
    }
};

inline constexpr double kDivergenceLimit = 1e12;

/// Shuffled mini-batch gradient descent, theta -= lr * grad of the summed
/// mini-batch error. The weight-decay term is scaled by batch/N so that one
/// epoch's terms add up to the full objective. The trace holds the full
/// objective after every epoch (epoch 0 is the start).
inline TrainResult train_sgd(const MlpModel& model, const TrainingBatch& batch, const SgdOptions& opts) {
    opts.check();
    model.check();
    detail::check_batch(model, batch);
    const Eigen::Index n = batch.rows();
    const Eigen::Index bs = std::min<Eigen::Index>(opts.batch_size, n);

    MlpModel current = model;
    Vector theta = model.flatten();
    TrainResult out{model, {}, StopReason::Epochs};
    Vector last_good = theta;

    auto record = [&](int epoch) {
        Vector g;
        current.set_params(theta);
        const double e = detail::error_gradient_unchecked(current, batch, &g);
        if (!std::isfinite(e) || e > kDivergenceLimit) {
            throw DivergenceError("SGD diverged at epoch " + std::to_string(epoch), detail::to_std(last_good),
                                  out.trace);
        }
        out.trace.entries.push_back({epoch, e, g.norm()});
        last_good = theta;
    };
    record(0);

    std::mt19937_64 rng(opts.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    MlpModel mini = model;
    mini.alpha = model.alpha * static_cast<double>(bs) / static_cast<double>(n);
    TrainingBatch sub{Matrix(bs, model.n_in()), Matrix(bs, model.n_out())};
    Vector g;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index start = 0; start < n; start += bs) {
            const Eigen::Index len = std::min(bs, n - start);
            if (sub.inputs.rows() != len) {
                sub.inputs.resize(len, model.n_in());
                sub.targets.resize(len, model.n_out());
                mini.alpha = model.alpha * static_cast<double>(len) / static_cast<double>(n);
            }
            for (Eigen::Index r = 0; r < len; ++r) {
                const auto src = order[static_cast<std::size_t>(start + r)];
                sub.inputs.row(r) = batch.inputs.row(src);
                sub.targets.row(r) = batch.targets.row(src);
            }
            mini.set_params(theta);
            detail::error_gradient_unchecked(mini, sub, &g);
            theta -= opts.learning_rate * g;
        }
        record(epoch);
        if (sub.inputs.rows() != bs) {
            sub.inputs.resize(bs, model.n_in());
            sub.targets.resize(bs, model.n_out());
            mini.alpha = model.alpha * static_cast<double>(bs) / static_cast<double>(n);
        }
    }
    out.model = model.with_params(theta);
    return out;
}

}  // namespace nomperf
