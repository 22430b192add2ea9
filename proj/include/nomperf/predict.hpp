#pragma once

// Prediction from a mission profile, the two baselines, residual reports and
// anomaly flags. Everything here works in raw units: the artifact's
// normalization is applied on the way into the network and undone on the way
// out.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nomperf/baseline.hpp"
#include "nomperf/domain.hpp"
#include "nomperf/error.hpp"
#include "nomperf/mlp.hpp"
#include "nomperf/pipeline.hpp"

namespace nomperf {

/// Where the utilization input comes from. Forecast mode integrates
/// du/dt = c * (cmd/speed_ref)^p from zero, clipped to 1. A negative
/// burn_coeff means "calibrate": c = 1 / profile duration, so a run held at
/// full speed uses up its reserves exactly at the end.
struct UtilizationModel {
    enum class Mode { Recorded, Forecast };

    Mode mode = Mode::Forecast;
    double burn_coeff = -1.0;
    double exponent = 3.0;
    std::vector<double> recorded;

    static UtilizationModel from_run(const RunRecord& run) {
        UtilizationModel m;
        m.mode = Mode::Recorded;
        for (const auto& s : run.samples) m.recorded.push_back(s.utilization);
        return m;
    }

    static UtilizationModel forecast(double burn_coeff = -1.0, double exponent = 3.0) {
        UtilizationModel m;
        m.burn_coeff = burn_coeff;
        m.exponent = exponent;
        return m;
    }
};

struct PredictionTrace {
    std::vector<double> t;
    std::vector<double> cmd_speed;
    std::vector<double> predicted_speed;
    std::vector<double> utilization;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
};

/// Utilization series for `n` steps of spacing `dt`.
inline std::vector<double> utilization_series(const UtilizationModel& util, const std::vector<double>& cmd_norm,
                                              double dt, double duration) {
    const std::size_t n = cmd_norm.size();
    if (util.mode == UtilizationModel::Mode::Recorded) {
        if (util.recorded.size() != n) {
            throw LengthMismatchError("recorded utilization has " + std::to_string(util.recorded.size()) +
                                      " samples, profile has " + std::to_string(n));
        }
        return util.recorded;
    }
    if (!(util.exponent >= 0.0) || !std::isfinite(util.exponent)) throw ConfigError("exponent must be non-negative");
    if (!std::isfinite(util.burn_coeff)) throw ConfigError("burn coefficient must be finite");
    const double c = util.burn_coeff < 0.0 ? 1.0 / duration : util.burn_coeff;
    std::vector<double> u(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = acc;
        acc = std::min(1.0, acc + c * std::pow(std::max(cmd_norm[i], 0.0), util.exponent) * dt);
    }
    return u;
}

namespace detail {

inline PredictionTrace empty_trace(const MissionProfile& profile, double dt) {
    PredictionTrace tr;
    tr.cmd_speed = expand_profile(profile, dt);
    tr.t.resize(tr.cmd_speed.size());
    for (std::size_t i = 0; i < tr.t.size(); ++i) tr.t[i] = static_cast<double>(i) * dt;
    return tr;
}

}  // namespace detail

/// Network prediction for `profile` (raw units) on the artifact's time grid.
inline PredictionTrace predict_run(const TrainedArtifact& art, const MissionProfile& profile,
                                   const UtilizationModel& util) {
    PredictionTrace tr = detail::empty_trace(profile, art.dt);
    const std::size_t n = tr.size();
    const NormalizationMeta& meta = art.normalization;

    std::vector<double> cmd_norm(n);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cmd_norm[i] = tr.cmd_speed[i] / meta.speed_ref;
        worst = std::max(worst, cmd_norm[i]);
    }
    if (worst > 1.0) {
        tr.warnings.push_back("profile commands up to " + format_double(worst * meta.speed_ref) +
                              ", above the training maximum " + format_double(meta.speed_ref));
    }
    tr.utilization = utilization_series(util, cmd_norm, art.dt, static_cast<double>(n) * art.dt);

    // Same route as training: raw run, normalized, then features.
    RunRecord run{"profile", {}, art.dt};
    run.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) run.samples.push_back({tr.t[i], tr.cmd_speed[i], 0.0, tr.utilization[i]});
    const TrainingBatch batch = make_batch(extract_features(apply_normalization(run, meta), art.dwell_scale));
    const Matrix y = forward(art.model, batch.inputs);
    tr.predicted_speed.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        tr.predicted_speed[i] = y(static_cast<Eigen::Index>(i), 0) * meta.speed_ref;
        if (!std::isfinite(tr.predicted_speed[i])) throw NumericError("prediction is not finite");
    }
    return tr;
}

/// Predicts that the vehicle runs exactly at the commanded speed.
inline PredictionTrace baseline_setpoint(const MissionProfile& profile, double dt) {
    PredictionTrace tr = detail::empty_trace(profile, dt);
    tr.predicted_speed = tr.cmd_speed;
    tr.utilization.assign(tr.size(), 0.0);
    return tr;
}

/// Predicts the training-corpus mean speed for the commanded speed's bin.
inline PredictionTrace baseline_speed_average(const SpeedAverageTable& table, const MissionProfile& profile,
                                              double dt, double speed_ref = 1.0) {
    PredictionTrace tr = detail::empty_trace(profile, dt);
    tr.predicted_speed.resize(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        tr.predicted_speed[i] = table.predict(tr.cmd_speed[i] / speed_ref) * speed_ref;
    }
    tr.utilization.assign(tr.size(), 0.0);
    return tr;
}

inline PredictionTrace baseline_speed_average(const std::vector<RunRecord>& training_runs,
                                              const MissionProfile& profile, double dt,
                                              double bin_width = kDefaultBinWidth) {
    return baseline_speed_average(SpeedAverageTable::fit(training_runs, bin_width), profile, dt);
}

inline PredictionTrace baseline_speed_average(const TrainedArtifact& art, const MissionProfile& profile) {
    return baseline_speed_average(art.speed_average, profile, art.dt, art.normalization.speed_ref);
}

// ---------------------------------------------------------------------------
// Reports

struct MethodEval {
    std::string method;
    std::vector<double> predicted;
    std::vector<double> residual;     // |predicted - actual|
    std::vector<double> accumulated;  // prefix sums of residual
    double mean_residual = 0.0;
    double max_residual = 0.0;
    double final_accumulated = 0.0;

    friend bool operator==(const MethodEval&, const MethodEval&) = default;
};

struct FlaggedInterval {
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;  // inclusive
    double peak_residual = 0.0;
    std::string method;

    friend bool operator==(const FlaggedInterval&, const FlaggedInterval&) = default;
};

struct EvalReport {
    std::string run_id;
    double dt = 1.0;
    std::vector<double> t;
    std::vector<double> cmd_speed;
    std::vector<double> actual_speed;
    std::vector<MethodEval> methods;
    std::vector<FlaggedInterval> flags;

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }

    [[nodiscard]] const MethodEval& method(const std::string& name) const {
        for (const auto& m : methods) {
            if (m.method == name) return m;
        }
        throw ConfigError("report has no method '" + name + "'");
    }

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Residuals of one prediction against a measured run.
inline MethodEval evaluate_method(const std::string& name, const PredictionTrace& pred, const RunRecord& actual) {
    if (pred.size() != actual.size()) {
        throw LengthMismatchError("prediction has " + std::to_string(pred.size()) + " steps, run '" + actual.run_id +
                                  "' has " + std::to_string(actual.size()));
    }
    if (pred.size() == 0) throw EmptyInputError("nothing to evaluate");
    const double t0 = actual.samples.front().t;
    const double dt = pred.size() > 1 ? pred.t[1] - pred.t[0] : actual.dt;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double rel = actual.samples[i].t - t0;
        if (std::abs(rel - (pred.t[i] - pred.t[0])) > 1e-6 * dt + 1e-12 * std::abs(rel)) {
            throw LengthMismatchError("prediction and run '" + actual.run_id + "' are not aligned at index " +
                                      std::to_string(i));
        }
    }
    MethodEval m;
    m.method = name;
    m.predicted = pred.predicted_speed;
    m.residual.resize(pred.size());
    m.accumulated.resize(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        m.residual[i] = std::abs(pred.predicted_speed[i] - actual.samples[i].actual_speed);
        acc += m.residual[i];
        m.accumulated[i] = acc;
        m.max_residual = std::max(m.max_residual, m.residual[i]);
    }
    m.final_accumulated = acc;
    m.mean_residual = acc / static_cast<double>(pred.size());
    return m;
}

/// Report for one run and any number of named predictions.
inline EvalReport evaluate(const RunRecord& actual, const std::vector<std::pair<std::string, PredictionTrace>>& preds) {
    EvalReport r;
    r.run_id = actual.run_id;
    r.dt = actual.dt;
    for (const auto& s : actual.samples) {
        r.t.push_back(s.t);
        r.cmd_speed.push_back(s.cmd_speed);
        r.actual_speed.push_back(s.actual_speed);
    }
    for (const auto& [name, p] : preds) r.methods.push_back(evaluate_method(name, p, actual));
    return r;
}

inline EvalReport evaluate(const PredictionTrace& pred, const RunRecord& actual, const std::string& name = "ann") {
    return evaluate(actual, {{name, pred}});
}

/// Network plus both baselines, using the run's own command history and
/// recorded utilization. The run must already be on the artifact's grid.
inline EvalReport evaluate_run(const TrainedArtifact& art, const RunRecord& run) {
    check_run(run);
    const MissionProfile profile = profile_of(run);
    return evaluate(run, {{"ann", predict_run(art, profile, UtilizationModel::from_run(run))},
                          {"setpoint", baseline_setpoint(profile, art.dt)},
                          {"speed_average", baseline_speed_average(art, profile)}});
}

// ---------------------------------------------------------------------------
// Flags

inline constexpr double kDefaultFlagK = 3.0;
inline constexpr std::size_t kDefaultFlagWindow = 25;

/// Mean of residual[i-window+1 .. i] for every i >= window-1; earlier entries
/// are empty.
inline std::vector<std::optional<double>> rolling_mean(const std::vector<double>& residual, std::size_t window) {
    std::vector<std::optional<double>> out(residual.size());
    if (window == 0) return out;
    for (std::size_t i = window - 1; i < residual.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = i + 1 - window; j <= i; ++j) sum += residual[j];
        out[i] = sum / static_cast<double>(window);
    }
    return out;
}

/// Maximal runs of indices whose trailing rolling-mean residual exceeds
/// stats.mean + k * stats.std.
inline std::vector<FlaggedInterval> flag_anomalies(const std::vector<double>& residual, const ResidualStats& stats,
                                                   double k = kDefaultFlagK, std::size_t window = kDefaultFlagWindow,
                                                   const std::string& method = "ann") {
    if (window < 1) throw ConfigError("window must be at least 1");
    if (!(k > 0.0)) throw ConfigError("k must be positive");
    if (residual.size() < window) {
        throw EmptyInputError("report has " + std::to_string(residual.size()) + " steps, fewer than the window " +
                              std::to_string(window));
    }
    const double threshold = stats.mean + k * stats.std;
    const auto roll = rolling_mean(residual, window);
    std::vector<FlaggedInterval> out;
    for (std::size_t i = 0; i < roll.size(); ++i) {
        if (!roll[i] || !(*roll[i] > threshold)) continue;
        if (!out.empty() && out.back().end_idx + 1 == i) {
            out.back().end_idx = i;
            out.back().peak_residual = std::max(out.back().peak_residual, residual[i]);
        } else {
            out.push_back({i, i, residual[i], method});
        }
    }
    return out;
}

inline std::vector<FlaggedInterval> flag_anomalies(const EvalReport& report, const ResidualStats& stats,
                                                   double k = kDefaultFlagK, std::size_t window = kDefaultFlagWindow,
                                                   const std::string& method = "ann") {
    return flag_anomalies(report.method(method).residual, stats, k, window, method);
}

/// Indices within `half_width` samples of a command change (index 0 counts as
/// a change from rest).
inline std::vector<bool> transient_mask(const std::vector<double>& cmd, std::size_t half_width) {
    std::vector<bool> mask(cmd.size(), false);
    for (std::size_t c : change_indices(cmd)) {
        const std::size_t lo = c >= half_width ? c - half_width : 0;
        const std::size_t hi = std::min(cmd.size(), c + half_width + 1);
        for (std::size_t i = lo; i < hi; ++i) mask[i] = true;
    }
    return mask;
}

}  // namespace nomperf
