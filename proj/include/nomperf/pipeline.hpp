#pragma once

// Corpus -> trained artifact.
//
// Runs are split by whole run: holdout runs are ignored entirely, validation
// runs only feed early stopping. Normalization scales, the dwell scale, the
// residual statistics and the speed-average table all come from the training
// runs alone.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "nomperf/baseline.hpp"
#include "nomperf/domain.hpp"
#include "nomperf/error.hpp"
#include "nomperf/kv.hpp"
#include "nomperf/mlp.hpp"
#include "nomperf/optim.hpp"
#include "nomperf/trace.hpp"

namespace nomperf {

enum class Optimizer { Scg, Sgd };

inline const char* to_string(Optimizer o) { return o == Optimizer::Scg ? "scg" : "sgd"; }

inline std::optional<Optimizer> parse_optimizer(std::string_view s) {
    if (s == "scg") return Optimizer::Scg;
    if (s == "sgd") return Optimizer::Sgd;
    return std::nullopt;
}

struct TrainConfig {
    int hidden_units = 750;
    double alpha = 0.1;
    Activation activation = Activation::Logistic;
    Optimizer optimizer = Optimizer::Scg;
    ScgOptions scg;
    SgdOptions sgd;
    std::uint64_t seed = 1;
    double dwell_scale = 0.0;  // raw time units; 0 picks the longest dwell in the training runs
    std::size_t stride = 1;    // keep every stride-th sample of each run
    double bin_width = kDefaultBinWidth;
    std::vector<std::string> holdout_run_ids;
    std::vector<std::string> validation_run_ids;
    int validate_every = 0;  // SCG cycles between validation checks; 0 disables early stopping
    int patience = 10;       // checks without improvement before stopping

    void check() const {
        if (hidden_units < 1) throw ConfigError("hidden_units must be at least 1");
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be non-negative");
        if (!(dwell_scale >= 0.0) || !std::isfinite(dwell_scale)) throw ConfigError("dwell_scale must be non-negative");
        if (stride < 1) throw ConfigError("stride must be at least 1");
        if (!(bin_width > 0.0)) throw ConfigError("bin_width must be positive");
        if (validate_every < 0) throw ConfigError("validate_every must be non-negative");
        if (patience < 1) throw ConfigError("patience must be at least 1");
        if (optimizer == Optimizer::Scg) scg.check();
        if (optimizer == Optimizer::Sgd) {
            sgd.check();
            if (!(sgd.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        }
    }
};

/// Mean and population standard deviation of |prediction - measured| in raw
/// speed units.
struct ResidualStats {
    double mean = 0.0;
    double std = 0.0;
    std::uint64_t count = 0;

    friend bool operator==(const ResidualStats&, const ResidualStats&) = default;
};

struct TrainedArtifact {
    MlpModel model;
    NormalizationMeta normalization;
    double dt = 1.0;           // raw sample spacing the network was trained on
    double dwell_scale = 1.0;  // normalized time units
    std::size_t stride = 1;
    TrainingTrace trace;
    ResidualStats residuals;
    SpeedAverageTable speed_average;  // normalized speeds

    friend bool operator==(const TrainedArtifact& a, const TrainedArtifact& b) {
        return a.model == b.model && a.normalization == b.normalization && a.dt == b.dt &&
               a.dwell_scale == b.dwell_scale && a.stride == b.stride && a.trace.entries == b.trace.entries &&
               a.residuals == b.residuals && a.speed_average == b.speed_average;
    }
};

/// Feature rows as network inputs and targets.
inline TrainingBatch make_batch(const std::vector<FeatureRow>& rows) {
    if (rows.empty()) throw EmptyInputError("no feature rows");
    TrainingBatch b{Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kFeatureCount)),
                    Matrix(static_cast<Eigen::Index>(rows.size()), 1)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        b.inputs(r, 0) = rows[i].cur_cmd;
        b.inputs(r, 1) = rows[i].prev_cmd;
        b.inputs(r, 2) = rows[i].time_since_change;
        b.inputs(r, 3) = rows[i].utilization;
        b.targets(r, 0) = rows[i].target;
    }
    return b;
}

inline ResidualStats residual_stats(const Matrix& predicted, const Matrix& targets, double scale) {
    ResidualStats s;
    s.count = static_cast<std::uint64_t>(predicted.rows());
    if (s.count == 0) return s;
    const Vector r = ((predicted - targets).cwiseAbs() * scale).col(0);
    s.mean = r.mean();
    s.std = std::sqrt((r.array() - s.mean).square().mean());
    return s;
}

namespace detail {

inline std::vector<RunRecord> select_runs(const std::vector<RunRecord>& runs, const std::set<std::string>& ids,
                                          bool keep) {
    std::vector<RunRecord> out;
    for (const auto& r : runs) {
        if (ids.count(r.run_id) == static_cast<std::size_t>(keep)) out.push_back(r);
    }
    return out;
}

inline std::vector<RunRecord> prepare_runs(const std::vector<RunRecord>& runs, std::size_t stride,
                                           const NormalizationMeta* meta) {
    std::vector<RunRecord> out;
    out.reserve(runs.size());
    for (const auto& r : runs) {
        RunRecord d = decimate(r, stride);
        if (meta) d = apply_normalization(d, *meta);
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace detail

/// Trains a network on `runs` minus holdout and validation runs.
inline TrainedArtifact train_pipeline(const std::vector<RunRecord>& runs, const TrainConfig& cfg) {
    cfg.check();
    if (runs.empty()) throw EmptyInputError("training corpus has no runs");
    std::set<std::string> ids;
    for (const auto& r : runs) {
        check_run(r);
        if (!ids.insert(r.run_id).second) throw ConfigError("duplicate run id '" + r.run_id + "'");
    }
    std::set<std::string> held(cfg.holdout_run_ids.begin(), cfg.holdout_run_ids.end());
    std::set<std::string> val(cfg.validation_run_ids.begin(), cfg.validation_run_ids.end());
    for (const auto& id : held) {
        if (!ids.count(id)) throw ConfigError("holdout run '" + id + "' is not in the corpus");
        if (val.count(id)) throw ConfigError("run '" + id + "' is both holdout and validation");
    }
    for (const auto& id : val) {
        if (!ids.count(id)) throw ConfigError("validation run '" + id + "' is not in the corpus");
    }
    std::set<std::string> excluded = held;
    excluded.insert(val.begin(), val.end());

    const auto train_raw = detail::prepare_runs(detail::select_runs(runs, excluded, false), cfg.stride, nullptr);
    if (train_raw.empty()) throw EmptyInputError("every run is held out");
    const double dt = train_raw.front().dt;
    for (const auto& r : train_raw) {
        if (std::abs(r.dt - dt) > 1e-9 * dt) throw MalformedRunError("run '" + r.run_id + "' has a different dt");
    }

    TrainedArtifact art;
    art.normalization = fit_normalization(train_raw);
    art.dt = dt;
    art.stride = cfg.stride;
    std::vector<RunRecord> train;
    for (const auto& r : train_raw) {
        train.push_back(apply_normalization(r, art.normalization));
        check_normalized_run(train.back());
    }
    art.dwell_scale = cfg.dwell_scale > 0.0 ? cfg.dwell_scale / art.normalization.time_ref : max_dwell(train);
    art.speed_average = SpeedAverageTable::fit(train, cfg.bin_width);

    const TrainingBatch batch = make_batch(extract_features(train, art.dwell_scale));
    const MlpModel init = init_mlp(static_cast<Eigen::Index>(kFeatureCount), cfg.hidden_units, 1, cfg.activation,
                                   cfg.alpha, cfg.seed);

    if (cfg.optimizer == Optimizer::Sgd) {
        TrainResult r = train_sgd(init, batch, cfg.sgd);
        art.model = std::move(r.model);
        art.trace = std::move(r.trace);
    } else {
        ScgObserver observer;
        std::optional<TrainingBatch> vbatch;
        Vector best;
        double best_err = std::numeric_limits<double>::infinity();
        int stale = 0;
        if (cfg.validate_every > 0 && !val.empty()) {
            const auto val_runs = detail::prepare_runs(detail::select_runs(runs, val, true), cfg.stride, &art.normalization);
            vbatch = make_batch(extract_features(val_runs, art.dwell_scale));
            MlpModel probe = init;
            best = init.flatten();
            best_err = detail::error_gradient_unchecked(probe, *vbatch, nullptr);
            observer = [&, probe](int cycle, const Vector& x, double) mutable {
                if (cycle % cfg.validate_every != 0) return true;
                probe.set_params(x);
                const double e = detail::error_gradient_unchecked(probe, *vbatch, nullptr);
                if (e < best_err) {
                    best_err = e;
                    best = x;
                    stale = 0;
                    return true;
                }
                return ++stale < cfg.patience;
            };
        }
        TrainResult r = train_scg(init, batch, cfg.scg, observer);
        art.model = vbatch ? init.with_params(best) : std::move(r.model);
        art.trace = std::move(r.trace);
    }

    const Matrix pred = forward(art.model, batch.inputs);
    art.residuals = residual_stats(pred, batch.targets, art.normalization.speed_ref);
    return art;
}

// ---------------------------------------------------------------------------
// Config file

inline constexpr int kTrainConfigVersion = 1;

inline std::string to_text(const TrainConfig& c) {
    KvWriter w("nomperf training config", kTrainConfigVersion);
    w.put("hidden_units", c.hidden_units)
        .put("alpha", c.alpha)
        .put("activation", to_string(c.activation))
        .put("optimizer", to_string(c.optimizer))
        .put("seed", c.seed)
        .put("dwell_scale", c.dwell_scale)
        .put("stride", c.stride)
        .put("bin_width", c.bin_width)
        .put("holdout_run_ids", c.holdout_run_ids)
        .put("validation_run_ids", c.validation_run_ids)
        .put("validate_every", c.validate_every)
        .put("patience", c.patience)
        .put("scg.max_cycles", c.scg.max_cycles)
        .put("scg.grad_tol", c.scg.grad_tol)
        .put("scg.step_tol", c.scg.step_tol)
        .put("scg.sigma0", c.scg.sigma0)
        .put("scg.lambda_init", c.scg.lambda_init)
        .put("scg.display", c.scg.display)
        .put("sgd.learning_rate", c.sgd.learning_rate)
        .put("sgd.batch_size", c.sgd.batch_size)
        .put("sgd.epochs", c.sgd.epochs)
        .put("sgd.seed", c.sgd.seed);
    return w.str();
}

/// Reads a training config; absent keys keep their defaults.
inline TrainConfig parse_train_config(std::istream& in) {
    const KvFile f = KvFile::parse(in, "config", kTrainConfigVersion);
    f.check_keys({"hidden_units", "alpha", "activation", "optimizer", "seed", "dwell_scale", "stride", "bin_width",
                  "holdout_run_ids", "validation_run_ids", "validate_every", "patience", "scg.max_cycles",
                  "scg.grad_tol", "scg.step_tol", "scg.sigma0", "scg.lambda_init", "scg.display",
                  "sgd.learning_rate", "sgd.batch_size", "sgd.epochs", "sgd.seed"});
    TrainConfig c;
    f.get("hidden_units", c.hidden_units);
    f.get("alpha", c.alpha);
    std::string s;
    if (f.has("activation")) {
        f.get("activation", s);
        auto a = parse_activation(s);
        if (!a) throw ConfigError("config: unknown activation '" + s + "'", f.line_of("activation"));
        c.activation = *a;
    }
    if (f.has("optimizer")) {
        f.get("optimizer", s);
        auto o = parse_optimizer(s);
        if (!o) throw ConfigError("config: unknown optimizer '" + s + "'", f.line_of("optimizer"));
        c.optimizer = *o;
    }
    f.get("seed", c.seed);
    f.get("dwell_scale", c.dwell_scale);
    f.get("stride", c.stride);
    f.get("bin_width", c.bin_width);
    f.get("holdout_run_ids", c.holdout_run_ids);
    f.get("validation_run_ids", c.validation_run_ids);
    f.get("validate_every", c.validate_every);
    f.get("patience", c.patience);
    f.get("scg.max_cycles", c.scg.max_cycles);
    f.get("scg.grad_tol", c.scg.grad_tol);
    f.get("scg.step_tol", c.scg.step_tol);
    f.get("scg.sigma0", c.scg.sigma0);
    f.get("scg.lambda_init", c.scg.lambda_init);
    f.get("scg.display", c.scg.display);
    f.get("sgd.learning_rate", c.sgd.learning_rate);
    f.get("sgd.batch_size", c.sgd.batch_size);
    f.get("sgd.epochs", c.sgd.epochs);
    f.get("sgd.seed", c.sgd.seed);
    try {
        c.check();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

}  // namespace nomperf
