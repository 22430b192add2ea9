#pragma once

// Telemetry data model and the network's input features.
//
// A run is a uniformly sampled series of (time, commanded speed, measured
// speed, utilization). Utilization is the fraction of energy reserves used so
// far; it starts at zero and never decreases inside one run, so a reset to
// zero marks the start of the next run in a concatenated corpus.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nomperf/error.hpp"

namespace nomperf {

struct Sample {
    double t = 0.0;
    double cmd_speed = 0.0;
    double actual_speed = 0.0;
    double utilization = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct RunRecord {
    std::string run_id;
    std::vector<Sample> samples;
    double dt = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples.empty(); }
    [[nodiscard]] double duration() const noexcept { return static_cast<double>(samples.size()) * dt; }

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct ProfileSegment {
    double start_time = 0.0;
    double cmd_speed = 0.0;

    friend bool operator==(const ProfileSegment&, const ProfileSegment&) = default;
};

/// Piecewise-constant commanded speed. `duration` is the run length; the last
/// segment holds until then.
struct MissionProfile {
    std::vector<ProfileSegment> segments;
    double duration = 0.0;

    friend bool operator==(const MissionProfile&, const MissionProfile&) = default;
};

/// Network input for one timestep, columns in the order the network sees them,
/// plus the measured speed it is trained against.
struct FeatureRow {
    double cur_cmd = 0.0;
    double prev_cmd = 0.0;
    double time_since_change = 0.0;
    double utilization = 0.0;
    double target = 0.0;

    friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

inline constexpr std::size_t kFeatureCount = 4;

/// Reference values that map raw units onto [0, 1]: normalized = raw / ref.
struct NormalizationMeta {
    double speed_ref = 1.0;  // maximum commanded speed over the corpus
    double time_ref = 1.0;   // total corpus duration

    friend bool operator==(const NormalizationMeta&, const NormalizationMeta&) = default;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline bool finite(double v) noexcept { return std::isfinite(v); }

inline void fail_run(const RunRecord& run, const std::string& what) {
    throw MalformedRunError("run '" + run.run_id + "': " + what);
}

}  // namespace detail

/// Structural checks that hold in raw as well as normalized units: non-empty,
/// uniform strictly increasing time, finite non-negative speeds, utilization in
/// [0, 1] starting at 0 and never decreasing.
inline void check_run(const RunRecord& run) {
    if (run.empty()) throw EmptyInputError("run '" + run.run_id + "' has no samples");
    if (!(run.dt > 0.0) || !detail::finite(run.dt)) detail::fail_run(run, "dt must be positive");

    const double t0 = run.samples.front().t;
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        const Sample& s = run.samples[i];
        if (!detail::finite(s.t) || !detail::finite(s.cmd_speed) || !detail::finite(s.actual_speed) ||
            !detail::finite(s.utilization)) {
            detail::fail_run(run, "non-finite value at index " + std::to_string(i));
        }
        if (i > 0 && !(s.t > run.samples[i - 1].t)) {
            detail::fail_run(run, "time not strictly increasing at index " + std::to_string(i));
        }
        const double expected = t0 + static_cast<double>(i) * run.dt;
        if (std::abs(s.t - expected) > 1e-6 * run.dt + 1e-12 * std::abs(expected)) {
            detail::fail_run(run, "time not uniformly spaced at index " + std::to_string(i));
        }
        if (s.cmd_speed < 0.0 || s.actual_speed < 0.0) {
            detail::fail_run(run, "negative speed at index " + std::to_string(i));
        }
        if (s.utilization < 0.0 || s.utilization > 1.0) {
            detail::fail_run(run, "utilization outside [0,1] at index " + std::to_string(i));
        }
        if (i > 0 && s.utilization < run.samples[i - 1].utilization) {
            detail::fail_run(run, "utilization decreases at index " + std::to_string(i));
        }
    }
    if (run.samples.front().utilization != 0.0) detail::fail_run(run, "utilization must start at 0");
}

/// `check_run` plus commanded speed in [0, 1].
inline void check_normalized_run(const RunRecord& run) {
    check_run(run);
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        if (run.samples[i].cmd_speed > 1.0) {
            detail::fail_run(run, "commanded speed above 1 at index " + std::to_string(i));
        }
    }
}

inline void check_profile(const MissionProfile& profile) {
    if (profile.segments.empty()) throw EmptyInputError("mission profile has no segments");
    if (!(profile.duration > 0.0) || !std::isfinite(profile.duration)) {
        throw MalformedRunError("mission profile duration must be positive");
    }
    if (profile.segments.front().start_time != 0.0) {
        throw MalformedRunError("mission profile must start at t=0");
    }
    for (std::size_t i = 0; i < profile.segments.size(); ++i) {
        const auto& seg = profile.segments[i];
        if (!std::isfinite(seg.cmd_speed) || seg.cmd_speed < 0.0) {
            throw MalformedRunError("mission profile speed invalid at segment " + std::to_string(i));
        }
        if (i > 0 && !(seg.start_time > profile.segments[i - 1].start_time)) {
            throw MalformedRunError("mission profile start times not increasing at segment " + std::to_string(i));
        }
        if (seg.start_time >= profile.duration) {
            throw MalformedRunError("mission profile segment " + std::to_string(i) + " starts after the run ends");
        }
    }
}

// ---------------------------------------------------------------------------
// Features

/// One row per sample. The dwell column counts steps since the last command
/// change (in units of `dt`) and divides by `dwell_scale`; `prev_cmd` is 0
/// until the first change in the run.
inline std::vector<FeatureRow> extract_features(const RunRecord& run, double dwell_scale = 1.0) {
    check_run(run);
    if (!(dwell_scale > 0.0)) throw ConfigError("dwell scale must be positive");

    std::vector<FeatureRow> rows;
    rows.reserve(run.size());
    double prev_cmd = 0.0;
    std::size_t change_idx = 0;
    for (std::size_t i = 0; i < run.size(); ++i) {
        const Sample& s = run.samples[i];
        if (i > 0 && s.cmd_speed != run.samples[i - 1].cmd_speed) {
            prev_cmd = run.samples[i - 1].cmd_speed;
            change_idx = i;
        }
        const double dwell = static_cast<double>(i - change_idx) * run.dt;
        rows.push_back({s.cmd_speed, prev_cmd, dwell / dwell_scale, s.utilization, s.actual_speed});
    }
    return rows;
}

/// Features for a corpus, run by run, so nothing carries across run boundaries.
inline std::vector<FeatureRow> extract_features(const std::vector<RunRecord>& runs, double dwell_scale = 1.0) {
    std::vector<FeatureRow> rows;
    for (const auto& run : runs) {
        auto part = extract_features(run, dwell_scale);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

/// Longest time spent at one command anywhere in the corpus, measured the same
/// way as the dwell feature. Returns 1 when no run holds a command for more
/// than one sample.
inline double max_dwell(const std::vector<RunRecord>& runs) {
    double best = 0.0;
    for (const auto& run : runs) {
        std::size_t change_idx = 0;
        for (std::size_t i = 1; i < run.size(); ++i) {
            if (run.samples[i].cmd_speed != run.samples[i - 1].cmd_speed) change_idx = i;
            best = std::max(best, static_cast<double>(i - change_idx) * run.dt);
        }
    }
    return best > 0.0 ? best : 1.0;
}

// ---------------------------------------------------------------------------
// Normalization

inline RunRecord apply_normalization(const RunRecord& run, const NormalizationMeta& meta) {
    RunRecord out{run.run_id, run.samples, run.dt / meta.time_ref};
    for (auto& s : out.samples) {
        s.t /= meta.time_ref;
        s.cmd_speed /= meta.speed_ref;
        s.actual_speed /= meta.speed_ref;
    }
    return out;
}

inline RunRecord invert_normalization(const RunRecord& run, const NormalizationMeta& meta) {
    RunRecord out{run.run_id, run.samples, run.dt * meta.time_ref};
    for (auto& s : out.samples) {
        s.t *= meta.time_ref;
        s.cmd_speed *= meta.speed_ref;
        s.actual_speed *= meta.speed_ref;
    }
    return out;
}

inline MissionProfile apply_normalization(const MissionProfile& profile, const NormalizationMeta& meta) {
    MissionProfile out = profile;
    out.duration /= meta.time_ref;
    for (auto& seg : out.segments) {
        seg.start_time /= meta.time_ref;
        seg.cmd_speed /= meta.speed_ref;
    }
    return out;
}

/// Reference values for a corpus: the largest commanded speed and the summed
/// run durations.
inline NormalizationMeta fit_normalization(const std::vector<RunRecord>& runs) {
    if (runs.empty()) throw EmptyInputError("cannot normalize an empty corpus");
    double max_cmd = 0.0;
    double total_time = 0.0;
    for (const auto& run : runs) {
        check_run(run);
        for (const auto& s : run.samples) max_cmd = std::max(max_cmd, s.cmd_speed);
        total_time += run.duration();
    }
    if (!(max_cmd > 0.0)) throw DegenerateCorpusError("maximum commanded speed is zero");
    if (!(total_time > 0.0)) throw DegenerateCorpusError("corpus duration is zero");
    return {max_cmd, total_time};
}

/// Speeds divided by the corpus maximum commanded speed, time scaled so the
/// concatenated corpus spans [0, 1].
inline std::pair<std::vector<RunRecord>, NormalizationMeta> normalize(const std::vector<RunRecord>& runs) {
    const NormalizationMeta meta = fit_normalization(runs);
    std::vector<RunRecord> out;
    out.reserve(runs.size());
    for (const auto& run : runs) out.push_back(apply_normalization(run, meta));
    return {std::move(out), meta};
}

// ---------------------------------------------------------------------------
// Profiles

/// First sample index at or after `time` on a grid of spacing `dt`.
inline std::size_t grid_index(double time, double dt) {
    const double x = time / dt;
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::ceil(x));
}

/// Commanded speed on the uniform grid t_i = i*dt, i < round(duration/dt).
inline std::vector<double> expand_profile(const MissionProfile& profile, double dt) {
    check_profile(profile);
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const std::size_t n = grid_index(profile.duration, dt);
    if (n == 0) throw EmptyInputError("mission profile shorter than one timestep");
    std::vector<double> cmd(n);
    std::size_t seg = 0;
    std::size_t next_start =
        profile.segments.size() > 1 ? grid_index(profile.segments[1].start_time, dt) : n;
    for (std::size_t i = 0; i < n; ++i) {
        while (i >= next_start) {
            ++seg;
            next_start = seg + 1 < profile.segments.size() ? grid_index(profile.segments[seg + 1].start_time, dt) : n;
        }
        cmd[i] = profile.segments[seg].cmd_speed;
    }
    return cmd;
}

/// The command history of a recorded run as a profile (segment starts measured
/// from the first sample).
inline MissionProfile profile_of(const RunRecord& run) {
    if (run.empty()) throw EmptyInputError("run '" + run.run_id + "' has no samples");
    MissionProfile p;
    p.duration = run.duration();
    for (std::size_t i = 0; i < run.size(); ++i) {
        if (i == 0 || run.samples[i].cmd_speed != run.samples[i - 1].cmd_speed) {
            p.segments.push_back({static_cast<double>(i) * run.dt, run.samples[i].cmd_speed});
        }
    }
    return p;
}

/// Sample indices at which the command changes, including index 0 (start from
/// rest).
inline std::vector<std::size_t> change_indices(const std::vector<double>& cmd) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cmd.size(); ++i) {
        if (i == 0 || cmd[i] != cmd[i - 1]) idx.push_back(i);
    }
    return idx;
}

/// Every `stride`-th sample starting from the first.
inline RunRecord decimate(const RunRecord& run, std::size_t stride) {
    if (stride == 0) throw ConfigError("stride must be at least 1");
    if (stride == 1) return run;
    RunRecord out{run.run_id, {}, run.dt * static_cast<double>(stride)};
    for (std::size_t i = 0; i < run.size(); i += stride) out.samples.push_back(run.samples[i]);
    return out;
}

}  // namespace nomperf
