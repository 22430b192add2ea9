#pragma once

// Synthetic qualification runs.
//
// Profiles are piecewise-constant commands on a speed grid: a low-speed start,
// then a sequence of motifs. A staircase motif drops to the lowest speed and
// climbs one grid step at a time with short holds, ending in a full-speed
// plateau; otherwise the command jumps to a random other grid speed and holds.
//
// The plant is a first-order lag toward a target speed. Downward changes split
// the gap into a fast part (time constant tau_v) and a slow settling part.
// At full command the target is capped once utilization passes u_crit, some
// runs lose speed late in the run, and moderate upward steps sometimes
// overshoot. A rise to full command closes its last part slowly (the plant is
// short of power near top speed). Utilization integrates c * v^3. All times
// are in raw units of the sample spacing dt.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <istream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nomperf/domain.hpp"
#include "nomperf/error.hpp"
#include "nomperf/format.hpp"
#include "nomperf/kv.hpp"

namespace nomperf {

struct ScenarioConfig {
    int n_runs = 20;
    long run_steps = 3239;
    long corpus_steps = 0;  // when positive, split exactly over the runs instead of run_steps
    double dt = 1.0;
    std::vector<double> speed_grid{0.2, 0.4, 0.6, 0.8, 1.0};
    double staircase_prob = 0.35;
    double dwell_min = 250.0;
    double dwell_max = 700.0;
    double stair_dwell_min = 60.0;
    double stair_dwell_max = 120.0;
    double tau_v = 50.0;
    double decel_drop_frac = 0.7;    // share of a downward step taken at tau_v
    double decel_settle_tau = 250.0; // time constant of the remainder
    double top_creep_frac = 0.0;     // share of a rise to full command taken at top_creep_tau
    double top_creep_tau = 400.0;
    double u_crit = 0.0;
    double undershoot_slope = 0.2;
    double overshoot_prob = 0.3;
    double overshoot_mag = 0.05;
    double overshoot_max_step = 0.4;
    double fade_prob = 0.1;
    double fade_start = 0.7;
    double fade_slope = 0.3;
    double noise_std = 0.01;
    double burn_coeff = 6e-4;
    std::uint64_t seed = 42;

    [[nodiscard]] double max_speed() const { return *std::max_element(speed_grid.begin(), speed_grid.end()); }

    /// Samples in run `index`.
    [[nodiscard]] long steps_for_run(int index) const {
        if (corpus_steps <= 0) return run_steps;
        const long base = corpus_steps / n_runs;
        const long extra = corpus_steps % n_runs;
        return base + (index < extra ? 1 : 0);
    }

    void check() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (n_runs < 0) throw ConfigError("n_runs must be non-negative");
        if (run_steps < 0 || corpus_steps < 0) throw ConfigError("run length must be non-negative");
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (speed_grid.empty()) throw ConfigError("speed_grid must not be empty");
        for (std::size_t i = 0; i < speed_grid.size(); ++i) {
            if (!(speed_grid[i] > 0.0 && speed_grid[i] <= 1.0)) throw ConfigError("speed_grid entries must be in (0,1]");
            if (i > 0 && !(speed_grid[i] > speed_grid[i - 1])) throw ConfigError("speed_grid must be increasing");
        }
        if (!prob(staircase_prob) || !prob(overshoot_prob) || !prob(fade_prob) || !prob(decel_drop_frac) ||
            !prob(top_creep_frac)) {
            throw ConfigError("probabilities and fractions must be in [0,1]");
        }
        if (!(dwell_min > 0.0 && dwell_max >= dwell_min)) throw ConfigError("bad dwell range");
        if (!(stair_dwell_min > 0.0 && stair_dwell_max >= stair_dwell_min)) throw ConfigError("bad staircase dwell range");
        if (!(tau_v > 0.0) || !(decel_settle_tau > 0.0) || !(top_creep_tau > 0.0)) throw ConfigError("time constants must be positive");
        if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
        if (!(burn_coeff >= 0.0)) throw ConfigError("burn_coeff must be non-negative");
        if (!(undershoot_slope >= 0.0) || !(overshoot_mag >= 0.0) || !(fade_slope >= 0.0)) {
            throw ConfigError("effect magnitudes must be non-negative");
        }
    }
};

inline constexpr int kScenarioVersion = 1;

inline std::string to_text(const ScenarioConfig& c) {
    KvWriter w("nomperf scenario", kScenarioVersion);
    w.put("n_runs", c.n_runs)
        .put("run_steps", c.run_steps)
        .put("corpus_steps", c.corpus_steps)
        .put("dt", c.dt)
        .put("speed_grid", c.speed_grid)
        .put("staircase_prob", c.staircase_prob)
        .put("dwell_min", c.dwell_min)
        .put("dwell_max", c.dwell_max)
        .put("stair_dwell_min", c.stair_dwell_min)
        .put("stair_dwell_max", c.stair_dwell_max)
        .put("tau_v", c.tau_v)
        .put("decel_drop_frac", c.decel_drop_frac)
        .put("decel_settle_tau", c.decel_settle_tau)
        .put("top_creep_frac", c.top_creep_frac)
        .put("top_creep_tau", c.top_creep_tau)
        .put("u_crit", c.u_crit)
        .put("undershoot_slope", c.undershoot_slope)
        .put("overshoot_prob", c.overshoot_prob)
        .put("overshoot_mag", c.overshoot_mag)
        .put("overshoot_max_step", c.overshoot_max_step)
        .put("fade_prob", c.fade_prob)
        .put("fade_start", c.fade_start)
        .put("fade_slope", c.fade_slope)
        .put("noise_std", c.noise_std)
        .put("burn_coeff", c.burn_coeff)
        .put("seed", c.seed);
    return w.str();
}

/// Reads a scenario file; settings not present keep their defaults.
inline ScenarioConfig parse_scenario(std::istream& in) {
    const KvFile f = KvFile::parse(in, "scenario", kScenarioVersion);
    f.check_keys({"n_runs", "run_steps", "corpus_steps", "dt", "speed_grid", "staircase_prob", "dwell_min", "dwell_max",
                  "stair_dwell_min", "stair_dwell_max", "tau_v", "decel_drop_frac", "decel_settle_tau", "top_creep_frac",
                  "top_creep_tau", "u_crit",
                  "undershoot_slope", "overshoot_prob", "overshoot_mag", "overshoot_max_step", "fade_prob",
                  "fade_start", "fade_slope", "noise_std", "burn_coeff", "seed"});
    ScenarioConfig c;
    f.get("n_runs", c.n_runs);
    f.get("run_steps", c.run_steps);
    f.get("corpus_steps", c.corpus_steps);
    f.get("dt", c.dt);
    f.get("speed_grid", c.speed_grid);
    f.get("staircase_prob", c.staircase_prob);
    f.get("dwell_min", c.dwell_min);
    f.get("dwell_max", c.dwell_max);
    f.get("stair_dwell_min", c.stair_dwell_min);
    f.get("stair_dwell_max", c.stair_dwell_max);
    f.get("tau_v", c.tau_v);
    f.get("decel_drop_frac", c.decel_drop_frac);
    f.get("decel_settle_tau", c.decel_settle_tau);
    f.get("top_creep_frac", c.top_creep_frac);
    f.get("top_creep_tau", c.top_creep_tau);
    f.get("u_crit", c.u_crit);
    f.get("undershoot_slope", c.undershoot_slope);
    f.get("overshoot_prob", c.overshoot_prob);
    f.get("overshoot_mag", c.overshoot_mag);
    f.get("overshoot_max_step", c.overshoot_max_step);
    f.get("fade_prob", c.fade_prob);
    f.get("fade_start", c.fade_start);
    f.get("fade_slope", c.fade_slope);
    f.get("noise_std", c.noise_std);
    f.get("burn_coeff", c.burn_coeff);
    f.get("seed", c.seed);
    try {
        c.check();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return c;
}

/// The reference scenario: 20 runs, 64,779 samples in total.
inline ScenarioConfig canonical_scenario() {
    ScenarioConfig c;
    c.corpus_steps = 64779;
    return c;
}

/// Same plant, every motif a staircase.
inline ScenarioConfig staircase_scenario() {
    ScenarioConfig c = canonical_scenario();
    c.staircase_prob = 1.0;
    return c;
}

inline std::uint64_t scenario_hash(const ScenarioConfig& c) { return fnv1a64(to_text(c)); }

/// Seed for run `index` of a corpus generated from `seed`.
inline std::uint64_t run_seed(std::uint64_t seed, int index) {
    return mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(index) + 1));
}

// ---------------------------------------------------------------------------

/// Profile lasting `steps` samples of spacing cfg.dt.
inline MissionProfile generate_profile(const ScenarioConfig& cfg, long steps, std::mt19937_64& rng) {
    cfg.check();
    if (steps <= 0) throw ConfigError("profile duration must be positive");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int grid = static_cast<int>(cfg.speed_grid.size());
    auto draw_steps = [&](double lo, double hi) {
        const double d = lo + (hi - lo) * unit(rng);
        return std::max(1L, std::lround(d / cfg.dt));
    };

    MissionProfile p;
    p.duration = static_cast<double>(steps) * cfg.dt;
    long at = 0;
    int cur = static_cast<int>(unit(rng) * ((grid + 1) / 2));
    cur = std::min(cur, (grid + 1) / 2 - 1);
    auto push = [&](int idx, long hold) {
        if (at >= steps) return;
        if (p.segments.empty() || p.segments.back().cmd_speed != cfg.speed_grid[idx]) {
            p.segments.push_back({static_cast<double>(at) * cfg.dt, cfg.speed_grid[idx]});
        }
        cur = idx;
        at += hold;
    };
    push(cur, draw_steps(cfg.dwell_min, cfg.dwell_max));
    while (at < steps) {
        if (grid > 1 && unit(rng) < cfg.staircase_prob) {
            if (cur != 0) push(0, draw_steps(cfg.dwell_min, cfg.dwell_max));
            for (int idx = 1; idx < grid; ++idx) {
                const bool top = idx == grid - 1;
                push(idx, top ? draw_steps(cfg.dwell_min, cfg.dwell_max)
                              : draw_steps(cfg.stair_dwell_min, cfg.stair_dwell_max));
            }
        } else if (grid > 1) {
            int next = static_cast<int>(unit(rng) * (grid - 1));
            next = std::min(next, grid - 2);
            if (next >= cur) ++next;
            push(next, draw_steps(cfg.dwell_min, cfg.dwell_max));
        } else {
            at = steps;
        }
    }
    return p;
}

/// Plant response to `profile`. Noise-free speed is clamped to [0,1] after
/// measurement noise is added.
inline RunRecord simulate_run(const MissionProfile& profile, const ScenarioConfig& cfg, std::mt19937_64& rng,
                              std::string run_id = "run") {
    cfg.check();
    const std::vector<double> cmd = expand_profile(profile, cfg.dt);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double vmax = cfg.max_speed();
    const bool fades = cfg.fade_prob > 0.0 && unit(rng) < cfg.fade_prob;

    auto target = [&](double c, double u) {
        double t = c;
        if (c >= vmax && u > cfg.u_crit) t = std::min(t, c - cfg.undershoot_slope * (u - cfg.u_crit));
        if (fades && u > cfg.fade_start) t -= cfg.fade_slope * (u - cfg.fade_start) * c;
        return std::max(t, 0.0);
    };

    RunRecord run;
    run.run_id = std::move(run_id);
    run.dt = cfg.dt;
    run.samples.reserve(cmd.size());

    double u = 0.0;
    double v = 0.0;            // plant speed, noise-free
    double dev_fast = 0.0;     // deviation from target at the last change
    double dev_slow = 0.0;
    double slow_tau = cfg.decel_settle_tau;
    bool overshoot = false;
    std::size_t change = 0;
    for (std::size_t i = 0; i < cmd.size(); ++i) {
        const bool changed = i == 0 || cmd[i] != cmd[i - 1];
        if (changed) {
            const double prev_cmd = i == 0 ? 0.0 : cmd[i - 1];
            const double gap = v - target(cmd[i], u);
            if (cmd[i] < prev_cmd) {
                dev_fast = cfg.decel_drop_frac * gap;
                dev_slow = (1.0 - cfg.decel_drop_frac) * gap;
                slow_tau = cfg.decel_settle_tau;
            } else if (cmd[i] > prev_cmd && cmd[i] >= vmax) {
                dev_fast = (1.0 - cfg.top_creep_frac) * gap;
                dev_slow = cfg.top_creep_frac * gap;
                slow_tau = cfg.top_creep_tau;
            } else {
                dev_fast = gap;
                dev_slow = 0.0;
            }
            overshoot = i > 0 && cmd[i] > prev_cmd && cmd[i] - prev_cmd <= cfg.overshoot_max_step + 1e-12 &&
                        cmd[i] < vmax && cfg.overshoot_prob > 0.0 && unit(rng) < cfg.overshoot_prob;
            change = i;
        }
        const double since = static_cast<double>(i - change) * cfg.dt;
        v = target(cmd[i], u) + dev_fast * std::exp(-since / cfg.tau_v) + dev_slow * std::exp(-since / slow_tau);
        if (overshoot) {
            const double s = (since - 2.0 * cfg.tau_v) / cfg.tau_v;
            if (s > 0.0 && s < 1.0) v += cfg.overshoot_mag * cmd[i] * std::sin(std::numbers::pi * s) * std::exp(-s);
        }
        v = std::clamp(v, 0.0, 1.0);
        double measured = v;
        if (cfg.noise_std > 0.0) measured += cfg.noise_std * noise(rng);
        run.samples.push_back({static_cast<double>(i) * cfg.dt, cmd[i], std::clamp(measured, 0.0, 1.0), u});
        u = std::min(1.0, u + cfg.burn_coeff * v * v * v * cfg.dt);
    }
    return run;
}

/// `cfg.n_runs` runs named run_000, run_001, ...; run i uses run_seed(cfg.seed, i).
inline std::vector<RunRecord> generate_corpus(const ScenarioConfig& cfg) {
    cfg.check();
    std::vector<RunRecord> runs;
    for (int i = 0; i < cfg.n_runs; ++i) {
        std::mt19937_64 rng(run_seed(cfg.seed, i));
        char id[32];
        std::snprintf(id, sizeof id, "run_%03d", i);
        const long steps = cfg.steps_for_run(i);
        if (steps <= 0) throw ConfigError("run length must be positive");
        MissionProfile profile = generate_profile(cfg, steps, rng);
        runs.push_back(simulate_run(profile, cfg, rng, id));
    }
    return runs;
}

}  // namespace nomperf
