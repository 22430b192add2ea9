#pragma once

// Non-network predictors used as reference points for the network.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "nomperf/domain.hpp"
#include "nomperf/error.hpp"

namespace nomperf {

inline constexpr double kDefaultBinWidth = 0.05;

/// Mean measured speed per commanded-speed bin over a set of runs. Bin b holds
/// commands in [b*w, (b+1)*w). Queries that land in an empty bin fall back to
/// the commanded speed itself.
class SpeedAverageTable {
public:
    struct Bin {
        double sum = 0.0;
        std::uint64_t count = 0;

        friend bool operator==(const Bin&, const Bin&) = default;
    };

    SpeedAverageTable() = default;

    explicit SpeedAverageTable(double bin_width) : bin_width_(bin_width) {
        if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw ConfigError("bin width must be positive");
    }

    static SpeedAverageTable fit(const std::vector<RunRecord>& runs, double bin_width = kDefaultBinWidth) {
        if (runs.empty()) throw EmptyInputError("speed-average baseline needs at least one training run");
        SpeedAverageTable t(bin_width);
        for (const auto& run : runs) {
            for (const auto& s : run.samples) t.add(s.cmd_speed, s.actual_speed);
        }
        return t;
    }

    void add(double cmd, double actual) {
        Bin& b = bins_[bin_of(cmd)];
        b.sum += actual;
        ++b.count;
    }

    [[nodiscard]] long bin_of(double cmd) const {
        // The small nudge keeps grid speeds such as 0.5/0.05 in their nominal bin.
        return static_cast<long>(std::floor(cmd / bin_width_ + 1e-9));
    }

    [[nodiscard]] double predict(double cmd) const {
        auto it = bins_.find(bin_of(cmd));
        if (it == bins_.end() || it->second.count == 0) return cmd;
        return it->second.sum / static_cast<double>(it->second.count);
    }

    [[nodiscard]] double bin_width() const noexcept { return bin_width_; }
    [[nodiscard]] const std::map<long, Bin>& bins() const noexcept { return bins_; }
    std::map<long, Bin>& bins() noexcept { return bins_; }

    friend bool operator==(const SpeedAverageTable&, const SpeedAverageTable&) = default;

private:
    double bin_width_ = kDefaultBinWidth;
    std::map<long, Bin> bins_;
};

}  // namespace nomperf
