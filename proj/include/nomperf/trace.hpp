#pragma once

#include <ostream>
#include <vector>

#include "nomperf/format.hpp"

namespace nomperf {

struct TraceEntry {
    int cycle = 0;
    double error = 0.0;
    double grad_norm = 0.0;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// Objective value recorded once per accepted optimizer cycle (SCG) or per
/// epoch (SGD).
struct TrainingTrace {
    std::vector<TraceEntry> entries;

    [[nodiscard]] bool empty() const noexcept { return entries.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }

    friend bool operator==(const TrainingTrace&, const TrainingTrace&) = default;
};

/// CSV with header `cycle,error,grad_norm`.
inline void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
    out << "cycle,error,grad_norm\n";
    for (const auto& e : trace.entries) {
        out << e.cycle << ',' << format_double(e.error) << ',' << format_double(e.grad_norm) << '\n';
    }
}

}  // namespace nomperf
