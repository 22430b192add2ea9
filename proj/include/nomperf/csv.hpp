#pragma once

// Run CSV:     t,cmd_speed,actual_speed,utilization   (one row per timestep)
// Profile CSV: t,cmd_speed                            (one row per command change)
//
// A profile file ends with a marker row whose speed repeats the previous row;
// its time is the run duration. Files written here always carry the marker.

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nomperf/domain.hpp"
#include "nomperf/format.hpp"

namespace nomperf {

inline constexpr std::string_view kRunCsvHeader = "t,cmd_speed,actual_speed,utilization";
inline constexpr std::string_view kProfileCsvHeader = "t,cmd_speed";

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in, std::string_view header,
                                                         const std::string& what) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != header) {
        throw FormatError(what + ": expected header '" + std::string(header) + "'");
    }
    const std::size_t width = split_commas(header).size();
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(trim(line));
        if (fields.size() != width) {
            throw FormatError(what + ": line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                              " fields");
        }
        std::vector<double> row;
        for (auto f : fields) {
            auto v = parse_double(f);
            if (!v) throw FormatError(what + ": line " + std::to_string(lineno) + ": bad number '" + std::string(f) + "'");
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

/// Parses a run CSV. dt is taken from the mean spacing of the time column
/// (1 for a single-sample run); the result is checked with `check_run`.
inline RunRecord read_run_csv(std::istream& in, std::string run_id) {
    const auto rows = detail::read_numeric_csv(in, kRunCsvHeader, "run '" + run_id + "'");
    RunRecord run;
    run.run_id = std::move(run_id);
    for (const auto& r : rows) run.samples.push_back({r[0], r[1], r[2], r[3]});
    if (run.samples.size() > 1) {
        run.dt = (run.samples.back().t - run.samples.front().t) / static_cast<double>(run.samples.size() - 1);
    }
    check_run(run);
    return run;
}

inline void write_run_csv(std::ostream& out, const RunRecord& run) {
    out << kRunCsvHeader << '\n';
    for (const auto& s : run.samples) {
        out << format_double(s.t) << ',' << format_double(s.cmd_speed) << ',' << format_double(s.actual_speed) << ','
            << format_double(s.utilization) << '\n';
    }
}

/// Parses a profile CSV. Without an end marker row the duration must be
/// supplied.
inline MissionProfile read_profile_csv(std::istream& in, std::optional<double> duration = std::nullopt) {
    const auto rows = detail::read_numeric_csv(in, kProfileCsvHeader, "profile");
    MissionProfile p;
    for (const auto& r : rows) p.segments.push_back({r[0], r[1]});
    if (p.segments.size() >= 2 && p.segments.back().cmd_speed == p.segments[p.segments.size() - 2].cmd_speed) {
        p.duration = p.segments.back().start_time;
        p.segments.pop_back();
    }
    if (duration) p.duration = *duration;
    if (p.duration == 0.0) throw FormatError("profile: no end marker row and no duration given");
    check_profile(p);
    return p;
}

inline void write_profile_csv(std::ostream& out, const MissionProfile& profile) {
    out << kProfileCsvHeader << '\n';
    for (const auto& seg : profile.segments) {
        out << format_double(seg.start_time) << ',' << format_double(seg.cmd_speed) << '\n';
    }
    if (!profile.segments.empty()) {
        out << format_double(profile.duration) << ',' << format_double(profile.segments.back().cmd_speed) << '\n';
    }
}

inline std::string to_csv(const RunRecord& run) {
    std::ostringstream os;
    write_run_csv(os, run);
    return os.str();
}

}  // namespace nomperf
