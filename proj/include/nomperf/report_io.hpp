#pragma once

// EvalReport as JSON, flagged intervals as CSV.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nomperf/error.hpp"
#include "nomperf/format.hpp"
#include "nomperf/predict.hpp"

namespace nomperf {

inline constexpr std::string_view kReportFormat = "nomperf-report";
inline constexpr int kReportVersion = 1;
inline constexpr std::string_view kFlagsCsvHeader = "start_idx,end_idx,peak_residual";

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["format"] = kReportFormat;
    j["version"] = kReportVersion;
    j["run_id"] = r.run_id;
    j["dt"] = r.dt;
    j["t"] = r.t;
    j["cmd_speed"] = r.cmd_speed;
    j["actual_speed"] = r.actual_speed;
    j["methods"] = nlohmann::ordered_json::array();
    for (const auto& m : r.methods) {
        nlohmann::ordered_json jm;
        jm["method"] = m.method;
        jm["summary"] = {{"mean_residual", m.mean_residual},
                         {"max_residual", m.max_residual},
                         {"final_accumulated", m.final_accumulated}};
        jm["predicted"] = m.predicted;
        jm["residual"] = m.residual;
        jm["accumulated"] = m.accumulated;
        j["methods"].push_back(std::move(jm));
    }
    j["flags"] = nlohmann::ordered_json::array();
    for (const auto& f : r.flags) {
        j["flags"].push_back(
            {{"start_idx", f.start_idx}, {"end_idx", f.end_idx}, {"peak_residual", f.peak_residual}, {"method", f.method}});
    }
    return j;
}

inline std::string to_json_text(const EvalReport& r) { return report_to_json(r).dump(1) + "\n"; }

/// Parses and validates a report. Every array must have one entry per step
/// and the report must have at least one step.
inline EvalReport parse_report(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report is not valid JSON: ") + e.what());
    }
    EvalReport r;
    try {
        if (!j.is_object() || j.value("format", "") != kReportFormat) throw FormatError("not a report file");
        const int version = j.at("version").get<int>();
        if (version != kReportVersion) {
            throw VersionError("unsupported report version " + std::to_string(version));
        }
        r.run_id = j.at("run_id").get<std::string>();
        r.dt = j.at("dt").get<double>();
        r.t = j.at("t").get<std::vector<double>>();
        r.cmd_speed = j.at("cmd_speed").get<std::vector<double>>();
        r.actual_speed = j.at("actual_speed").get<std::vector<double>>();
        for (const auto& jm : j.at("methods")) {
            MethodEval m;
            m.method = jm.at("method").get<std::string>();
            const auto& s = jm.at("summary");
            m.mean_residual = s.at("mean_residual").get<double>();
            m.max_residual = s.at("max_residual").get<double>();
            m.final_accumulated = s.at("final_accumulated").get<double>();
            m.predicted = jm.at("predicted").get<std::vector<double>>();
            m.residual = jm.at("residual").get<std::vector<double>>();
            m.accumulated = jm.at("accumulated").get<std::vector<double>>();
            r.methods.push_back(std::move(m));
        }
        for (const auto& jf : j.at("flags")) {
            r.flags.push_back({jf.at("start_idx").get<std::size_t>(), jf.at("end_idx").get<std::size_t>(),
                               jf.at("peak_residual").get<double>(), jf.at("method").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("report is missing a field or has a wrong type: ") + e.what());
    }
    const std::size_t n = r.t.size();
    if (n == 0) throw FormatError("report has no steps");
    if (r.cmd_speed.size() != n || r.actual_speed.size() != n) throw FormatError("report arrays differ in length");
    for (const auto& m : r.methods) {
        if (m.predicted.size() != n || m.residual.size() != n || m.accumulated.size() != n) {
            throw FormatError("report arrays for method '" + m.method + "' differ in length");
        }
    }
    for (const auto& f : r.flags) {
        if (f.start_idx > f.end_idx || f.end_idx >= n) throw FormatError("report has a flag outside the run");
    }
    return r;
}

inline void write_flags_csv(std::ostream& out, const std::vector<FlaggedInterval>& flags) {
    out << kFlagsCsvHeader << '\n';
    for (const auto& f : flags) out << f.start_idx << ',' << f.end_idx << ',' << format_double(f.peak_residual) << '\n';
}

}  // namespace nomperf
