#include <gtest/gtest.h>

#include <sstream>

#include "nomperf/report_io.hpp"
#include "nomperf/svg.hpp"

using namespace nomperf;

namespace {

EvalReport sample_report() {
    RunRecord run{"run_007", {}, 0.5};
    const double actual[] = {0.1, 0.25, 0.3, 1.0 / 3.0};
    for (int i = 0; i < 4; ++i) run.samples.push_back({0.5 * i, 0.3, actual[i], 0.01 * i});
    PredictionTrace p;
    for (int i = 0; i < 4; ++i) {
        p.t.push_back(0.5 * i);
        p.cmd_speed.push_back(0.3);
        p.predicted_speed.push_back(0.2 + 0.01 * i);
        p.utilization.push_back(0.0);
    }
    EvalReport r = evaluate(run, {{"ann", p}, {"setpoint", baseline_setpoint({{{0.0, 0.3}}, 2.0}, 0.5)}});
    r.flags.push_back({1, 2, 0.07, "ann"});
    return r;
}

}  // namespace

TEST(ReportJson, RoundTripIsExact) {
    const EvalReport r = sample_report();
    const std::string text = to_json_text(r);
    const EvalReport back = parse_report(text);
    EXPECT_EQ(back, r);
    EXPECT_EQ(to_json_text(back), text);
}

TEST(ReportJson, SameReportSameBytes) {
    EXPECT_EQ(to_json_text(sample_report()), to_json_text(sample_report()));
}

TEST(ReportJson, CarriesFormatVersionAndSummary) {
    const auto j = nlohmann::json::parse(to_json_text(sample_report()));
    EXPECT_EQ(j["format"], "nomperf-report");
    EXPECT_EQ(j["version"], 1);
    EXPECT_EQ(j["methods"][1]["method"], "setpoint");
    EXPECT_EQ(j["methods"][0]["summary"]["final_accumulated"].get<double>(),
              sample_report().methods[0].final_accumulated);
}

TEST(ReportJson, BadDocuments) {
    EXPECT_THROW(parse_report("{"), FormatError);
    EXPECT_THROW(parse_report("[]"), FormatError);
    auto j = nlohmann::json::parse(to_json_text(sample_report()));
    j["version"] = 2;
    EXPECT_THROW(parse_report(j.dump()), VersionError);
    j = nlohmann::json::parse(to_json_text(sample_report()));
    j["t"] = nlohmann::json::array();
    j["cmd_speed"] = nlohmann::json::array();
    j["actual_speed"] = nlohmann::json::array();
    j["methods"] = nlohmann::json::array();
    j["flags"] = nlohmann::json::array();
    EXPECT_THROW(parse_report(j.dump()), FormatError);
    j = nlohmann::json::parse(to_json_text(sample_report()));
    j["methods"][0]["residual"].erase(0);
    EXPECT_THROW(parse_report(j.dump()), FormatError);
    j = nlohmann::json::parse(to_json_text(sample_report()));
    j["flags"][0]["end_idx"] = 9;
    EXPECT_THROW(parse_report(j.dump()), FormatError);
    j = nlohmann::json::parse(to_json_text(sample_report()));
    j.erase("dt");
    EXPECT_THROW(parse_report(j.dump()), FormatError);
}

TEST(FlagsCsv, Layout) {
    std::ostringstream os;
    write_flags_csv(os, {{3, 9, 0.5, "ann"}, {20, 20, 0.125, "ann"}});
    EXPECT_EQ(os.str(), "start_idx,end_idx,peak_residual\n3,9,0.5\n20,20,0.125\n");
}

TEST(Plot, CsvColumnsAreTheReportArrays) {
    const EvalReport r = sample_report();
    const PlotFiles f = render_report(r);
    std::ostringstream want;
    want << "t,cmd_speed,actual_speed,ann,setpoint\n";
    for (std::size_t i = 0; i < r.size(); ++i) {
        want << format_double(r.t[i]) << ',' << format_double(r.cmd_speed[i]) << ','
             << format_double(r.actual_speed[i]) << ',' << format_double(r.methods[0].predicted[i]) << ','
             << format_double(r.methods[1].predicted[i]) << '\n';
    }
    EXPECT_EQ(f.overlay_csv, want.str());
    std::istringstream acc(f.accumulated_csv);
    std::string header, last;
    std::getline(acc, header);
    EXPECT_EQ(header, "t,ann,setpoint");
    for (std::string line; std::getline(acc, line);) last = line;
    EXPECT_EQ(last, format_double(r.t.back()) + ',' + format_double(r.methods[0].final_accumulated) + ',' +
                        format_double(r.methods[1].final_accumulated));
}

TEST(Plot, SvgHasOneLinePerSeries) {
    const PlotFiles f = render_report(sample_report());
    auto count = [](const std::string& s, const std::string& needle) {
        std::size_t n = 0;
        for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
        return n;
    };
    EXPECT_EQ(f.overlay_svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(count(f.overlay_svg, "<polyline"), 4u);
    EXPECT_EQ(count(f.accumulated_svg, "<polyline"), 2u);
    EXPECT_NE(f.overlay_svg.find("run_007"), std::string::npos);
    EXPECT_NE(f.overlay_svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(render_report(sample_report()).overlay_svg, f.overlay_svg);
}

TEST(Plot, PolylinePointsFollowTheData) {
    // Two points spanning the whole plot: x from left edge to right edge, y from bottom to top.
    const std::string svg = line_chart_svg("t", "x", "y", {0.0, 1.0}, {{"s", {0.0, 1.0}}});
    const auto p = svg.find("points=\"");
    ASSERT_NE(p, std::string::npos);
    const std::string pts = svg.substr(p + 8, svg.find('"', p + 8) - p - 8);
    // Plot area: x in [70, 730]; y bottom at 370, top 40 with 5% headroom on the data range.
    const double top = 370.0 - 1.0 / 1.05 * 330.0;
    char want[64];
    std::snprintf(want, sizeof want, "70.00,370.00 730.00,%.2f", top);
    EXPECT_EQ(pts, want);
}

TEST(Plot, TitlesAreEscaped) {
    const std::string svg = line_chart_svg("a<b & c", "x", "y", {0.0, 1.0}, {{"s", {0.0, 1.0}}});
    EXPECT_NE(svg.find("a&lt;b &amp; c"), std::string::npos);
}
