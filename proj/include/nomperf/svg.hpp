#pragma once

// Static line charts for reports: the command/measured/predicted overlay and
// the accumulated-error comparison, each with the CSV it was drawn from.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "nomperf/format.hpp"
#include "nomperf/predict.hpp"

namespace nomperf {

struct Series {
    std::string name;
    std::vector<double> y;
};

namespace detail {

inline const char* series_color(std::size_t i) {
    static const char* kColors[] = {"#1f3a93", "#111111", "#c0392b", "#27ae60", "#8e44ad", "#d35400"};
    return kColors[i % (sizeof kColors / sizeof *kColors)];
}

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// About five round tick values covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) out.push_back(v);
    return out;
}

}  // namespace detail

/// One chart, x shared by every series.
inline std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  const std::vector<double>& x, const std::vector<Series>& series) {
    constexpr double W = 900, H = 420, L = 70, R = 170, T = 40, B = 50;
    double xlo = x.empty() ? 0.0 : x.front(), xhi = x.empty() ? 1.0 : x.back();
    double ylo = 0.0, yhi = 0.0;
    for (const auto& s : series) {
        for (double v : s.y) {
            if (std::isfinite(v)) {
                ylo = std::min(ylo, v);
                yhi = std::max(yhi, v);
            }
        }
    }
    if (!(xhi > xlo)) xhi = xlo + 1.0;
    if (!(yhi > ylo)) yhi = ylo + 1.0;
    yhi += 0.05 * (yhi - ylo);
    auto px = [&](double v) { return L + (v - xlo) / (xhi - xlo) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - ylo) / (yhi - ylo) * (H - T - B); };
    using detail::fixed2;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::xml_escape(title)
       << "</text>\n";
    os << "<g stroke=\"#cccccc\" stroke-width=\"0.5\">\n";
    for (double v : detail::ticks(ylo, yhi)) {
        os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << fixed2(py(v)) << "\" y2=\"" << fixed2(py(v))
           << "\"/>\n";
    }
    os << "</g>\n<g text-anchor=\"end\">\n";
    for (double v : detail::ticks(ylo, yhi)) {
        os << "<text x=\"" << L - 6 << "\" y=\"" << fixed2(py(v) + 4) << "\">" << format_double(std::round(v * 1e6) / 1e6)
           << "</text>\n";
    }
    os << "</g>\n<g text-anchor=\"middle\">\n";
    for (double v : detail::ticks(xlo, xhi)) {
        os << "<text x=\"" << fixed2(px(v)) << "\" y=\"" << H - B + 18 << "\">"
           << format_double(std::round(v * 1e6) / 1e6) << "</text>\n";
    }
    os << "</g>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
       << detail::xml_escape(x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
       << detail::xml_escape(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        os << "<polyline fill=\"none\" stroke=\"" << detail::series_color(k) << "\" stroke-width=\"1.2\" points=\"";
        const auto& y = series[k].y;
        for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
            if (!std::isfinite(y[i])) continue;
            os << (i ? " " : "") << fixed2(px(x[i])) << ',' << fixed2(py(y[i]));
        }
        os << "\"/>\n";
        const double ly = T + 16 + 18 * static_cast<double>(k);
        os << "<line x1=\"" << W - R + 12 << "\" x2=\"" << W - R + 36 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
           << "\" stroke=\"" << detail::series_color(k) << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 42 << "\" y=\"" << ly << "\">" << detail::xml_escape(series[k].name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// CSV with an x column followed by one column per series.
inline std::string series_csv(const std::string& x_name, const std::vector<double>& x,
                              const std::vector<Series>& series) {
    std::ostringstream os;
    os << x_name;
    for (const auto& s : series) os << ',' << s.name;
    os << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) {
        os << format_double(x[i]);
        for (const auto& s : series) os << ',' << format_double(s.y[i]);
        os << '\n';
    }
    return os.str();
}

inline std::vector<Series> overlay_series(const EvalReport& r) {
    std::vector<Series> s{{"cmd_speed", r.cmd_speed}, {"actual_speed", r.actual_speed}};
    for (const auto& m : r.methods) s.push_back({m.method, m.predicted});
    return s;
}

inline std::vector<Series> accumulated_series(const EvalReport& r) {
    std::vector<Series> s;
    for (const auto& m : r.methods) s.push_back({m.method, m.accumulated});
    return s;
}

struct PlotFiles {
    std::string overlay_svg, overlay_csv, accumulated_svg, accumulated_csv;
};

inline PlotFiles render_report(const EvalReport& r) {
    const auto ov = overlay_series(r);
    const auto acc = accumulated_series(r);
    const std::string title = r.run_id.empty() ? std::string("run") : r.run_id;
    return {line_chart_svg(title + ": commanded, measured and predicted speed", "t", "speed", r.t, ov),
            series_csv("t", r.t, ov),
            line_chart_svg(title + ": accumulated error", "t", "accumulated |predicted - measured|", r.t, acc),
            series_csv("t", r.t, acc)};
}

}  // namespace nomperf
