#pragma once

// Model file: line-oriented text, doubles as hexadecimal floats so a round
// trip is bit-exact. The first line is `nomperf-model <version>`; the last is
// `checksum <hex>`, the FNV-1a 64 hash of every byte before it.
//
//   nomperf-model 1
//   dims <n_in> <n_hidden> <n_out>
//   activation <logistic|tanh>
//   alpha <x>
//   normalization <speed_ref> <time_ref>
//   grid <dt> <dwell_scale> <stride>
//   residuals <mean> <std> <count>
//   speed_average <bin_width> <n_bins>
//   <bin> <sum> <count>                 (n_bins lines)
//   trace <n_entries>
//   <cycle> <error> <grad_norm>         (n_entries lines)
//   params <n>
//   <theta_k>                           (n lines, canonical order)
//   checksum <16 hex digits>

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nomperf/error.hpp"
#include "nomperf/format.hpp"
#include "nomperf/mlp.hpp"
#include "nomperf/pipeline.hpp"

namespace nomperf {

inline constexpr std::string_view kModelMagic = "nomperf-model";
inline constexpr int kModelVersion = 1;

inline std::string save_model(const TrainedArtifact& a) {
    a.model.check();
    std::ostringstream os;
    auto hx = [](double v) { return format_hex_double(v); };
    os << kModelMagic << ' ' << kModelVersion << '\n';
    os << "dims " << a.model.n_in() << ' ' << a.model.n_hidden() << ' ' << a.model.n_out() << '\n';
    os << "activation " << to_string(a.model.activation) << '\n';
    os << "alpha " << hx(a.model.alpha) << '\n';
    os << "normalization " << hx(a.normalization.speed_ref) << ' ' << hx(a.normalization.time_ref) << '\n';
    os << "grid " << hx(a.dt) << ' ' << hx(a.dwell_scale) << ' ' << a.stride << '\n';
    os << "residuals " << hx(a.residuals.mean) << ' ' << hx(a.residuals.std) << ' ' << a.residuals.count << '\n';
    os << "speed_average " << hx(a.speed_average.bin_width()) << ' ' << a.speed_average.bins().size() << '\n';
    for (const auto& [bin, b] : a.speed_average.bins()) os << bin << ' ' << hx(b.sum) << ' ' << b.count << '\n';
    os << "trace " << a.trace.entries.size() << '\n';
    for (const auto& e : a.trace.entries) os << e.cycle << ' ' << hx(e.error) << ' ' << hx(e.grad_norm) << '\n';
    const Vector theta = a.model.flatten();
    os << "params " << theta.size() << '\n';
    for (Eigen::Index k = 0; k < theta.size(); ++k) os << hx(theta[k]) << '\n';
    std::string body = os.str();
    body += "checksum " + hex_u64(fnv1a64(body)) + '\n';
    return body;
}

namespace detail {

class ModelReader {
public:
    explicit ModelReader(std::string_view text) : text_(text) {}

    bool next_line(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        const auto nl = text_.find('\n', pos_);
        if (nl == std::string_view::npos) {
            line = text_.substr(pos_);
            pos_ = text_.size();
        } else {
            line = text_.substr(pos_, nl - pos_);
            pos_ = nl + 1;
        }
        ++lineno_;
        return true;
    }

    /// Fields of the next line, which must start with `key` (when non-empty)
    /// and have exactly `count` fields after it.
    std::vector<std::string_view> fields(std::string_view key, std::size_t count) {
        std::string_view line;
        if (!next_line(line)) throw TruncatedError("model file ends early");
        std::vector<std::string_view> out;
        std::size_t p = 0;
        while (p < line.size()) {
            const auto sp = line.find(' ', p);
            out.push_back(line.substr(p, sp == std::string_view::npos ? std::string_view::npos : sp - p));
            if (sp == std::string_view::npos) break;
            p = sp + 1;
        }
        if (!key.empty()) {
            if (out.empty() || out.front() != key) fail("expected '" + std::string(key) + "'");
            out.erase(out.begin());
        }
        if (out.size() != count) fail("wrong number of fields");
        return out;
    }

    double hex(std::string_view s) {
        auto v = parse_hex_double(s);
        if (!v) fail("bad number '" + std::string(s) + "'");
        return *v;
    }

    template <class Int>
    Int integer(std::string_view s) {
        auto v = parse_int<Int>(s);
        if (!v) fail("bad integer '" + std::string(s) + "'");
        return *v;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("model file line " + std::to_string(lineno_) + ": " + what);
    }

    [[nodiscard]] bool at_end() const noexcept { return pos_ >= text_.size(); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int lineno_ = 0;
};

}  // namespace detail

/// Parses a model file. Checks, in order: magic and version, presence of the
/// checksum line, the checksum itself, then the payload.
inline TrainedArtifact load_model(std::string_view text) {
    const auto first_nl = text.find('\n');
    const std::string_view head = text.substr(0, first_nl);
    if (head.substr(0, kModelMagic.size()) != kModelMagic || head.size() <= kModelMagic.size() + 1 ||
        head[kModelMagic.size()] != ' ') {
        throw FormatError("not a model file");
    }
    const auto version = parse_int<int>(head.substr(kModelMagic.size() + 1));
    if (!version) throw FormatError("model file has a bad version tag");
    if (*version != kModelVersion) {
        throw VersionError("unsupported model file version " + std::to_string(*version) + " (expected " +
                           std::to_string(kModelVersion) + ")");
    }

    constexpr std::string_view kTag = "checksum ";
    if (text.empty() || text.back() != '\n') throw TruncatedError("model file is truncated");
    const auto tail_start = text.rfind('\n', text.size() - 2);
    const std::size_t cs_pos = tail_start == std::string_view::npos ? 0 : tail_start + 1;
    const std::string_view tail = text.substr(cs_pos, text.size() - 1 - cs_pos);
    if (tail.substr(0, kTag.size()) != kTag) throw TruncatedError("model file has no checksum line");
    const std::string_view stored = tail.substr(kTag.size());
    const std::string_view body = text.substr(0, cs_pos);
    if (stored != hex_u64(fnv1a64(body))) throw ChecksumError("model file checksum mismatch");

    detail::ModelReader rd(body);
    std::string_view line;
    rd.next_line(line);
    TrainedArtifact a;
    auto dims = rd.fields("dims", 3);
    const auto n_in = rd.integer<Eigen::Index>(dims[0]);
    const auto n_hidden = rd.integer<Eigen::Index>(dims[1]);
    const auto n_out = rd.integer<Eigen::Index>(dims[2]);
    if (n_in < 1 || n_hidden < 1 || n_out < 1) rd.fail("bad dimensions");
    auto act = parse_activation(rd.fields("activation", 1)[0]);
    if (!act) rd.fail("unknown activation");
    const double alpha = rd.hex(rd.fields("alpha", 1)[0]);
    a.model = MlpModel::zeros(n_in, n_hidden, n_out, *act, alpha);

    auto norm = rd.fields("normalization", 2);
    a.normalization = {rd.hex(norm[0]), rd.hex(norm[1])};
    auto grid = rd.fields("grid", 3);
    a.dt = rd.hex(grid[0]);
    a.dwell_scale = rd.hex(grid[1]);
    a.stride = rd.integer<std::size_t>(grid[2]);
    auto res = rd.fields("residuals", 3);
    a.residuals = {rd.hex(res[0]), rd.hex(res[1]), rd.integer<std::uint64_t>(res[2])};

    auto sa = rd.fields("speed_average", 2);
    a.speed_average = SpeedAverageTable(rd.hex(sa[0]));
    const auto n_bins = rd.integer<std::size_t>(sa[1]);
    for (std::size_t i = 0; i < n_bins; ++i) {
        auto b = rd.fields("", 3);
        a.speed_average.bins()[rd.integer<long>(b[0])] = {rd.hex(b[1]), rd.integer<std::uint64_t>(b[2])};
    }

    const auto n_trace = rd.integer<std::size_t>(rd.fields("trace", 1)[0]);
    a.trace.entries.reserve(n_trace);
    for (std::size_t i = 0; i < n_trace; ++i) {
        auto e = rd.fields("", 3);
        a.trace.entries.push_back({rd.integer<int>(e[0]), rd.hex(e[1]), rd.hex(e[2])});
    }

    const auto n_params = rd.integer<Eigen::Index>(rd.fields("params", 1)[0]);
    if (n_params != a.model.param_count()) rd.fail("parameter count does not match the dimensions");
    Vector theta(n_params);
    for (Eigen::Index k = 0; k < n_params; ++k) theta[k] = rd.hex(rd.fields("", 1)[0]);
    if (!rd.at_end()) rd.fail("unexpected content after the parameters");
    a.model.set_params(theta);
    a.model.check();
    if (!(a.normalization.speed_ref > 0.0) || !(a.normalization.time_ref > 0.0) || !(a.dt > 0.0) ||
        !(a.dwell_scale > 0.0) || a.stride < 1) {
        throw FormatError("model file has invalid scale factors");
    }
    return a;
}

}  // namespace nomperf
