#pragma once

// Versioned `key = value` text files. `#` starts a comment; blank lines are
// ignored; the first setting must be `version = N`. Every diagnostic carries
// the 1-based line number of the offending line.

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "nomperf/error.hpp"
#include "nomperf/format.hpp"

namespace nomperf {

class KvFile {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    /// Parses `in`. `kind` names the file type in diagnostics.
    static KvFile parse(std::istream& in, std::string kind, int expected_version) {
        KvFile f;
        f.kind_ = std::move(kind);
        std::string raw;
        int lineno = 0;
        bool have_version = false;
        while (std::getline(in, raw)) {
            ++lineno;
            std::string_view line = raw;
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError(f.kind_ + ": expected 'key = value'", lineno);
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty()) throw ConfigError(f.kind_ + ": empty key", lineno);
            if (!have_version) {
                if (key != "version") throw ConfigError(f.kind_ + ": first setting must be 'version'", lineno);
                auto v = parse_int<int>(value);
                if (!v) throw ConfigError(f.kind_ + ": bad version '" + value + "'", lineno);
                if (*v != expected_version) {
                    throw ConfigError(f.kind_ + ": unsupported version " + value + " (expected " +
                                          std::to_string(expected_version) + ")",
                                      lineno);
                }
                have_version = true;
                continue;
            }
            if (f.entries_.count(key)) throw ConfigError(f.kind_ + ": duplicate key '" + key + "'", lineno);
            f.entries_[key] = {value, lineno};
        }
        if (!have_version) throw ConfigError(f.kind_ + ": missing 'version' setting", lineno > 0 ? lineno : 1);
        return f;
    }

    /// Rejects keys outside `known`.
    void check_keys(const std::set<std::string>& known) const {
        for (const auto& [k, e] : entries_) {
            if (!known.count(k)) throw ConfigError(kind_ + ": unknown key '" + k + "'", e.line);
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

    void get(const std::string& key, double& out) const {
        if (auto* e = find(key)) {
            auto v = parse_double(e->value);
            if (!v) throw ConfigError(kind_ + ": '" + key + "' expects a number, got '" + e->value + "'", e->line);
            out = *v;
        }
    }

    template <class Int>
        requires std::is_integral_v<Int>
    void get(const std::string& key, Int& out) const {
        if (auto* e = find(key)) {
            auto v = parse_int<Int>(e->value);
            if (!v) throw ConfigError(kind_ + ": '" + key + "' expects an integer, got '" + e->value + "'", e->line);
            out = *v;
        }
    }

    void get(const std::string& key, bool& out) const {
        if (auto* e = find(key)) {
            if (e->value == "true" || e->value == "1") {
                out = true;
            } else if (e->value == "false" || e->value == "0") {
                out = false;
            } else {
                throw ConfigError(kind_ + ": '" + key + "' expects true/false", e->line);
            }
        }
    }

    void get(const std::string& key, std::string& out) const {
        if (auto* e = find(key)) out = e->value;
    }

    void get(const std::string& key, std::vector<double>& out) const {
        if (auto* e = find(key)) {
            out.clear();
            for (const auto& item : split_list(e->value)) {
                auto v = parse_double(item);
                if (!v) throw ConfigError(kind_ + ": '" + key + "' has a bad list entry '" + item + "'", e->line);
                out.push_back(*v);
            }
        }
    }

    void get(const std::string& key, std::vector<std::string>& out) const {
        if (auto* e = find(key)) out = split_list(e->value);
    }

    [[nodiscard]] int line_of(const std::string& key) const {
        auto* e = find(key);
        return e ? e->line : 0;
    }

    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

    static std::vector<std::string> split_list(std::string_view s) {
        std::vector<std::string> out;
        std::size_t pos = 0;
        while (pos <= s.size()) {
            auto comma = s.find(',', pos);
            auto item = trim(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
            if (!item.empty()) out.emplace_back(item);
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return out;
    }

private:
    [[nodiscard]] const Entry* find(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }

    std::string kind_;
    std::map<std::string, Entry> entries_;
};

/// Builds a `key = value` document in insertion order.
class KvWriter {
public:
    KvWriter(std::string_view title, int version) {
        out_ << "# " << title << '\n' << "version = " << version << '\n';
    }

    KvWriter& put(std::string_view key, double v) { return line(key, format_double(v)); }
    KvWriter& put(std::string_view key, bool v) { return line(key, v ? "true" : "false"); }
    KvWriter& put(std::string_view key, std::string_view v) { return line(key, v); }
    KvWriter& put(std::string_view key, const char* v) { return line(key, v); }

    template <class Int>
        requires(std::is_integral_v<Int> && !std::is_same_v<Int, bool>)
    KvWriter& put(std::string_view key, Int v) {
        return line(key, std::to_string(v));
    }

    KvWriter& put(std::string_view key, const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
        return line(key, s);
    }

    KvWriter& put(std::string_view key, const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return line(key, s);
    }

    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    KvWriter& line(std::string_view key, std::string_view value) {
        out_ << key << " = " << value << '\n';
        return *this;
    }

    std::ostringstream out_;
};

}  // namespace nomperf
