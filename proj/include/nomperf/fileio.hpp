#pragma once

// Filesystem helpers for the command-line tool: whole-file reads, atomic
// writes, run directories.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nomperf/csv.hpp"
#include "nomperf/domain.hpp"
#include "nomperf/error.hpp"

namespace nomperf {

namespace fs = std::filesystem;

/// Environment variable naming the directory searched for config and scenario
/// files given by relative path.
inline constexpr const char* kConfigDirEnv = "NOMPERF_CONFIG_DIR";

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// `path` itself when it exists, else the same relative path under the
/// config directory from the environment, else `path` unchanged.
inline fs::path resolve_config(const fs::path& path) {
    if (fs::exists(path) || path.is_absolute()) return path;
    if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir) {
        const fs::path alt = fs::path(dir) / path;
        if (fs::exists(alt)) return alt;
    }
    return path;
}

/// Writes every (path, content) pair to a temporary sibling first and renames
/// them into place only after all writes succeeded.
inline void write_files_atomic(const std::vector<std::pair<fs::path, std::string>>& files) {
    std::vector<std::pair<fs::path, fs::path>> staged;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& [tmp, dst] : staged) fs::remove(tmp, ec);
    };
    for (const auto& [path, content] : files) {
        fs::path tmp = path;
        tmp += ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (out) staged.emplace_back(tmp, path);
        out << content;
        out.close();
        if (!out) {
            cleanup();
            throw ConfigError("cannot write '" + path.string() + "'");
        }
    }
    for (const auto& [tmp, dst] : staged) {
        std::error_code ec;
        fs::rename(tmp, dst, ec);
        if (ec) {
            cleanup();
            throw ConfigError("cannot write '" + dst.string() + "': " + ec.message());
        }
    }
}

inline void write_file_atomic(const fs::path& path, const std::string& content) {
    write_files_atomic({{path, content}});
}

inline RunRecord load_run_file(const fs::path& file) {
    std::istringstream in(read_file(file));
    return read_run_csv(in, file.stem().string());
}

/// Every *.csv in `dir`, sorted by file name; run ids are the file stems.
inline std::vector<RunRecord> load_run_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw EmptyInputError("no run CSV files in '" + dir.string() + "'");
    std::vector<RunRecord> runs;
    for (const auto& f : files) runs.push_back(load_run_file(f));
    return runs;
}

}  // namespace nomperf
