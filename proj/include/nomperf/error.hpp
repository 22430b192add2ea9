#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nomperf/trace.hpp"

namespace nomperf {

/// Base of every error the library throws. `kind()` groups errors by how a
/// caller (in particular the CLI) should react to them.
class Error : public std::runtime_error {
public:
    enum class Kind { Usage, Data, Numeric };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Input and configuration problems.
class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& what) : Error(Kind::Usage, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(Kind::Usage, line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

// Data problems.
class MalformedRunError : public Error {
public:
    explicit MalformedRunError(const std::string& what) : Error(Kind::Data, what) {}
};

class DegenerateCorpusError : public Error {
public:
    explicit DegenerateCorpusError(const std::string& what) : Error(Kind::Data, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(Kind::Data, what) {}
};

class LengthMismatchError : public Error {
public:
    explicit LengthMismatchError(const std::string& what) : Error(Kind::Data, what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(Kind::Data, what) {}
};

class VersionError : public FormatError {
public:
    explicit VersionError(const std::string& what) : FormatError(what) {}
};

class ChecksumError : public FormatError {
public:
    explicit ChecksumError(const std::string& what) : FormatError(what) {}
};

class TruncatedError : public FormatError {
public:
    explicit TruncatedError(const std::string& what) : FormatError(what) {}
};

// Numeric problems.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(Kind::Numeric, what) {}
};

/// Raised by a trainer when the objective stops being finite or the trust
/// parameter leaves its guard rails. Carries the last accepted parameters.
class NumericFailure : public NumericError {
public:
    NumericFailure(const std::string& what, std::vector<double> last_good, TrainingTrace trace = {})
        : NumericError(what), last_good_(std::move(last_good)), trace_(std::move(trace)) {}

    [[nodiscard]] const std::vector<double>& last_good() const noexcept { return last_good_; }
    [[nodiscard]] const TrainingTrace& trace() const noexcept { return trace_; }

private:
    std::vector<double> last_good_;
    TrainingTrace trace_;
};

class DivergenceError : public NumericFailure {
public:
    using NumericFailure::NumericFailure;
};

}  // namespace nomperf
