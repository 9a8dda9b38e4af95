#pragma once

#include <stdexcept>
#include <string>

namespace tefl {

// Caller passed a structurally invalid argument (bad shape, bad range).
struct InvalidInput : std::invalid_argument {
    explicit InvalidInput(const std::string& msg) : std::invalid_argument(msg) {}
};

// File could not be read/written or held no usable content.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed cell in a CSV input. Row/column are zero-based data coordinates
// (header row excluded).
struct ParseError : std::runtime_error {
    ParseError(std::size_t row, std::size_t col, const std::string& msg)
        : std::runtime_error("row " + std::to_string(row) + ", col " +
                             std::to_string(col) + ": " + msg),
          row(row),
          col(col) {}
    std::size_t row;
    std::size_t col;
};

// Series too short for the requested window/split geometry.
struct NotEnoughData : std::runtime_error {
    explicit NotEnoughData(const std::string& msg) : std::runtime_error(msg) {}
};

// A required past forecast is absent from the prediction log.
struct MissingHistory : std::runtime_error {
    explicit MissingHistory(long long issue_time)
        : std::runtime_error("no forecast issued at t=" +
                             std::to_string(issue_time)),
          issue_time(issue_time) {}
    long long issue_time;
};

// Internal invariant breach: a prediction path touched data at or after the
// prediction time. Always a bug, never a recoverable condition.
struct CausalityViolation : std::logic_error {
    explicit CausalityViolation(const std::string& msg)
        : std::logic_error(msg) {}
};

// Bad key, value, or syntax in a run configuration file.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A statistic that requires variance was asked of a constant sequence.
struct DegenerateVariance : std::runtime_error {
    explicit DegenerateVariance(const std::string& msg)
        : std::runtime_error(msg) {}
};

// A computation produced NaN or infinity.
struct NonFiniteError : std::runtime_error {
    explicit NonFiniteError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tefl
