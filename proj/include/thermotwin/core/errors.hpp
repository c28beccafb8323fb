#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace thermotwin {

enum class ErrorKind {
    shape,
    parameter,
    span_mismatch,
    numeric,
    integration,
    singularity,
    empty_model,
    divergence,
    combinatorics,
    insufficient_data,
    instability,
    data,
    manifest,
    config,
    io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. `kind()` is the machine-readable category; `time()`
/// carries the simulation time for integration and divergence failures.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::optional<double> time = std::nullopt)
        : std::runtime_error(message), kind_(kind), time_(time) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<double> time() const noexcept { return time_; }

private:
    ErrorKind kind_;
    std::optional<double> time_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              std::optional<double> time = std::nullopt) {
    throw Error(kind, message, time);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

}  // namespace thermotwin
