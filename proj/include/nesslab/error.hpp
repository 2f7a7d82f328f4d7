#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nesslab {

enum class ErrorKind {
    invalid_input,
    unsupported_configuration,
    integration_diverged,
    pinning_required,
    zero_mode,
    supercritical_drive,
    insufficient_data,
    insufficient_negative_events,
    missing_moments,
    invalid_profile,
    configuration,
    io,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. Every thrown error carries a category so the CLI
/// can map it onto an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Thrown by the integrators when the state stops being finite.
class DivergenceError : public Error {
public:
    DivergenceError(std::uint64_t step, const std::string& what)
        : Error(ErrorKind::integration_diverged, what), step_(step) {}

    std::uint64_t step() const noexcept { return step_; }

private:
    std::uint64_t step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace nesslab
