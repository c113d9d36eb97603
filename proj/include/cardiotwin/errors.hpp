#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cardiotwin {

/// Invalid parameter sets, malformed files, out-of-range configuration.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical blowup during integration. Carries the step at which the state
/// first went non-finite so callers can report or skip the run.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_index(step) {}

    std::size_t step_index;
};

/// Training failures: divergent loss, inconsistent dataset shapes.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

/// Parameter recovery failures: degenerate input, ill-conditioned rows.
class RecoveryError : public std::runtime_error {
public:
    explicit RecoveryError(const std::string& what) : std::runtime_error(what) {}
};

/// Unreadable or unwritable artifact files.
class FileError : public std::runtime_error {
public:
    explicit FileError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cardiotwin
