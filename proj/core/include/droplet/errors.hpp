#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace droplet {

/// Invalid user-supplied parameter, configuration key, or operation
/// precondition. The message names the offending quantity.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A run was stopped by a physics-validity guard (e.g. the density peak
/// left the trusted central window under acceleration).
class PhysicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown: NaN/Inf in the state, divergent iteration.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A measurement fit failed (no peak, non-convergence, degenerate design).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-fatal diagnostics collected while validating or running. Callers that
/// pass nullptr simply drop them.
using WarningLog = std::vector<std::string>;

inline void warn(WarningLog* log, std::string message) {
    if (log != nullptr) log->push_back(std::move(message));
}

}  // namespace droplet
