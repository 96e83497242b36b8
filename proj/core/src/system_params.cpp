#include "droplet/system_params.hpp"

#include <cmath>
#include <string>

namespace droplet {

void SystemParams::validate(WarningLog* log) const {
    if (!(omega_r_bar > 0.0)) {
        throw ConfigError("params.omega_r_bar must be > 0 (got " + std::to_string(omega_r_bar) + ")");
    }
    if (!(b0 > 0.0)) {
        throw ConfigError("params.b0 must be > 0 (got " + std::to_string(b0) + ")");
    }
    if (delta == 0.0 || !std::isfinite(delta)) {
        throw ConfigError("params.delta must be finite and nonzero");
    }
    if (!(mirror_R >= 0.0 && mirror_R <= 1.0)) {
        throw ConfigError("params.mirror_R must lie in [0, 1] (got " + std::to_string(mirror_R) + ")");
    }
    if (!(p0 >= 0.0)) {
        throw ConfigError("params.p0 must be >= 0 (got " + std::to_string(p0) + ")");
    }
    if (!std::isfinite(a_bar)) {
        throw ConfigError("params.a_bar must be finite");
    }

    if (std::abs(delta) < 100.0) {
        warn(log, "params.delta: |Δ| = " + std::to_string(std::abs(delta)) +
                      " < 100; the far-detuned (ground-state atoms) assumption is marginal");
    }
    if (p0 * (1.0 + mirror_R) >= 0.1) {
        warn(log, "params.p0: p₀(1+R) = " + std::to_string(p0 * (1.0 + mirror_R)) +
                      " >= 0.1; saturation parameters are not small, the low-saturation "
                      "model is outside its validity range");
    }
}

}  // namespace droplet
