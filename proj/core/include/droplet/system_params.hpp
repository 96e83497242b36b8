#pragma once

#include "droplet/errors.hpp"

namespace droplet {

/// Dimensionless constants of the BEC / single-mirror-feedback model.
///
/// Time is t̄ = Γt, space is x̄ = q_c·x. The susceptibility χ₀ = b₀/(2Δ) is
/// always derived, never stored.
struct SystemParams {
    double omega_r_bar = 0.0;  ///< dimensionless recoil frequency ω̄_r = ħq_c²/(2mΓ)
    double b0 = 0.0;           ///< resonant optical thickness
    double delta = 0.0;        ///< dimensionless detuning Δ = 2δ/Γ
    double mirror_R = 0.0;     ///< mirror reflectivity in [0, 1]
    double p0 = 0.0;           ///< scaled pump intensity |F(z=0)|²
    double a_bar = 0.0;        ///< dimensionless acceleration ā = ma/(ħ q_c Γ)

    double chi0() const { return b0 / (2.0 * delta); }

    /// Throws ConfigError on hard violations (naming the parameter); appends
    /// regime warnings (far-detuned, low-saturation assumptions) to `log`.
    void validate(WarningLog* log = nullptr) const;
};

}  // namespace droplet
