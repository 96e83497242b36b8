#pragma once

#include <span>
#include <vector>

#include "droplet/spectral_grid.hpp"
#include "droplet/system_params.hpp"

namespace droplet {

/// The instantaneous optical state slaved to one BEC density profile.
struct OpticalFields {
    std::vector<Complex> f_trans;    ///< forward field at the BEC exit plane, |F_tr|² ≡ p₀
    std::vector<Complex> b_field;    ///< backward field at the BEC after the mirror round trip
    std::vector<double> potential;   ///< dipole term (Δ/4)(p₀ + |B|²)
};

/// Thin-cloud phase mask: F_tr(x̄) = √p₀ · exp(−i χ₀ n(x̄)).
/// Rejects negative density entries (an upstream normalization bug).
std::vector<Complex> transmitted_field(std::span<const double> density, const SystemParams& params);

/// Mirror round trip in q-space: B = F⁻¹[√R · exp(−i(π/2)q̄²) · F[F_tr]].
/// The quadratic phase is the Talbot-type converter of phase modulation into
/// amplitude modulation; its magnitude at q̄ = 1 is exactly π/2.
std::vector<Complex> backward_field(std::span<const Complex> f_trans, const SystemParams& params,
                                    const SpectralGrid& grid);

/// One free-space diffraction step of an arbitrary field (the image-plane
/// propagator, same quadratic phase as the mirror round trip, no √R).
std::vector<Complex> propagate_image(std::span<const Complex> field, const SpectralGrid& grid);

/// Assembles F_tr, B and the dipole potential for a density profile.
/// |F_tr|² enters the potential as exactly p₀ (phase-mask identity).
OpticalFields dipole_potential(std::span<const double> density, const SystemParams& params,
                               const SpectralGrid& grid);

/// Allocation-free form of dipole_potential for the integrator hot loop.
/// Holds scratch buffers; one instance per evolution, not shared.
class FeedbackCalculator {
public:
    FeedbackCalculator(const SystemParams& params, const SpectralGrid& grid);

    /// Recomputes the internal OpticalFields from `density`.
    void update(std::span<const double> density);

    const OpticalFields& fields() const { return fields_; }
    const std::vector<double>& potential() const { return fields_.potential; }

    /// |B(x̄)|² of the current fields.
    std::vector<double> backward_intensity() const;
    /// |P[F_tr](x̄)|² of the current fields (one extra diffraction step).
    std::vector<double> image_intensity() const;

private:
    const SystemParams params_;
    const SpectralGrid grid_;
    std::vector<Complex> mirror_phase_;  ///< √R · exp(−i(π/2)q̄²) per bin
    std::vector<Complex> spectrum_;
    OpticalFields fields_;
};

}  // namespace droplet
