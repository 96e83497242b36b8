#pragma once

#include <span>
#include <vector>

#include "droplet/spectral_grid.hpp"
#include "droplet/system_params.hpp"

namespace droplet {

/// Physical quantities that anchor the dimensionless model to a lab setup.
struct PhysicalAnchors {
    double lambda0 = 0.0;   ///< optical wavelength [m]
    double d_mirror = 0.0;  ///< BEC–mirror distance [m]
    double gamma = 0.0;     ///< atomic linewidth Γ [1/s]
    double mass = 0.0;      ///< atomic mass [kg]

    void validate() const;
};

struct CriticalScales {
    double q_c;       ///< critical wavenumber [1/m]
    double lambda_c;  ///< pattern period Λ_c = 2π/q_c [m]
};

/// q_c = sqrt(π k₀ / (2 d)) with k₀ = 2π/λ₀.
CriticalScales critical_wavenumber(const PhysicalAnchors& anchors);

/// Dimensionless instability threshold p_th = 2ω̄_r/(b₀ R).
/// R = 0 throws ConfigError ("no instability without feedback").
double pump_threshold(const SystemParams& params);

/// Variational droplet width σ_x̄ = (p₀/p_th)^(−1/4); asymptotic in p₀ ≫ p_th.
/// Throws ConfigError at or below threshold; warns when p₀ < 5·p_th.
double predicted_width(const SystemParams& params, WarningLog* log = nullptr);

/// Least-squares Gaussian fit A·exp(−(x̄−c)²/σ²) around the density peak.
/// Note the width convention: σ² in the denominator with no factor 2.
struct DropletFit {
    double center;
    double width;
    double amplitude;
    double residual;  ///< RMS residual over the fit window
};

DropletFit fit_gaussian(std::span<const double> density, const SpectralGrid& grid);

/// Spontaneous-scattering budget: r_s/Γ = (1+R)p₀/2 and the interrogation
/// limit t̄_limit = 2/((1+R)p₀); ok ⇔ t_final < t̄_limit.
struct HeatingBudget {
    double r_s_over_gamma;
    double t_limit;
    bool ok;
};

HeatingBudget heating_budget(const SystemParams& params, double t_final);

/// One point of a linear-stability scan of the q̄ = 1 mode.
struct ScanPoint {
    double p0;
    double growth_rate;  ///< fitted exponential rate of the q̄=1 density amplitude
    bool grew;           ///< true when the probe crossed 2× its seed (growth branch)
};

/// Evolves homogeneous + probe_amplitude·cos(x̄) at each pump value and
/// extracts the growth/decay rate of the q̄ = 1 density Fourier amplitude by
/// log-linear fit. The grid must contain the q̄ = 1 bin. Growth-branch fits
/// use the window where the amplitude runs from 2× to 20× its seed; modes
/// that never grow are fitted from t̄ = 0 until the amplitude first halves
/// (sub-threshold modes oscillate, so the early slope is negative).
std::vector<ScanPoint> threshold_scan(const SystemParams& params_base,
                                      std::span<const double> p0_values, const SpectralGrid& grid,
                                      double probe_amplitude);

struct PhysicalPoint {
    double x;  ///< [m]
    double t;  ///< [s]
    double a;  ///< [m/s²]
};

/// Unit restoration: x = x̄/q_c, t = t̄/Γ, a = ā·ħq_cΓ/m. Warns when ω̄_r
/// recomputed from the anchors disagrees with params by more than 5%.
PhysicalPoint to_physical(const SystemParams& params, const PhysicalAnchors& anchors, double x_bar,
                          double t_bar, double a_bar, WarningLog* log = nullptr);

}  // namespace droplet
