#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "droplet/bec_dynamics.hpp"
#include "droplet/spectral_grid.hpp"
#include "droplet/system_params.hpp"
#include "droplet/trajectory.hpp"

namespace droplet {

/// Sub-cell offset of a parabola through three equidistant samples, in units
/// of the sample spacing. Exact on exact parabolas; zero for y₋ = y₊.
double parabolic_offset(double y_minus, double y_center, double y_plus);

/// Position of the tracked intensity extremum, refined to sub-grid precision
/// by a three-point parabolic fit. detuning_sign < 0 tracks the maximum
/// (red detuning), detuning_sign > 0 the minimum. With a prior the nearest
/// local extremum is taken; without one the global extremum, which throws
/// FitError when a second extremum lies within 10% of its prominence.
/// Constant intensity throws FitError ("no trackable extremum").
double locate_extremum(std::span<const double> intensity, const SpectralGrid& grid,
                       int detuning_sign, std::optional<double> prior_position = std::nullopt);

/// Quadratic trajectory fit x̄(t̄) = c₀ + c₁t̄ + c₂t̄² and the acceleration it
/// implies through x̄ = ω̄_r·ā·t̄².
struct AccelEstimate {
    double a_bar_hat = 0.0;      ///< c₂/ω̄_r
    double gradient = 0.0;       ///< c₂/(2π): slope of x̄/Λ̄_c against t̄²
    double velocity_term = 0.0;  ///< c₁ (diagnostic; ≈0 for a clean release)
    double rms_residual = 0.0;
    std::array<std::array<double, 3>, 3> covariance{};  ///< of (c₀, c₁, c₂)
    double a_min_detectable = 0.0;  ///< dx/(ω̄_r·t̄_max²) at this duration
    bool reliable = true;
    std::string note;
};

/// Linear least squares on the basis {1, t̄, t̄²} (time pre-scaled to [0,1]
/// for conditioning). Throws FitError for <10 samples, NaN positions, or a
/// degenerate design; flags the estimate unreliable when the displacement is
/// below one grid cell ("insufficient baseline") or the residual exceeds a
/// grid cell.
AccelEstimate fit_trajectory(const TrajectoryRecord& record, const SystemParams& params,
                             double dx_resolution);

struct SenseOptions {
    double seed_center = 0.0;
    double seed_width = 0.0;  ///< 0 → predicted droplet width
    double relax_tol = 1e-6;
    GroundStateOptions relax;
    /// When set, relaxation is skipped and evolution starts from this state
    /// (used for feedback-off diagnostics where no ground state exists).
    std::optional<Wavefunction> initial_state;
};

struct SenseResult {
    AccelEstimate estimate;
    EvolveResult evolution;  ///< record, final state, stop reason
    GroundStateOutcome relax_outcome = GroundStateOutcome::Droplet;
    long relax_steps = 0;
};

/// End-to-end sensing pipeline: relax to the droplet ground state at ā = 0,
/// evolve with the configured ā, track the optical extremum per snapshot,
/// fit the trajectory. Tracking failure or a weak baseline yields an
/// unreliable (never fabricated) estimate.
SenseResult sense(const SystemParams& params, const SpectralGrid& grid,
                  const EvolutionConfig& config, const SenseOptions& options = {},
                  SnapshotSink* sink = nullptr, WarningLog* log = nullptr);

}  // namespace droplet
