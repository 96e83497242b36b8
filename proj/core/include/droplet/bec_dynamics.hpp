#pragma once

#include <span>
#include <string>
#include <vector>

#include "droplet/optical_feedback.hpp"
#include "droplet/spectral_grid.hpp"
#include "droplet/system_params.hpp"
#include "droplet/trajectory.hpp"

namespace droplet {

/// Complex field Ψ(x̄) on the grid. Normalization convention: the spatial
/// average of |Ψ|² over the window is 1, so the homogeneous state is Ψ ≡ 1.
struct Wavefunction {
    std::vector<Complex> psi;
    static constexpr const char* norm_convention = "mean-density-one";
};

/// Ψ with density A·exp(−(x̄−center)²/width²), normalized to the convention.
/// `width` is the density Gaussian width σ_x̄ (no factor 2 in the exponent).
Wavefunction gaussian_state(const SpectralGrid& grid, double center, double width);

Wavefunction homogeneous_state(const SpectralGrid& grid);

std::vector<double> density_of(const Wavefunction& wf);
double mean_density(const Wavefunction& wf);
void normalize_mean_density(Wavefunction& wf);

/// ∑|Ψ_j|²·dx̄ (the conserved real-time norm).
double norm_integral(const Wavefunction& wf, const SpectralGrid& grid);

enum class TimeMode { RealTime, ImaginaryTime };

struct EvolutionConfig {
    double dt = 1.0;
    double t_final = 0.0;
    int snapshot_stride = 1;  ///< steps between recorded snapshots
    TimeMode mode = TimeMode::RealTime;
    /// Fraction of the window the density peak must stay inside when ā ≠ 0
    /// (the linear potential is discontinuous across the periodic seam).
    double boundary_guard = 0.8;
    IntensityKind track = IntensityKind::BackwardAtBec;
};

/// Strang-split spectral stepper with the optical potential recomputed
/// self-consistently from the instantaneous density at every half-step.
///
/// Real-time step: exp(−i(V−āx̄)dt/2) · exp(−iω̄_r q̄² dt) · exp(−i(V'−āx̄)dt/2)
/// with V' rebuilt from the post-kinetic density. The potential kick leaves
/// the density unchanged, so the cached V' also serves as the next step's
/// first half-kick; the cached scheme is bit-identical to recomputing both
/// halves fresh.
class SplitStepper {
public:
    SplitStepper(const SystemParams& params, const SpectralGrid& grid, Wavefunction psi0);

    void step(double dt);
    /// dt → −i·dt with renormalization to the convention after the kinetic
    /// substep and at the end of the step. ā is taken from params as-is;
    /// ground-state drivers pass params with ā = 0.
    void step_imaginary(double dt);
    /// Strang step under a fixed external potential (frozen-field oracle
    /// tests, pump-off runs). No feedback recomputation.
    void step_frozen(std::span<const double> potential, double dt);

    const Wavefunction& state() const { return psi_; }
    const std::vector<double>& density() const { return density_; }
    /// Optical fields consistent with the current density.
    const OpticalFields& fields();
    double density_sum() const { return density_sum_; }

private:
    void refresh_density();
    void refresh_potential();
    void kick(double dt_half);
    void kick_imaginary(double dt_half);
    void drift(double dt, bool imaginary);

    SystemParams params_;
    SpectralGrid grid_;
    Wavefunction psi_;
    FeedbackCalculator feedback_;
    std::vector<double> density_;
    std::vector<Complex> spectrum_;
    std::vector<Complex> kinetic_phase_;       // exp(−iω̄_r q̄² dt), cached per dt
    std::vector<double> kinetic_decay_;        // exp(−ω̄_r q̄² dt), cached per dt
    double cached_dt_ = 0.0;
    double cached_dt_imag_ = 0.0;
    bool potential_fresh_ = false;
    double density_sum_ = 0.0;
};

/// One self-consistent Strang step as a pure function (the stepper above is
/// the loop-efficient form; both produce identical states).
Wavefunction split_step(const Wavefunction& psi, const SystemParams& params,
                        const SpectralGrid& grid, double dt);

/// Receives the full field state at every recorded snapshot.
class SnapshotSink {
public:
    struct Frame {
        double t;
        std::span<const Complex> psi;
        std::span<const double> density;
        std::span<const double> image_intensity;     ///< |P[F_tr]|², the figure observable
        std::span<const double> backward_intensity;  ///< |B|²
    };

    virtual ~SnapshotSink() = default;
    virtual void on_snapshot(const Frame& frame) = 0;
};

enum class StopReason { Completed, BoundaryGuard, NumericalFailure };

struct EvolveResult {
    TrajectoryRecord record;
    Wavefunction psi_final;
    StopReason stop = StopReason::Completed;
    long steps_done = 0;
    std::string stop_detail;
};

/// Runs real- or imaginary-time evolution to t_final, recording per snapshot
/// the tracked intensity-extremum position (sub-grid), fitted width, and
/// norm. Boundary-guard violations and NaNs stop the run and return the
/// partial record with the reason.
EvolveResult evolve(const Wavefunction& psi0, const SystemParams& params, const SpectralGrid& grid,
                    const EvolutionConfig& config, SnapshotSink* sink = nullptr,
                    WarningLog* log = nullptr);

struct GroundStateOptions {
    double dt = 1.0;
    long max_steps = 400000;
    int check_every = 50;  ///< convergence test cadence, in steps
};

enum class GroundStateOutcome {
    Droplet,      ///< converged to a localized state
    Homogeneous,  ///< converged to the flat state: no droplet solution at this p₀
    NotConverged,
};

struct GroundStateResult {
    Wavefunction psi;
    GroundStateOutcome outcome = GroundStateOutcome::NotConverged;
    long steps = 0;
    double final_change_rate = 0.0;  ///< max pointwise |Δn| per unit imaginary time
};

/// Imaginary-time relaxation with the potential recomputed self-consistently
/// every step and the norm restored after every step. ā is forced to zero
/// (no ground state exists in an unbounded linear potential). Converged when
/// the maximum pointwise density change per unit imaginary time drops
/// below `tol`.
GroundStateResult imaginary_time_ground_state(const Wavefunction& psi0, const SystemParams& params,
                                              const SpectralGrid& grid, double tol,
                                              const GroundStateOptions& options = {},
                                              WarningLog* log = nullptr);

struct EnergyBreakdown {
    double kinetic;      ///< ω̄_r ∑|∂x̄Ψ|² dx̄ (spectral derivative)
    double interaction;  ///< ∑ n·(Δ/4)(p₀+|B|²) dx̄: dipole energy in the self-consistent field
    double total;
};

EnergyBreakdown energy_of(const Wavefunction& wf, const SystemParams& params,
                          const SpectralGrid& grid);

struct DtProbe {
    double dt = 1.0;
    bool converged = false;
    std::vector<std::string> report;  ///< one line per probe comparison
};

/// Automated time-step selection: starting from dt = 1, halve until the
/// short-horizon peak trajectory and width history change by less than 0.1%
/// under another halving.
DtProbe choose_dt(const Wavefunction& psi0, const SystemParams& params, const SpectralGrid& grid,
                  const EvolutionConfig& config, WarningLog* log = nullptr);

}  // namespace droplet
