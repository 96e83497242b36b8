#include "droplet/bec_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "droplet/accel_sensing.hpp"
#include "droplet/droplet_analysis.hpp"
#include "droplet/errors.hpp"

namespace droplet {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Wavefunction gaussian_state(const SpectralGrid& grid, double center, double width) {
    if (!(width > 0.0)) throw ConfigError("seed.width must be > 0");
    Wavefunction wf;
    wf.psi.resize(grid.n_points());
    for (int j = 0; j < grid.n_points(); ++j) {
        const double u = (grid.x()[j] - center) / width;
        wf.psi[j] = std::exp(-0.5 * u * u);  // density carries exp(−u²)
    }
    normalize_mean_density(wf);
    return wf;
}

Wavefunction homogeneous_state(const SpectralGrid& grid) {
    Wavefunction wf;
    wf.psi.assign(grid.n_points(), Complex(1.0, 0.0));
    return wf;
}

std::vector<double> density_of(const Wavefunction& wf) {
    std::vector<double> n(wf.psi.size());
    for (size_t j = 0; j < n.size(); ++j) n[j] = std::norm(wf.psi[j]);
    return n;
}

double mean_density(const Wavefunction& wf) {
    if (wf.psi.empty()) throw ConfigError("empty wavefunction");
    double s = 0.0;
    for (const auto& v : wf.psi) s += std::norm(v);
    return s / static_cast<double>(wf.psi.size());
}

void normalize_mean_density(Wavefunction& wf) {
    const double mean = mean_density(wf);
    if (!(mean > 0.0)) throw NumericalError("cannot normalize a zero wavefunction");
    const double scale = 1.0 / std::sqrt(mean);
    for (auto& v : wf.psi) v *= scale;
}

double norm_integral(const Wavefunction& wf, const SpectralGrid& grid) {
    double s = 0.0;
    for (const auto& v : wf.psi) s += std::norm(v);
    return s * grid.dx();
}

// ---------------------------------------------------------------------------
// SplitStepper

SplitStepper::SplitStepper(const SystemParams& params, const SpectralGrid& grid, Wavefunction psi0)
    : params_(params), grid_(grid), psi_(std::move(psi0)), feedback_(params, grid) {
    if (psi_.psi.size() != static_cast<size_t>(grid_.n_points())) {
        throw ConfigError("wavefunction length does not match grid.n_points");
    }
    density_.resize(grid_.n_points());
    spectrum_.resize(grid_.n_points());
    refresh_density();
    refresh_potential();
}

void SplitStepper::refresh_density() {
    double sum = 0.0;
    for (size_t j = 0; j < density_.size(); ++j) {
        density_[j] = std::norm(psi_.psi[j]);
        sum += density_[j];
    }
    density_sum_ = sum;
}

void SplitStepper::refresh_potential() {
    feedback_.update(density_);
    potential_fresh_ = true;
}

void SplitStepper::kick(double dt_half) {
    const auto& v = feedback_.potential();
    const auto& x = grid_.x();
    const double a = params_.a_bar;
    for (size_t j = 0; j < psi_.psi.size(); ++j) {
        const double phase = -(v[j] - a * x[j]) * dt_half;
        psi_.psi[j] *= Complex(std::cos(phase), std::sin(phase));
    }
}

void SplitStepper::kick_imaginary(double dt_half) {
    const auto& v = feedback_.potential();
    const auto& x = grid_.x();
    const double a = params_.a_bar;
    for (size_t j = 0; j < psi_.psi.size(); ++j) {
        psi_.psi[j] *= std::exp(-(v[j] - a * x[j]) * dt_half);
    }
}

void SplitStepper::drift(double dt, bool imaginary) {
    const auto& q = grid_.q();
    if (imaginary) {
        if (dt != cached_dt_imag_ || kinetic_decay_.empty()) {
            kinetic_decay_.resize(grid_.n_points());
            for (int k = 0; k < grid_.n_points(); ++k) {
                kinetic_decay_[k] = std::exp(-params_.omega_r_bar * q[k] * q[k] * dt);
            }
            cached_dt_imag_ = dt;
        }
        grid_.to_spectrum(psi_.psi, spectrum_);
        for (int k = 0; k < grid_.n_points(); ++k) spectrum_[k] *= kinetic_decay_[k];
        grid_.from_spectrum(spectrum_, psi_.psi);
    } else {
        if (dt != cached_dt_ || kinetic_phase_.empty()) {
            kinetic_phase_.resize(grid_.n_points());
            for (int k = 0; k < grid_.n_points(); ++k) {
                const double phase = -params_.omega_r_bar * q[k] * q[k] * dt;
                kinetic_phase_[k] = Complex(std::cos(phase), std::sin(phase));
            }
            cached_dt_ = dt;
        }
        grid_.to_spectrum(psi_.psi, spectrum_);
        for (int k = 0; k < grid_.n_points(); ++k) spectrum_[k] *= kinetic_phase_[k];
        grid_.from_spectrum(spectrum_, psi_.psi);
    }
}

void SplitStepper::step(double dt) {
    if (!(dt > 0.0)) throw ConfigError("evolution.dt must be > 0");
    if (!potential_fresh_) {
        refresh_density();
        refresh_potential();
    }
    kick(0.5 * dt);
    drift(dt, /*imaginary=*/false);
    refresh_density();
    refresh_potential();
    kick(0.5 * dt);
    // The final kick is a pure phase: density_ and the cached potential stay
    // consistent with the state, so the next step reuses them.
}

void SplitStepper::step_imaginary(double dt) {
    if (!(dt > 0.0)) throw ConfigError("imaginary-time dt must be > 0");
    if (!potential_fresh_) {
        refresh_density();
        refresh_potential();
    }
    kick_imaginary(0.5 * dt);
    drift(dt, /*imaginary=*/true);
    normalize_mean_density(psi_);
    refresh_density();
    refresh_potential();
    kick_imaginary(0.5 * dt);
    normalize_mean_density(psi_);
    refresh_density();
    potential_fresh_ = false;  // the final kick rescaled the density
}

void SplitStepper::step_frozen(std::span<const double> potential, double dt) {
    if (potential.size() != static_cast<size_t>(grid_.n_points())) {
        throw ConfigError("frozen potential length does not match grid.n_points");
    }
    auto kick_external = [&](double dt_half) {
        for (size_t j = 0; j < psi_.psi.size(); ++j) {
            const double phase = -potential[j] * dt_half;
            psi_.psi[j] *= Complex(std::cos(phase), std::sin(phase));
        }
    };
    kick_external(0.5 * dt);
    drift(dt, /*imaginary=*/false);
    kick_external(0.5 * dt);
    refresh_density();
    potential_fresh_ = false;
}

const OpticalFields& SplitStepper::fields() {
    if (!potential_fresh_) {
        refresh_density();
        refresh_potential();
    }
    return feedback_.fields();
}

Wavefunction split_step(const Wavefunction& psi, const SystemParams& params,
                        const SpectralGrid& grid, double dt) {
    SplitStepper stepper(params, grid, psi);
    stepper.step(dt);
    return stepper.state();
}

// ---------------------------------------------------------------------------
// evolve

namespace {

std::vector<double> intensity_of(std::span<const Complex> field) {
    std::vector<double> out(field.size());
    for (size_t j = 0; j < out.size(); ++j) out[j] = std::norm(field[j]);
    return out;
}

double wrap_to_window(double d, double length) {
    while (d > 0.5 * length) d -= length;
    while (d <= -0.5 * length) d += length;
    return d;
}

}  // namespace

EvolveResult evolve(const Wavefunction& psi0, const SystemParams& params, const SpectralGrid& grid,
                    const EvolutionConfig& config, SnapshotSink* sink, WarningLog* log) {
    params.validate(log);
    if (!(config.dt > 0.0)) throw ConfigError("evolution.dt must be > 0");
    if (!(config.t_final > 0.0)) throw ConfigError("evolution.t_final must be > 0");
    if (config.snapshot_stride < 1) throw ConfigError("evolution.snapshot_stride must be >= 1");
    if (!(config.boundary_guard > 0.0 && config.boundary_guard < 1.0)) {
        throw ConfigError("evolution.boundary_guard must lie in (0, 1)");
    }
    if (std::abs(mean_density(psi0) - 1.0) > 1e-6) {
        warn(log, "evolve: initial state deviates from the mean-density-one convention by " +
                      std::to_string(std::abs(mean_density(psi0) - 1.0)));
    }

    const long steps_total = std::max<long>(1, std::llround(config.t_final / config.dt));
    if (std::abs(steps_total * config.dt - config.t_final) >
        1e-9 * std::max(1.0, config.t_final)) {
        warn(log, "evolve: t_final adjusted to " + std::to_string(steps_total * config.dt) +
                      " (= " + std::to_string(steps_total) + " whole steps of dt)");
    }

    SplitStepper stepper(params, grid, psi0);
    const bool imaginary = (config.mode == TimeMode::ImaginaryTime);
    const bool guard_on = (params.a_bar != 0.0) && !imaginary;
    const double guard_limit = config.boundary_guard * 0.5 * grid.length();
    const int detuning_sign = (params.delta < 0.0) ? -1 : +1;

    EvolveResult result;
    result.record.intensity_kind = config.track;

    bool have_prior = false;
    double prior_wrapped = 0.0;
    double unwrapped = 0.0;

    auto take_snapshot = [&](double t) {
        const auto& fields = stepper.fields();
        const auto& density = stepper.density();
        std::vector<double> backward = intensity_of(fields.b_field);
        std::vector<double> image;
        const bool need_image = (sink != nullptr) || config.track == IntensityKind::ImagePlaneForward;
        if (need_image) image = intensity_of(propagate_image(fields.f_trans, grid));
        const std::vector<double>& tracked =
            (config.track == IntensityKind::BackwardAtBec) ? backward : image;

        double position = kNaN;
        try {
            std::optional<double> prior;
            if (have_prior) {
                prior = prior_wrapped;
            } else {
                // Seed the tracker at the density peak.
                const auto it = std::max_element(density.begin(), density.end());
                prior = grid.x()[std::distance(density.begin(), it)];
            }
            const double located = locate_extremum(tracked, grid, detuning_sign, prior);
            if (have_prior) {
                const double d = wrap_to_window(located - prior_wrapped, grid.length());
                if (std::abs(d) >= std::numbers::pi && result.record.tracking_ok) {
                    result.record.tracking_ok = false;
                    result.record.tracking_note =
                        "extremum jumped by " + std::to_string(std::abs(d)) +
                        " (>= half a critical wavelength) between snapshots at t̄ = " +
                        std::to_string(t);
                }
                unwrapped += d;
            } else {
                unwrapped = located;
                have_prior = true;
            }
            prior_wrapped = located;
            position = unwrapped;
        } catch (const FitError& e) {
            if (result.record.tracking_ok) {
                result.record.tracking_ok = false;
                result.record.tracking_note =
                    std::string(e.what()) + " (first failed at t̄ = " + std::to_string(t) + ")";
            }
        }

        double width = kNaN;
        try {
            width = fit_gaussian(density, grid).width;
        } catch (const FitError&) {
            // Width is a diagnostic; a failed fit leaves a NaN column entry.
        }

        result.record.times.push_back(t);
        result.record.peak_positions.push_back(position);
        result.record.widths.push_back(width);
        result.record.norms.push_back(stepper.density_sum() * grid.dx());

        if (sink != nullptr) {
            SnapshotSink::Frame frame;
            frame.t = t;
            frame.psi = stepper.state().psi;
            frame.density = density;
            frame.image_intensity = image;
            frame.backward_intensity = backward;
            sink->on_snapshot(frame);
        }
    };

    take_snapshot(0.0);

    for (long step = 1; step <= steps_total; ++step) {
        try {
            if (imaginary) {
                stepper.step_imaginary(config.dt);
            } else {
                stepper.step(config.dt);
            }
        } catch (const NumericalError& e) {
            result.steps_done = step;
            result.stop = StopReason::NumericalFailure;
            result.stop_detail = std::string(e.what()) + " (step " + std::to_string(step) + ")";
            break;
        }
        result.steps_done = step;

        if (!std::isfinite(stepper.density_sum())) {
            result.stop = StopReason::NumericalFailure;
            result.stop_detail = "non-finite density at step " + std::to_string(step) +
                                 " (t̄ = " + std::to_string(step * config.dt) + ")";
            break;
        }
        if (guard_on) {
            const auto& density = stepper.density();
            const auto it = std::max_element(density.begin(), density.end());
            const double x_peak = grid.x()[std::distance(density.begin(), it)];
            if (std::abs(x_peak) >= guard_limit) {
                result.stop = StopReason::BoundaryGuard;
                result.stop_detail =
                    "density peak reached x̄ = " + std::to_string(x_peak) + " at step " +
                    std::to_string(step) + " (t̄ = " + std::to_string(step * config.dt) +
                    "), outside the central " + std::to_string(config.boundary_guard) +
                    " fraction of the window; the linear potential −ā·x̄ is discontinuous "
                    "across the periodic seam";
                take_snapshot(step * config.dt);
                break;
            }
        }
        if (step % config.snapshot_stride == 0 || step == steps_total) {
            take_snapshot(step * config.dt);
        }
    }

    result.psi_final = stepper.state();
    return result;
}

// ---------------------------------------------------------------------------
// imaginary-time ground state

GroundStateResult imaginary_time_ground_state(const Wavefunction& psi0, const SystemParams& params,
                                              const SpectralGrid& grid, double tol,
                                              const GroundStateOptions& options, WarningLog* log) {
    if (!(tol > 0.0)) throw ConfigError("relax.tol must be > 0");
    if (!(options.dt > 0.0)) throw ConfigError("relax.dt must be > 0");
    if (options.max_steps < 1) throw ConfigError("relax.max_steps must be >= 1");
    if (options.check_every < 1) throw ConfigError("relax.check_every must be >= 1");

    SystemParams relaxed = params;
    if (relaxed.a_bar != 0.0) {
        warn(log, "imaginary_time_ground_state: ā forced to 0 (no ground state exists in an "
                  "unbounded linear potential)");
        relaxed.a_bar = 0.0;
    }
    relaxed.validate(log);

    Wavefunction seed = psi0;
    normalize_mean_density(seed);
    SplitStepper stepper(relaxed, grid, std::move(seed));

    GroundStateResult result;
    std::vector<double> previous = stepper.density();
    double rate = std::numeric_limits<double>::infinity();
    bool converged = false;

    long step = 0;
    while (step < options.max_steps) {
        for (int s = 0; s < options.check_every && step < options.max_steps; ++s) {
            stepper.step_imaginary(options.dt);
            ++step;
        }
        if (!std::isfinite(stepper.density_sum())) {
            throw NumericalError("imaginary-time relaxation produced a non-finite state at step " +
                                 std::to_string(step));
        }
        const auto& current = stepper.density();
        double max_change = 0.0;
        for (size_t j = 0; j < current.size(); ++j) {
            max_change = std::max(max_change, std::abs(current[j] - previous[j]));
        }
        rate = max_change / (options.dt * options.check_every);
        previous = current;
        if (rate < tol) {
            converged = true;
            break;
        }
    }

    result.psi = stepper.state();
    result.steps = step;
    result.final_change_rate = rate;
    if (!converged) {
        result.outcome = GroundStateOutcome::NotConverged;
        warn(log, "imaginary_time_ground_state: not converged after " + std::to_string(step) +
                      " steps (change rate " + std::to_string(rate) + " vs tol " +
                      std::to_string(tol) + ")");
        return result;
    }

    const auto& density = stepper.density();
    const auto [mn, mx] = std::minmax_element(density.begin(), density.end());
    const double contrast = *mx - *mn;  // mean density is 1 by construction
    result.outcome =
        (contrast < 0.05) ? GroundStateOutcome::Homogeneous : GroundStateOutcome::Droplet;
    return result;
}

// ---------------------------------------------------------------------------
// energy diagnostic

EnergyBreakdown energy_of(const Wavefunction& wf, const SystemParams& params,
                          const SpectralGrid& grid) {
    auto spectrum = grid.to_spectrum(wf.psi);
    double kinetic = 0.0;
    for (int k = 0; k < grid.n_points(); ++k) {
        kinetic += grid.q()[k] * grid.q()[k] * std::norm(spectrum[k]);
    }
    kinetic *= params.omega_r_bar * grid.dx();

    const auto density = density_of(wf);
    const auto fields = dipole_potential(density, params, grid);
    double interaction = 0.0;
    for (int j = 0; j < grid.n_points(); ++j) {
        interaction += density[j] * fields.potential[j];
    }
    interaction *= grid.dx();

    return {kinetic, interaction, kinetic + interaction};
}

// ---------------------------------------------------------------------------
// automated dt selection

namespace {

struct ProbeSeries {
    std::vector<double> positions;  // density-peak positions, sub-grid
    std::vector<double> widths;     // NaN when the fit failed
    std::vector<double> peak_values;
};

ProbeSeries run_probe(const Wavefunction& psi0, const SystemParams& params,
                      const SpectralGrid& grid, double dt, long steps_per_sample, int n_samples) {
    SplitStepper stepper(params, grid, psi0);
    ProbeSeries series;
    auto sample = [&]() {
        const auto& density = stepper.density();
        const auto it = std::max_element(density.begin(), density.end());
        const int j = static_cast<int>(std::distance(density.begin(), it));
        const int n = grid.n_points();
        const double ym = density[(j - 1 + n) % n], y0 = density[j], yp = density[(j + 1) % n];
        series.positions.push_back(grid.x()[j] + grid.dx() * parabolic_offset(ym, y0, yp));
        series.peak_values.push_back(y0);
        double width = kNaN;
        try {
            width = fit_gaussian(density, grid).width;
        } catch (const FitError&) {
        }
        series.widths.push_back(width);
    };
    sample();
    for (int s = 0; s < n_samples; ++s) {
        for (long k = 0; k < steps_per_sample; ++k) stepper.step(dt);
        sample();
    }
    return series;
}

double probe_difference(const ProbeSeries& coarse, const ProbeSeries& fine, double dx) {
    double pos_min = fine.positions.front(), pos_max = fine.positions.front();
    double width_ref = 0.0;
    int width_count = 0;
    for (size_t i = 0; i < fine.positions.size(); ++i) {
        pos_min = std::min(pos_min, fine.positions[i]);
        pos_max = std::max(pos_max, fine.positions[i]);
        if (std::isfinite(fine.widths[i])) {
            width_ref += fine.widths[i];
            ++width_count;
        }
    }
    const double pos_scale =
        std::max({pos_max - pos_min, width_count > 0 ? width_ref / width_count : 0.0, dx});

    double diff = 0.0;
    for (size_t i = 0; i < fine.positions.size(); ++i) {
        diff = std::max(diff, std::abs(coarse.positions[i] - fine.positions[i]) / pos_scale);
        if (std::isfinite(coarse.widths[i]) && std::isfinite(fine.widths[i])) {
            diff = std::max(diff, std::abs(coarse.widths[i] - fine.widths[i]) / fine.widths[i]);
        }
        const double peak_scale = std::max(std::abs(fine.peak_values[i]), 1e-300);
        diff = std::max(diff,
                        std::abs(coarse.peak_values[i] - fine.peak_values[i]) / peak_scale);
    }
    return diff;
}

}  // namespace

DtProbe choose_dt(const Wavefunction& psi0, const SystemParams& params, const SpectralGrid& grid,
                  const EvolutionConfig& config, WarningLog* log) {
    const double horizon = std::min(config.t_final, 2.0e4);
    DtProbe probe;
    if (!(horizon > 0.0)) {
        probe.dt = 1.0;
        probe.converged = true;
        return probe;
    }

    const int n_samples = 40;
    const double sample_interval = std::max(1.0, std::round(horizon / n_samples));

    constexpr double kTolerance = 1e-3;  // 0.1% trajectory change under halving
    constexpr int kMaxHalvings = 8;

    double dt = 1.0;
    ProbeSeries coarse =
        run_probe(psi0, params, grid, dt, std::llround(sample_interval / dt), n_samples);
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
        const double dt_fine = 0.5 * dt;
        ProbeSeries fine = run_probe(psi0, params, grid, dt_fine,
                                     std::llround(sample_interval / dt_fine), n_samples);
        const double diff = probe_difference(coarse, fine, grid.dx());
        probe.report.push_back("dt=" + std::to_string(dt) + " vs dt=" + std::to_string(dt_fine) +
                               ": relative trajectory change " + std::to_string(diff));
        if (diff < kTolerance) {
            probe.dt = dt;
            probe.converged = true;
            return probe;
        }
        dt = dt_fine;
        coarse = std::move(fine);
    }
    probe.dt = dt;
    probe.converged = false;
    warn(log, "choose_dt: trajectory did not converge to 0.1% within " +
                  std::to_string(kMaxHalvings) + " halvings; using dt = " + std::to_string(dt));
    return probe;
}

}  // namespace droplet
