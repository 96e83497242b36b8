#include "droplet/accel_sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "droplet/droplet_analysis.hpp"
#include "droplet/errors.hpp"

namespace droplet {

double parabolic_offset(double y_minus, double y_center, double y_plus) {
    const double curvature = y_minus - 2.0 * y_center + y_plus;
    if (curvature == 0.0) return 0.0;
    double offset = 0.5 * (y_minus - y_plus) / curvature;
    // Clamp: a refined extremum always lies within one cell of the sample.
    return std::clamp(offset, -1.0, 1.0);
}

namespace {

struct LocalExtremum {
    int index;
    double value;
};

double periodic_distance(double a, double b, double length) {
    double d = std::abs(a - b);
    d = std::fmod(d, length);
    return std::min(d, length - d);
}

}  // namespace

double locate_extremum(std::span<const double> intensity, const SpectralGrid& grid,
                       int detuning_sign, std::optional<double> prior_position) {
    const int n = grid.n_points();
    if (intensity.size() != static_cast<size_t>(n)) {
        throw ConfigError("locate_extremum: intensity length does not match grid.n_points");
    }
    if (detuning_sign != -1 && detuning_sign != 1) {
        throw ConfigError("locate_extremum: detuning_sign must be ±1");
    }

    // Work on a signed copy so maxima are always tracked: Δ<0 follows the
    // intensity maximum, Δ>0 the minimum.
    std::vector<double> y(intensity.begin(), intensity.end());
    if (detuning_sign > 0) {
        for (auto& v : y) v = -v;
    }

    const auto [mn_it, mx_it] = std::minmax_element(y.begin(), y.end());
    const double y_min = *mn_it, y_max = *mx_it;
    if (!(y_max - y_min > 1e-12 * std::max(std::abs(y_max), 1e-300))) {
        throw FitError("locate_extremum: no trackable extremum (intensity is constant)");
    }

    std::vector<LocalExtremum> maxima;
    for (int j = 0; j < n; ++j) {
        const double ym = y[(j - 1 + n) % n], y0 = y[j], yp = y[(j + 1) % n];
        if (y0 >= ym && y0 > yp) maxima.push_back({j, y0});
    }
    if (maxima.empty()) {
        throw FitError("locate_extremum: no local extremum found");
    }

    int chosen;
    if (prior_position.has_value()) {
        chosen = maxima.front().index;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& m : maxima) {
            const double d = periodic_distance(grid.x()[m.index], *prior_position, grid.length());
            if (d < best) {
                best = d;
                chosen = m.index;
            }
        }
    } else {
        std::sort(maxima.begin(), maxima.end(),
                  [](const LocalExtremum& a, const LocalExtremum& b) { return a.value > b.value; });
        if (maxima.size() >= 2) {
            const double prominence = maxima[0].value - y_min;
            if (maxima[0].value - maxima[1].value < 0.1 * prominence) {
                throw FitError(
                    "locate_extremum: ambiguous — two extrema within 10% of each other in depth "
                    "and no prior position given");
            }
        }
        chosen = maxima[0].index;
    }

    const double ym = y[(chosen - 1 + n) % n], y0 = y[chosen], yp = y[(chosen + 1) % n];
    return grid.x()[chosen] + grid.dx() * parabolic_offset(ym, y0, yp);
}

AccelEstimate fit_trajectory(const TrajectoryRecord& record, const SystemParams& params,
                             double dx_resolution) {
    const size_t m = record.size();
    if (m < 10) {
        throw FitError("fit_trajectory: needs at least 10 samples (got " + std::to_string(m) + ")");
    }
    if (!(params.omega_r_bar > 0.0)) throw ConfigError("params.omega_r_bar must be > 0");
    for (size_t i = 0; i < m; ++i) {
        if (!std::isfinite(record.times[i]) || !std::isfinite(record.peak_positions[i])) {
            throw FitError("fit_trajectory: non-finite sample at index " + std::to_string(i));
        }
        if (i > 0 && !(record.times[i] > record.times[i - 1])) {
            throw FitError("fit_trajectory: times must be strictly increasing");
        }
    }

    const double t_max = record.times.back();
    if (!(t_max > 0.0)) throw FitError("fit_trajectory: degenerate time axis");
    const double t_scale = t_max;

    // Normal equations on the scaled basis {1, s, s²}, s = t̄/t̄_max ∈ [0,1].
    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> atb{};
    for (size_t i = 0; i < m; ++i) {
        const double s = record.times[i] / t_scale;
        const double phi[3] = {1.0, s, s * s};
        for (int a = 0; a < 3; ++a) {
            atb[a] += phi[a] * record.peak_positions[i];
            for (int b = 0; b < 3; ++b) ata[a][b] += phi[a] * phi[b];
        }
    }

    // Cholesky of the 3×3 SPD system; failure means a rank-deficient design.
    std::array<std::array<double, 3>, 3> chol{};
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b <= a; ++b) {
            double s = ata[a][b];
            for (int k = 0; k < b; ++k) s -= chol[a][k] * chol[b][k];
            if (a == b) {
                if (!(s > 1e-300)) {
                    throw FitError("fit_trajectory: rank-deficient design (times not distinct?)");
                }
                chol[a][a] = std::sqrt(s);
            } else {
                chol[a][b] = s / chol[b][b];
            }
        }
    }
    auto solve_chol = [&](std::array<double, 3> rhs) {
        for (int a = 0; a < 3; ++a) {
            for (int k = 0; k < a; ++k) rhs[a] -= chol[a][k] * rhs[k];
            rhs[a] /= chol[a][a];
        }
        for (int a = 2; a >= 0; --a) {
            for (int k = a + 1; k < 3; ++k) rhs[a] -= chol[k][a] * rhs[k];
            rhs[a] /= chol[a][a];
        }
        return rhs;
    };
    const std::array<double, 3> coeff_scaled = solve_chol(atb);

    double rss = 0.0;
    double pos_min = record.peak_positions[0], pos_max = record.peak_positions[0];
    for (size_t i = 0; i < m; ++i) {
        const double s = record.times[i] / t_scale;
        const double model = coeff_scaled[0] + coeff_scaled[1] * s + coeff_scaled[2] * s * s;
        const double r = record.peak_positions[i] - model;
        rss += r * r;
        pos_min = std::min(pos_min, record.peak_positions[i]);
        pos_max = std::max(pos_max, record.peak_positions[i]);
    }
    const double variance = rss / static_cast<double>(m - 3);

    // Covariance of scaled coefficients: (AᵀA)⁻¹·s², then unscale.
    std::array<std::array<double, 3>, 3> cov_scaled{};
    for (int col = 0; col < 3; ++col) {
        std::array<double, 3> e{};
        e[col] = 1.0;
        const auto x = solve_chol(e);
        for (int row = 0; row < 3; ++row) cov_scaled[row][col] = x[row] * variance;
    }
    const double unscale[3] = {1.0, 1.0 / t_scale, 1.0 / (t_scale * t_scale)};

    AccelEstimate est;
    const double c1 = coeff_scaled[1] * unscale[1];
    const double c2 = coeff_scaled[2] * unscale[2];
    est.velocity_term = c1;
    est.gradient = c2 / (2.0 * std::numbers::pi);
    est.a_bar_hat = c2 / params.omega_r_bar;
    est.rms_residual = std::sqrt(rss / static_cast<double>(m));
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            est.covariance[a][b] = 0.5 * (cov_scaled[a][b] + cov_scaled[b][a]) * unscale[a] * unscale[b];
        }
    }
    est.a_min_detectable = dx_resolution / (params.omega_r_bar * t_max * t_max);

    const double displacement = pos_max - pos_min;
    if (displacement < dx_resolution) {
        est.reliable = false;
        est.note = "insufficient baseline: displacement " + std::to_string(displacement) +
                   " is below one grid cell (" + std::to_string(dx_resolution) +
                   "); minimum detectable ā at this duration ≈ " +
                   std::to_string(est.a_min_detectable);
    } else if (est.rms_residual > dx_resolution) {
        est.reliable = false;
        est.note = "trajectory residual " + std::to_string(est.rms_residual) +
                   " exceeds one grid cell; no well-defined quadratic trajectory";
    }
    return est;
}

SenseResult sense(const SystemParams& params, const SpectralGrid& grid,
                  const EvolutionConfig& config, const SenseOptions& options, SnapshotSink* sink,
                  WarningLog* log) {
    params.validate(log);
    if (config.mode != TimeMode::RealTime) {
        throw ConfigError("sense: evolution.mode must be real_time");
    }

    const auto budget = heating_budget(params, config.t_final);
    if (!budget.ok) {
        warn(log, "sense: requested duration t̄ = " + std::to_string(config.t_final) +
                      " exceeds the spontaneous-scattering limit t̄_limit = " +
                      std::to_string(budget.t_limit) + "; droplet heating is significant");
    }

    SenseResult result;
    Wavefunction initial;
    if (options.initial_state.has_value()) {
        initial = *options.initial_state;
        result.relax_outcome = GroundStateOutcome::Droplet;
        result.relax_steps = 0;
        warn(log, "sense: relaxation skipped, evolving the supplied initial state");
    } else {
        double p_th;
        try {
            p_th = pump_threshold(params);
        } catch (const ConfigError&) {
            p_th = std::numeric_limits<double>::infinity();
        }
        if (!(params.p0 > p_th)) {
            throw ConfigError("sense: params.p0 = " + std::to_string(params.p0) +
                              " does not exceed the pump threshold " + std::to_string(p_th) +
                              "; no droplet to track");
        }
        SystemParams relax_params = params;
        relax_params.a_bar = 0.0;
        const double width =
            options.seed_width > 0.0 ? options.seed_width : predicted_width(relax_params, log);
        auto ground =
            imaginary_time_ground_state(gaussian_state(grid, options.seed_center, width),
                                        relax_params, grid, options.relax_tol, options.relax, log);
        result.relax_outcome = ground.outcome;
        result.relax_steps = ground.steps;
        if (ground.outcome == GroundStateOutcome::Homogeneous) {
            throw PhysicsError("sense: relaxation found no droplet solution (homogeneous state); "
                               "p0 is effectively below threshold");
        }
        if (ground.outcome == GroundStateOutcome::NotConverged) {
            warn(log, "sense: ground-state relaxation did not fully converge; proceeding with the "
                      "final iterate");
        }
        initial = std::move(ground.psi);
    }

    result.evolution = evolve(initial, params, grid, config, sink, log);

    const TrajectoryRecord& record = result.evolution.record;
    if (!record.tracking_ok || record.size() < 10) {
        result.estimate.reliable = false;
        result.estimate.a_bar_hat = std::numeric_limits<double>::quiet_NaN();
        result.estimate.gradient = std::numeric_limits<double>::quiet_NaN();
        result.estimate.note =
            record.tracking_ok
                ? "too few samples for a trajectory fit"
                : "intensity tracking failed: " + record.tracking_note;
        return result;
    }

    try {
        result.estimate = fit_trajectory(record, params, grid.dx());
    } catch (const FitError& e) {
        result.estimate.reliable = false;
        result.estimate.a_bar_hat = std::numeric_limits<double>::quiet_NaN();
        result.estimate.gradient = std::numeric_limits<double>::quiet_NaN();
        result.estimate.note = e.what();
    }
    return result;
}

}  // namespace droplet
