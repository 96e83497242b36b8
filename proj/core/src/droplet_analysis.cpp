#include "droplet/droplet_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "droplet/bec_dynamics.hpp"
#include "droplet/errors.hpp"

namespace droplet {

namespace {
constexpr double kHbar = 1.054571817e-34;  // J·s
}

void PhysicalAnchors::validate() const {
    if (!(lambda0 > 0.0)) throw ConfigError("anchors.lambda0 must be > 0");
    if (!(d_mirror > 0.0)) throw ConfigError("anchors.d_mirror must be > 0");
    if (!(gamma > 0.0)) throw ConfigError("anchors.gamma must be > 0");
    if (!(mass > 0.0)) throw ConfigError("anchors.mass must be > 0");
}

CriticalScales critical_wavenumber(const PhysicalAnchors& anchors) {
    anchors.validate();
    const double k0 = 2.0 * std::numbers::pi / anchors.lambda0;
    const double q_c = std::sqrt(0.5 * std::numbers::pi * k0 / anchors.d_mirror);
    return {q_c, 2.0 * std::numbers::pi / q_c};
}

double pump_threshold(const SystemParams& params) {
    if (!(params.b0 > 0.0)) throw ConfigError("params.b0 must be > 0");
    if (params.mirror_R <= 0.0) {
        throw ConfigError("params.mirror_R = 0: no instability without feedback (threshold is infinite)");
    }
    return 2.0 * params.omega_r_bar / (params.b0 * params.mirror_R);
}

double predicted_width(const SystemParams& params, WarningLog* log) {
    const double p_th = pump_threshold(params);
    if (!(params.p0 > p_th)) {
        throw ConfigError("params.p0 = " + std::to_string(params.p0) +
                          " is at or below the pump threshold " + std::to_string(p_th) +
                          "; no droplet solution exists");
    }
    const double ratio = params.p0 / p_th;
    if (ratio < 5.0) {
        warn(log, "predicted_width: p0/p_th = " + std::to_string(ratio) +
                      " < 5; the width formula is asymptotic in p0 >> p_th");
    }
    return std::pow(ratio, -0.25);
}

namespace {

// Gauss elimination with partial pivoting for the tiny LM normal systems.
template <int N>
bool solve_small(std::array<std::array<double, N>, N> a, std::array<double, N>& b) {
    for (int col = 0; col < N; ++col) {
        int pivot = col;
        for (int r = col + 1; r < N; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < N; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < N; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int col = N - 1; col >= 0; --col) {
        double s = b[col];
        for (int c = col + 1; c < N; ++c) s -= a[col][c] * b[c];
        b[col] = s / a[col][col];
    }
    return true;
}

struct GaussianModel {
    double amplitude, center, width;
};

double cost_of(const GaussianModel& m, std::span<const double> x, std::span<const double> y) {
    double ssr = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double u = (x[i] - m.center) / m.width;
        const double r = m.amplitude * std::exp(-u * u) - y[i];
        ssr += r * r;
    }
    return ssr;
}

}  // namespace

DropletFit fit_gaussian(std::span<const double> density, const SpectralGrid& grid) {
    const int n = grid.n_points();
    if (density.size() != static_cast<size_t>(n)) {
        throw ConfigError("fit_gaussian: density length does not match grid.n_points");
    }

    int j_max = 0;
    double v_max = density[0], v_min = density[0];
    for (int j = 1; j < n; ++j) {
        if (density[j] > v_max) {
            v_max = density[j];
            j_max = j;
        }
        v_min = std::min(v_min, density[j]);
    }
    if (!(v_max - v_min > 1e-12 * std::max(v_max, 1e-300))) {
        throw FitError("fit_gaussian: density has no peak (constant profile)");
    }
    if (j_max < 2 || j_max >= n - 2) {
        throw FitError("fit_gaussian: density peak sits at the window edge");
    }

    // Data-driven initial guesses: parabolic sub-cell peak and HWHM width.
    const double dx = grid.dx();
    const double x_peak =
        grid.x()[j_max] +
        dx * [&] {
            const double d2 = density[j_max - 1] - 2.0 * density[j_max] + density[j_max + 1];
            if (d2 >= 0.0) return 0.0;
            return 0.5 * (density[j_max - 1] - density[j_max + 1]) / d2;
        }();
    const double half = v_min + 0.5 * (v_max - v_min);
    int reach = 1;
    while (reach < n / 2 && density[(j_max + reach) % n] > half &&
           density[(j_max - reach + n) % n] > half) {
        ++reach;
    }
    const double sigma0 = std::max(reach * dx, 0.5 * dx) / std::sqrt(std::numbers::ln2);

    // Fit window: ±5 widths around the peak, sampled with periodic wrap so
    // the fit is exactly translation-equivariant under whole-cell shifts.
    int w = static_cast<int>(std::lround(5.0 * sigma0 / dx));
    w = std::clamp(w, 3, n / 2 - 1);
    std::vector<double> xs, ys;
    xs.reserve(2 * w + 1);
    ys.reserve(2 * w + 1);
    for (int off = -w; off <= w; ++off) {
        const int j = ((j_max + off) % n + n) % n;
        xs.push_back(grid.x()[j_max] + off * dx);  // unwrapped coordinate relative to the peak cell
        ys.push_back(density[j]);
    }

    GaussianModel m{v_max, x_peak, sigma0};
    double lambda = 1e-3;
    double cost = cost_of(m, xs, ys);
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
        std::array<std::array<double, 3>, 3> jtj{};
        std::array<double, 3> jtr{};
        for (size_t i = 0; i < xs.size(); ++i) {
            const double u = (xs[i] - m.center) / m.width;
            const double e = std::exp(-u * u);
            const double f = m.amplitude * e;
            const double r = f - ys[i];
            const double jac[3] = {e, f * 2.0 * u / m.width, f * 2.0 * u * u / m.width};
            for (int a = 0; a < 3; ++a) {
                jtr[a] += jac[a] * r;
                for (int b = 0; b < 3; ++b) jtj[a][b] += jac[a] * jac[b];
            }
        }
        auto damped = jtj;
        for (int a = 0; a < 3; ++a) damped[a][a] += lambda * std::max(jtj[a][a], 1e-300);
        std::array<double, 3> step = {-jtr[0], -jtr[1], -jtr[2]};
        if (!solve_small<3>(damped, step)) {
            throw FitError("fit_gaussian: singular normal equations");
        }
        GaussianModel trial{m.amplitude + step[0], m.center + step[1], m.width + step[2]};
        trial.width = std::abs(trial.width);
        if (trial.width < 0.05 * dx) trial.width = 0.05 * dx;
        const double trial_cost = cost_of(trial, xs, ys);
        if (trial_cost <= cost) {
            const double rel_step = std::abs(step[0]) / std::max(std::abs(m.amplitude), 1e-300) +
                                    std::abs(step[1]) / std::max(m.width, 1e-300) +
                                    std::abs(step[2]) / std::max(m.width, 1e-300);
            m = trial;
            const double improvement = (cost - trial_cost) / std::max(cost, 1e-300);
            cost = trial_cost;
            lambda = std::max(lambda * 0.3, 1e-14);
            if (rel_step < 1e-13 || improvement < 1e-15) {
                converged = true;
                break;
            }
        } else {
            lambda *= 8.0;
            if (lambda > 1e12) break;
        }
    }
    if (!converged) {
        throw FitError("fit_gaussian: Levenberg-Marquardt did not converge");
    }

    DropletFit fit;
    fit.amplitude = m.amplitude;
    fit.center = m.center;
    fit.width = m.width;
    fit.residual = std::sqrt(cost / static_cast<double>(xs.size()));
    if (!(fit.width > 0.0) || !std::isfinite(fit.residual)) {
        throw FitError("fit_gaussian: degenerate fit result");
    }
    return fit;
}

HeatingBudget heating_budget(const SystemParams& params, double t_final) {
    HeatingBudget b;
    b.r_s_over_gamma = 0.5 * (1.0 + params.mirror_R) * params.p0;
    b.t_limit = (params.p0 > 0.0) ? 2.0 / ((1.0 + params.mirror_R) * params.p0)
                                  : std::numeric_limits<double>::infinity();
    b.ok = t_final < b.t_limit;
    return b;
}

std::vector<ScanPoint> threshold_scan(const SystemParams& params_base,
                                      std::span<const double> p0_values, const SpectralGrid& grid,
                                      double probe_amplitude) {
    if (!(probe_amplitude > 0.0) || probe_amplitude > 1e-2) {
        throw ConfigError("threshold_scan: probe_amplitude must be in (0, 1e-2] for a linear probe");
    }
    const int k1 = grid.index_of_q(1.0);

    // Protocol constants: dt small against every phase scale near threshold,
    // sampling dense against the slowest growth in the bracketing window.
    const double dt = 5.0;
    const int steps_per_sample = 50;
    const double t_cap = 1.2e6;

    std::vector<ScanPoint> out;
    out.reserve(p0_values.size());
    for (double p0 : p0_values) {
        SystemParams params = params_base;
        params.p0 = p0;
        params.a_bar = 0.0;

        Wavefunction psi = homogeneous_state(grid);
        for (int j = 0; j < grid.n_points(); ++j) {
            psi.psi[j] += probe_amplitude * std::cos(grid.x()[j]);
        }
        normalize_mean_density(psi);

        SplitStepper stepper(params, grid, std::move(psi));
        auto mode_amplitude = [&]() {
            std::vector<Complex> dens(grid.n_points());
            const auto& d = stepper.density();
            for (int j = 0; j < grid.n_points(); ++j) dens[j] = d[j];
            auto spec = grid.to_spectrum(dens);
            return std::abs(spec[k1]);
        };

        std::vector<double> times{0.0};
        std::vector<double> amps{mode_amplitude()};
        const double a0 = amps[0];
        if (!(a0 > 0.0)) {
            throw NumericalError("threshold_scan: probe amplitude lost to round-off at seed");
        }

        double t = 0.0;
        while (t < t_cap) {
            for (int s = 0; s < steps_per_sample; ++s) stepper.step(dt);
            t += dt * steps_per_sample;
            times.push_back(t);
            amps.push_back(mode_amplitude());
            if (amps.back() >= 25.0 * a0 || amps.back() <= 0.02 * a0) break;
        }

        const bool grew = *std::max_element(amps.begin(), amps.end()) >= 2.0 * a0;
        size_t lo = 0, hi = amps.size() - 1;
        if (grew) {
            while (lo < amps.size() && amps[lo] < 2.0 * a0) ++lo;
            hi = lo;
            while (hi + 1 < amps.size() && amps[hi] < 20.0 * a0) ++hi;
        } else {
            hi = amps.size() - 1;
            for (size_t i = 0; i < amps.size(); ++i) {
                if (amps[i] <= 0.5 * a0) {
                    hi = i;
                    break;
                }
            }
        }
        if (hi - lo + 1 < 4) {
            throw FitError("threshold_scan: too few samples in the rate-fit window at p0 = " +
                           std::to_string(p0));
        }

        // Log-linear fit of the mode amplitude over [lo, hi].
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (size_t i = lo; i <= hi; ++i) {
            if (!(amps[i] > 0.0)) continue;
            const double xi = times[i], yi = std::log(amps[i]);
            sx += xi;
            sy += yi;
            sxx += xi * xi;
            sxy += xi * yi;
            ++m;
        }
        const double denom = m * sxx - sx * sx;
        if (m < 4 || std::abs(denom) < 1e-300) {
            throw FitError("threshold_scan: degenerate rate fit at p0 = " + std::to_string(p0));
        }
        out.push_back({p0, (m * sxy - sx * sy) / denom, grew});
    }
    return out;
}

PhysicalPoint to_physical(const SystemParams& params, const PhysicalAnchors& anchors, double x_bar,
                          double t_bar, double a_bar, WarningLog* log) {
    const auto scales = critical_wavenumber(anchors);
    const double omega_r_from_anchors =
        kHbar * scales.q_c * scales.q_c / (2.0 * anchors.mass * anchors.gamma);
    if (std::abs(omega_r_from_anchors - params.omega_r_bar) > 0.05 * params.omega_r_bar) {
        warn(log, "to_physical: ω̄_r from anchors (" + std::to_string(omega_r_from_anchors) +
                      ") disagrees with params.omega_r_bar (" + std::to_string(params.omega_r_bar) +
                      ") by more than 5%");
    }
    PhysicalPoint p;
    p.x = x_bar / scales.q_c;
    p.t = t_bar / anchors.gamma;
    p.a = a_bar * kHbar * scales.q_c * anchors.gamma / anchors.mass;
    return p;
}

}  // namespace droplet
