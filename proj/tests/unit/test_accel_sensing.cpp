#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "droplet/accel_sensing.hpp"
#include "droplet/bec_dynamics.hpp"
#include "droplet/errors.hpp"

using droplet::AccelEstimate;
using droplet::SystemParams;
using droplet::TrajectoryRecord;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SystemParams reference_params() {
    SystemParams p;
    p.omega_r_bar = 1.14e-5;
    p.b0 = 100.0;
    p.delta = -10000.0;
    p.mirror_R = 0.99;
    p.p0 = 2.28e-6;
    return p;
}

}  // namespace

TEST_CASE("parabolic offset is exact on parabolas") {
    auto parabola = [](double x, double x0) { return 3.0 - 2.0 * (x - x0) * (x - x0); };
    for (double x0 : {0.0, 0.13, -0.377, 0.5}) {
        const double off =
            droplet::parabolic_offset(parabola(-1.0, x0), parabola(0.0, x0), parabola(1.0, x0));
        CHECK(off == doctest::Approx(x0).epsilon(1e-13));
    }
    CHECK(droplet::parabolic_offset(1.0, 2.0, 1.0) == 0.0);  // symmetric
}

TEST_CASE("locate_extremum") {
    const droplet::SpectralGrid grid(128, 4.0 * kTwoPi);
    const double dx = grid.dx();

    SUBCASE("exact parabola peak centered mid-cell") {
        const double x0 = grid.x()[80] + 0.5 * dx;
        std::vector<double> y(128, 0.0);
        for (int j = 78; j <= 82; ++j) {
            const double u = grid.x()[j] - x0;
            y[j] = 5.0 - u * u;
        }
        const double found = droplet::locate_extremum(y, grid, -1);
        CHECK(found == doctest::Approx(x0).epsilon(1e-12));
    }

    SUBCASE("minimum tracking for blue detuning") {
        std::vector<double> y(128);
        const double x0 = grid.x()[40] + 0.25 * dx;
        for (int j = 0; j < 128; ++j) {
            const double u = grid.x()[j] - x0;
            y[j] = 1.0 - 0.5 * std::exp(-u * u);
        }
        const double found = droplet::locate_extremum(y, grid, +1);
        // Parabolic refinement on a smooth (non-parabolic) profile is good to
        // a few % of a cell.
        CHECK(std::abs(found - x0) < 0.05 * dx);
    }

    SUBCASE("constant intensity is untrackable") {
        std::vector<double> y(128, 0.7);
        CHECK_THROWS_WITH_AS(droplet::locate_extremum(y, grid, -1),
                             doctest::Contains("no trackable extremum"), droplet::FitError);
    }

    SUBCASE("two near-equal peaks are ambiguous without a prior") {
        std::vector<double> y(128, 0.0);
        for (int j = 0; j < 128; ++j) {
            y[j] = std::exp(-std::pow(grid.x()[j] - 3.0, 2)) +
                   0.97 * std::exp(-std::pow(grid.x()[j] + 3.0, 2));
        }
        CHECK_THROWS_WITH_AS(droplet::locate_extremum(y, grid, -1),
                             doctest::Contains("ambiguous"), droplet::FitError);
        // A prior resolves the ambiguity toward the nearer peak.
        CHECK(droplet::locate_extremum(y, grid, -1, -2.5) == doctest::Approx(-3.0).epsilon(1e-2));
        CHECK(droplet::locate_extremum(y, grid, -1, +2.5) == doctest::Approx(3.0).epsilon(1e-2));
    }
}

TEST_CASE("trajectory fit recovers a synthetic quadratic exactly") {
    const auto params = reference_params();
    const double a_true = 1.0e-5;

    TrajectoryRecord record;
    for (int i = 0; i <= 100; ++i) {
        const double t = 3000.0 * i;
        record.times.push_back(t);
        record.peak_positions.push_back(params.omega_r_bar * a_true * t * t);
        record.widths.push_back(0.56);
        record.norms.push_back(1.0);
    }
    const AccelEstimate est = droplet::fit_trajectory(record, params, 0.1);
    CHECK(est.reliable);
    CHECK(est.a_bar_hat == doctest::Approx(a_true).epsilon(1e-10));
    CHECK(est.velocity_term == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(est.gradient ==
          doctest::Approx(params.omega_r_bar * a_true / kTwoPi).epsilon(1e-10));
    CHECK(est.rms_residual < 1e-10);

    // Covariance must be symmetric positive semidefinite (diagonal ≥ 0 and
    // 2x2/3x3 minors nonnegative).
    const auto& c = est.covariance;
    for (int i = 0; i < 3; ++i) {
        CHECK(c[i][i] >= 0.0);
        for (int j = 0; j < 3; ++j) CHECK(c[i][j] == doctest::Approx(c[j][i]).epsilon(1e-9));
    }
    CHECK(c[0][0] * c[1][1] - c[0][1] * c[1][0] >= -1e-30);
}

TEST_CASE("trajectory fit recovers velocity and works for any ω_r") {
    auto params = reference_params();
    params.omega_r_bar = 3.7e-4;
    const double a_true = -2.0e-6, v0 = 4.0e-5, x0 = 1.25;

    TrajectoryRecord record;
    for (int i = 0; i <= 50; ++i) {
        const double t = 5000.0 * i;
        record.times.push_back(t);
        record.peak_positions.push_back(x0 + v0 * t + params.omega_r_bar * a_true * t * t);
    }
    record.widths.assign(record.times.size(), 0.5);
    record.norms.assign(record.times.size(), 1.0);
    const AccelEstimate est = droplet::fit_trajectory(record, params, 0.1);
    CHECK(est.a_bar_hat == doctest::Approx(a_true).epsilon(1e-9));
    CHECK(est.velocity_term == doctest::Approx(v0).epsilon(1e-9));
}

TEST_CASE("trajectory fit error paths") {
    const auto params = reference_params();

    SUBCASE("too few samples") {
        TrajectoryRecord record;
        for (int i = 0; i < 5; ++i) {
            record.times.push_back(i);
            record.peak_positions.push_back(0.0);
        }
        CHECK_THROWS_AS(droplet::fit_trajectory(record, params, 0.1), droplet::FitError);
    }

    SUBCASE("non-increasing times") {
        TrajectoryRecord record;
        for (int i = 0; i < 12; ++i) {
            record.times.push_back(100.0);
            record.peak_positions.push_back(0.0);
        }
        CHECK_THROWS_AS(droplet::fit_trajectory(record, params, 0.1), droplet::FitError);
    }

    SUBCASE("NaN positions") {
        TrajectoryRecord record;
        for (int i = 0; i < 12; ++i) {
            record.times.push_back(100.0 * (i + 1));
            record.peak_positions.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        CHECK_THROWS_AS(droplet::fit_trajectory(record, params, 0.1), droplet::FitError);
    }

    SUBCASE("stationary record: estimate carries the insufficient-baseline note") {
        TrajectoryRecord record;
        for (int i = 0; i <= 20; ++i) {
            record.times.push_back(1000.0 * i);
            record.peak_positions.push_back(1e-6 * std::sin(0.1 * i));  // sub-cell jitter
        }
        const AccelEstimate est = droplet::fit_trajectory(record, params, 0.1);
        CHECK_FALSE(est.reliable);
        CHECK(est.note.find("insufficient baseline") != std::string::npos);
        CHECK(est.note.find("minimum detectable") != std::string::npos);
        CHECK(est.a_bar_hat == doctest::Approx(0.0).epsilon(1e-6));
        const double t_max = record.times.back();
        CHECK(est.a_min_detectable ==
              doctest::Approx(0.1 / (params.omega_r_bar * t_max * t_max)).epsilon(1e-12));
    }
}

TEST_CASE("sense flags feedback-off runs unreliable") {
    // With R = 0 the backward intensity vanishes identically: tracking fails
    // on the first snapshot and the pipeline must say so instead of guessing.
    auto params = reference_params();
    params.mirror_R = 0.0;
    params.a_bar = 1e-5;
    const droplet::SpectralGrid grid(256, 4.0 * kTwoPi);

    droplet::EvolutionConfig config;
    config.dt = 1.0;
    config.t_final = 2000.0;
    config.snapshot_stride = 100;

    droplet::SenseOptions options;
    options.initial_state = droplet::gaussian_state(grid, 0.0, 0.562);

    droplet::WarningLog log;
    const auto result = droplet::sense(params, grid, config, options, nullptr, &log);
    CHECK_FALSE(result.estimate.reliable);
    CHECK_FALSE(result.evolution.record.tracking_ok);
    CHECK(std::isnan(result.estimate.a_bar_hat));
    CHECK(result.estimate.note.find("tracking failed") != std::string::npos);
}

TEST_CASE("sense rejects below-threshold pumping without a prepared state") {
    auto params = reference_params();
    params.p0 = 1e-8;  // below p_th ≈ 2.3e-7
    const droplet::SpectralGrid grid(64, kTwoPi);
    droplet::EvolutionConfig config;
    config.dt = 1.0;
    config.t_final = 100.0;
    config.snapshot_stride = 10;
    CHECK_THROWS_AS(droplet::sense(params, grid, config), droplet::ConfigError);
}
