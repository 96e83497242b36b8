#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "droplet/bec_dynamics.hpp"
#include "droplet/droplet_analysis.hpp"
#include "droplet/optical_feedback.hpp"
#include "droplet/spectral_grid.hpp"

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

droplet::SystemParams reference_params() {
    droplet::SystemParams p;
    p.omega_r_bar = 1.14e-5;
    p.b0 = 100.0;
    p.delta = -10000.0;
    p.mirror_R = 0.99;
    p.p0 = 2.28e-6;
    return p;
}

void BM_ToSpectrum(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const droplet::SpectralGrid grid(n, 16.0 * kTwoPi);
    std::vector<droplet::Complex> field(n), spectrum(n);
    for (int j = 0; j < n; ++j) field[j] = std::exp(-0.1 * grid.x()[j] * grid.x()[j]);
    for (auto _ : state) {
        grid.to_spectrum(field, spectrum);
        benchmark::DoNotOptimize(spectrum.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ToSpectrum)->RangeMultiplier(4)->Range(256, 16384);

void BM_DipolePotential(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const droplet::SpectralGrid grid(n, 16.0 * kTwoPi);
    const auto params = reference_params();
    droplet::FeedbackCalculator calc(params, grid);
    std::vector<double> density(n);
    for (int j = 0; j < n; ++j) {
        const double u = grid.x()[j] / 0.562;
        density[j] = std::exp(-u * u);
    }
    for (auto _ : state) {
        calc.update(density);
        benchmark::DoNotOptimize(calc.potential().data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_DipolePotential)->RangeMultiplier(4)->Range(256, 16384);

void BM_SplitStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const droplet::SpectralGrid grid(n, 16.0 * kTwoPi);
    const auto params = reference_params();
    droplet::SplitStepper stepper(params, grid, droplet::gaussian_state(grid, 0.0, 0.562));
    for (auto _ : state) {
        stepper.step(1.0);
        benchmark::DoNotOptimize(stepper.density().data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SplitStep)->RangeMultiplier(2)->Range(512, 4096);

void BM_ImaginaryStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const droplet::SpectralGrid grid(n, 16.0 * kTwoPi);
    const auto params = reference_params();
    droplet::SplitStepper stepper(params, grid, droplet::gaussian_state(grid, 0.0, 0.7));
    for (auto _ : state) {
        stepper.step_imaginary(1.0);
        benchmark::DoNotOptimize(stepper.density().data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ImaginaryStep)->RangeMultiplier(2)->Range(512, 4096);

void BM_FitGaussian(benchmark::State& state) {
    const int n = 1024;
    const droplet::SpectralGrid grid(n, 16.0 * kTwoPi);
    std::vector<double> density(n);
    for (int j = 0; j < n; ++j) {
        const double u = (grid.x()[j] - 1.3) / 0.56;
        density[j] = 7.0 * std::exp(-u * u);
    }
    for (auto _ : state) {
        auto fit = droplet::fit_gaussian(density, grid);
        benchmark::DoNotOptimize(fit);
    }
}
BENCHMARK(BM_FitGaussian);

}  // namespace

BENCHMARK_MAIN();
