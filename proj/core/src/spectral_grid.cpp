#include "droplet/spectral_grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "droplet/errors.hpp"

namespace droplet {

namespace {
// FFTW's planner mutates global state; executing a finished plan does not.
std::mutex planner_mutex;
}  // namespace

struct SpectralGrid::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    ~Plans() {
        std::lock_guard<std::mutex> lock(planner_mutex);
        if (forward != nullptr) fftw_destroy_plan(forward);
        if (backward != nullptr) fftw_destroy_plan(backward);
    }
};

SpectralGrid::SpectralGrid(int n_points, double length) {
    if (n_points < 16) {
        throw ConfigError("grid.n_points must be >= 16 (got " + std::to_string(n_points) +
                          "); coarser grids cannot resolve the critical wavelength 2π");
    }
    if (!(length > 0.0)) {
        throw ConfigError("grid.length must be > 0 (got " + std::to_string(length) + ")");
    }

    n_ = n_points;
    length_ = length;
    dx_ = length / n_points;

    x_.resize(n_);
    q_.resize(n_);
    const double dq = 2.0 * std::numbers::pi / length_;
    for (int j = 0; j < n_; ++j) {
        x_[j] = -0.5 * length_ + j * dx_;
        const int m = (j < (n_ + 1) / 2) ? j : j - n_;
        q_[j] = dq * m;
    }

    auto plans = std::make_shared<Plans>();
    {
        std::lock_guard<std::mutex> lock(planner_mutex);
        // Planned UNALIGNED so execute_dft may run on any caller buffer;
        // ESTIMATE keeps the plan deterministic across runs.
        std::vector<Complex> a(n_), b(n_);
        auto* ap = reinterpret_cast<fftw_complex*>(a.data());
        auto* bp = reinterpret_cast<fftw_complex*>(b.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        plans->forward = fftw_plan_dft_1d(n_, ap, bp, FFTW_FORWARD, flags);
        plans->backward = fftw_plan_dft_1d(n_, ap, bp, FFTW_BACKWARD, flags);
    }
    plans_ = std::move(plans);
}

int SpectralGrid::index_of_q(double q_target) const {
    for (int k = 0; k < n_; ++k) {
        if (std::abs(q_[k] - q_target) < 1e-9) return k;
    }
    throw ConfigError("grid has no spectral bin at q̄ = " + std::to_string(q_target) +
                      " (length must be a multiple of 2π/q̄)");
}

namespace {
// The plans are out-of-place; executing them with in == out is undefined.
void execute(fftw_plan plan, std::span<const Complex> in, std::span<Complex> out, int n) {
    auto* op = reinterpret_cast<fftw_complex*>(out.data());
    if (in.data() == out.data()) {
        std::vector<Complex> tmp(in.begin(), in.end());
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data()), op);
    } else {
        auto* ip = reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data()));
        fftw_execute_dft(plan, ip, op);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : out) v *= scale;
}
}  // namespace

void SpectralGrid::to_spectrum(std::span<const Complex> field, std::span<Complex> spectrum) const {
    if (field.size() != static_cast<size_t>(n_) || spectrum.size() != static_cast<size_t>(n_)) {
        throw ConfigError("to_spectrum: array length does not match grid.n_points");
    }
    execute(plans_->forward, field, spectrum, n_);
}

void SpectralGrid::from_spectrum(std::span<const Complex> spectrum, std::span<Complex> field) const {
    if (field.size() != static_cast<size_t>(n_) || spectrum.size() != static_cast<size_t>(n_)) {
        throw ConfigError("from_spectrum: array length does not match grid.n_points");
    }
    execute(plans_->backward, spectrum, field, n_);
}

std::vector<Complex> SpectralGrid::to_spectrum(std::span<const Complex> field) const {
    std::vector<Complex> spectrum(n_);
    to_spectrum(field, spectrum);
    return spectrum;
}

std::vector<Complex> SpectralGrid::from_spectrum(std::span<const Complex> spectrum) const {
    std::vector<Complex> field(n_);
    from_spectrum(spectrum, field);
    return field;
}

SpectralGrid make_grid(int n_points, double length) { return SpectralGrid(n_points, length); }

}  // namespace droplet
