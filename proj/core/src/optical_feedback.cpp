#include "droplet/optical_feedback.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "droplet/errors.hpp"

namespace droplet {

namespace {

void check_density(std::span<const double> density, size_t n) {
    if (density.size() != n) {
        throw ConfigError("density length does not match grid.n_points");
    }
    for (size_t j = 0; j < density.size(); ++j) {
        if (!(density[j] >= 0.0)) {
            throw NumericalError("density[" + std::to_string(j) + "] = " +
                                 std::to_string(density[j]) +
                                 " is negative or non-finite; upstream normalization is broken");
        }
    }
}

}  // namespace

std::vector<Complex> transmitted_field(std::span<const double> density, const SystemParams& params) {
    check_density(density, density.size());
    const double amp = std::sqrt(params.p0);
    const double chi0 = params.chi0();
    std::vector<Complex> f(density.size());
    for (size_t j = 0; j < density.size(); ++j) {
        const double phase = -chi0 * density[j];
        f[j] = amp * Complex(std::cos(phase), std::sin(phase));
    }
    return f;
}

std::vector<Complex> backward_field(std::span<const Complex> f_trans, const SystemParams& params,
                                    const SpectralGrid& grid) {
    const double sqrt_r = std::sqrt(params.mirror_R);
    auto spectrum = grid.to_spectrum(f_trans);
    const auto& q = grid.q();
    for (int k = 0; k < grid.n_points(); ++k) {
        const double phase = -0.5 * std::numbers::pi * q[k] * q[k];
        spectrum[k] *= sqrt_r * Complex(std::cos(phase), std::sin(phase));
    }
    return grid.from_spectrum(spectrum);
}

std::vector<Complex> propagate_image(std::span<const Complex> field, const SpectralGrid& grid) {
    auto spectrum = grid.to_spectrum(field);
    const auto& q = grid.q();
    for (int k = 0; k < grid.n_points(); ++k) {
        const double phase = -0.5 * std::numbers::pi * q[k] * q[k];
        spectrum[k] *= Complex(std::cos(phase), std::sin(phase));
    }
    return grid.from_spectrum(spectrum);
}

OpticalFields dipole_potential(std::span<const double> density, const SystemParams& params,
                               const SpectralGrid& grid) {
    FeedbackCalculator calc(params, grid);
    calc.update(density);
    return calc.fields();
}

FeedbackCalculator::FeedbackCalculator(const SystemParams& params, const SpectralGrid& grid)
    : params_(params), grid_(grid) {
    const int n = grid_.n_points();
    mirror_phase_.resize(n);
    const double sqrt_r = std::sqrt(params_.mirror_R);
    const auto& q = grid_.q();
    for (int k = 0; k < n; ++k) {
        const double phase = -0.5 * std::numbers::pi * q[k] * q[k];
        mirror_phase_[k] = sqrt_r * Complex(std::cos(phase), std::sin(phase));
    }
    spectrum_.resize(n);
    fields_.f_trans.resize(n);
    fields_.b_field.resize(n);
    fields_.potential.resize(n);
}

void FeedbackCalculator::update(std::span<const double> density) {
    const size_t n = static_cast<size_t>(grid_.n_points());
    check_density(density, n);

    const double amp = std::sqrt(params_.p0);
    const double chi0 = params_.chi0();
    for (size_t j = 0; j < n; ++j) {
        const double phase = -chi0 * density[j];
        fields_.f_trans[j] = amp * Complex(std::cos(phase), std::sin(phase));
    }

    grid_.to_spectrum(fields_.f_trans, spectrum_);
    for (size_t k = 0; k < n; ++k) spectrum_[k] *= mirror_phase_[k];
    grid_.from_spectrum(spectrum_, fields_.b_field);

    // |F_tr|² is exactly p₀ (pure phase mask); using p₀ directly avoids
    // spurious round-off structure in the potential.
    const double quarter_delta = 0.25 * params_.delta;
    for (size_t j = 0; j < n; ++j) {
        fields_.potential[j] = quarter_delta * (params_.p0 + std::norm(fields_.b_field[j]));
    }
}

std::vector<double> FeedbackCalculator::backward_intensity() const {
    std::vector<double> out(fields_.b_field.size());
    for (size_t j = 0; j < out.size(); ++j) out[j] = std::norm(fields_.b_field[j]);
    return out;
}

std::vector<double> FeedbackCalculator::image_intensity() const {
    auto propagated = propagate_image(fields_.f_trans, grid_);
    std::vector<double> out(propagated.size());
    for (size_t j = 0; j < out.size(); ++j) out[j] = std::norm(propagated[j]);
    return out;
}

}  // namespace droplet
