#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace droplet {

using Complex = std::complex<double>;

/// Uniform periodic 1D grid with its paired spectral representation.
///
/// Positions are x̄_j = -L/2 + j·dx in units of 1/q_c; wavenumbers q̄_k are in
/// units of q_c, standard FFT ordering (0, +, ..., Nyquist=-N/2, ..., -1) with
/// q̄_k = 2πk/L. Transforms use the unitary pair convention: forward and
/// inverse each carry 1/sqrt(N), so Parseval holds bin-for-bin and
/// from_spectrum(to_spectrum(f)) == f to round-off.
///
/// Immutable after construction; transform execution is thread-safe.
class SpectralGrid {
public:
    /// n_points >= 16 (a coarser grid cannot resolve the pattern period 2π),
    /// length > 0. Powers of two transform fastest but any size works.
    SpectralGrid(int n_points, double length);

    int n_points() const { return n_; }
    double length() const { return length_; }
    double dx() const { return dx_; }

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& q() const { return q_; }

    /// Index of the spectral bin whose q̄ equals `q_target` (within 1e-9).
    /// Throws ConfigError if the grid has no such bin.
    int index_of_q(double q_target) const;

    void to_spectrum(std::span<const Complex> field, std::span<Complex> spectrum) const;
    void from_spectrum(std::span<const Complex> spectrum, std::span<Complex> field) const;

    std::vector<Complex> to_spectrum(std::span<const Complex> field) const;
    std::vector<Complex> from_spectrum(std::span<const Complex> spectrum) const;

private:
    struct Plans;

    int n_ = 0;
    double length_ = 0.0;
    double dx_ = 0.0;
    std::vector<double> x_;
    std::vector<double> q_;
    std::shared_ptr<const Plans> plans_;
};

/// Factory form of the constructor.
SpectralGrid make_grid(int n_points, double length);

}  // namespace droplet
