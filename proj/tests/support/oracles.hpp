// Independent reference implementations used only by tests. These must stay
// decoupled from the library code paths they check.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

// Direct O(N²) DFT with the same unitary convention as the library
// (1/sqrt(N) both ways, e^{-i2πjk/N} forward kernel).
inline std::vector<Complex> dft(const std::vector<Complex>& f, int sign = -1) {
    const size_t n = f.size();
    std::vector<Complex> out(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (size_t k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        for (size_t j = 0; j < n; ++j) {
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j * k % n) /
                                 static_cast<double>(n);
            acc += f[j] * Complex(std::cos(angle), std::sin(angle));
        }
        out[k] = acc * scale;
    }
    return out;
}

// Width of a freely spreading Gaussian density exp(−x²/σ(t)²) under
// i∂ₜΨ = −ω_r ∂²ₓΨ starting from σ(0) = s0:
//   σ(t) = s0·sqrt(1 + (2 ω_r t / s0²)²)
inline double free_gaussian_width(double s0, double omega_r, double t) {
    const double r = 2.0 * omega_r * t / (s0 * s0);
    return s0 * std::sqrt(1.0 + r * r);
}

// Deterministic xorshift for reproducible pseudo-random test fields.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    double uniform() {  // in [-1, 1)
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        return 2.0 * (static_cast<double>(state_ >> 11) / 9007199254740992.0) - 1.0;
    }

private:
    uint64_t state_;
};

}  // namespace oracle
