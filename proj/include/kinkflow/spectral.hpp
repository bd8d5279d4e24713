#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kinkflow/grid.hpp"

namespace kinkflow {

/// Solves periodic constant-coefficient systems f(-Delta_h) x = b, where
/// Delta_h is the three-point periodic Laplacian.  Every such operator is
/// circulant and diagonal in the discrete Fourier basis.
class PeriodicSpectralSolver {
public:
    explicit PeriodicSpectralSolver(const Grid& grid) : n_(grid.n_points), symbol_(grid.size()) {
        const double h = grid.spacing;
        for (int k = 0; k < n_; ++k) {
            const double s = std::sin(pi * k / n_);
            symbol_[k] = 4.0 * s * s / (h * h);
        }
    }

    /// Eigenvalues of -Delta_h, indexed by Fourier mode.
    [[nodiscard]] const std::vector<double>& laplacian_symbol() const { return symbol_; }

    /// x = g(-Delta_h)^{-1} b where g is evaluated per eigenvalue.
    template <class Symbol>
    std::vector<double> solve(std::span<const double> b, Symbol&& g) {
        in_.assign(b.begin(), b.end());
        fft_.fwd(spectrum_, in_);
        for (int k = 0; k < n_; ++k) spectrum_[k] /= g(symbol_[k]);
        std::vector<double> x;
        fft_.inv(x, spectrum_);
        return x;
    }

private:
    int n_;
    std::vector<double> symbol_;
    Eigen::FFT<double> fft_;
    std::vector<double> in_;
    std::vector<std::complex<double>> spectrum_;
};

/// Periodic three-point Laplacian (v_{i+1} - 2 v_i + v_{i-1}) / h^2.
inline std::vector<double> periodic_laplacian(std::span<const double> v, double h) {
    const auto n = v.size();
    std::vector<double> out(n);
    const double inv = 1.0 / (h * h);
    for (std::size_t i = 0; i < n; ++i) {
        const double prev = v[i == 0 ? n - 1 : i - 1];
        const double next = v[i + 1 == n ? 0 : i + 1];
        out[i] = (next - 2.0 * v[i] + prev) * inv;
    }
    return out;
}

}  // namespace kinkflow
