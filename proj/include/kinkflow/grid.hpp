#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace kinkflow {

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double two_pi = 2.0 * pi;

/// Uniform periodic arclength grid on [0, length).
///
/// Phase-field samples v_i live at the nodes t_i = i*h.  Tangent-angle
/// samples u_i live at the cell midpoints t_i - h/2, so that the forward
/// difference (u_{i+1} - u_i)/h is centred on node i.
struct Grid {
    int n_points = 0;
    double length = 0.0;
    double spacing = 0.0;

    static constexpr int min_points = 16;

    Grid() = default;

    Grid(int n, double total_length) : n_points(n), length(total_length), spacing(total_length / n) {
        if (n < min_points)
            throw std::invalid_argument("grid needs at least " + std::to_string(min_points) +
                                        " points, got " + std::to_string(n));
        if (!(total_length > 0.0) || !std::isfinite(total_length))
            throw std::invalid_argument("grid length must be positive and finite");
    }

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(n_points); }

    /// Arclength of node i.
    [[nodiscard]] double node(int i) const { return spacing * i; }

    /// Arclength of the midpoint of the cell ending at node i.
    [[nodiscard]] double midpoint(int i) const { return spacing * (i - 0.5); }

    /// Periodic representative of t in [-length/2, length/2).
    [[nodiscard]] double wrap_signed(double t) const {
        double r = std::fmod(t + 0.5 * length, length);
        if (r < 0.0) r += length;
        return r - 0.5 * length;
    }

    /// Periodic representative of t in [0, length).
    [[nodiscard]] double wrap(double t) const {
        double r = std::fmod(t, length);
        if (r < 0.0) r += length;
        return r;
    }

    [[nodiscard]] int wrap_index(long i) const {
        long r = i % n_points;
        return static_cast<int>(r < 0 ? r + n_points : r);
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

}  // namespace kinkflow
