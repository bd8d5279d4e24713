#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kinkflow/grid.hpp"

namespace kinkflow {

using Point = std::array<double, 2>;

/// Discrete tangent-angle / phase-field pair on a periodic grid.
///
/// u is unwrapped: continuing past the seam, u_{n} = u_0 + 2*pi*winding.
struct FieldState {
    Grid grid;
    std::vector<double> u;
    int winding = 1;
    std::vector<double> v;

    FieldState() = default;
    FieldState(Grid g, std::vector<double> angles, int w, std::vector<double> phase)
        : grid(g), u(std::move(angles)), winding(w), v(std::move(phase)) {
        check_sizes();
    }

    void check_sizes() const {
        if (u.size() != grid.size() || v.size() != grid.size())
            throw std::invalid_argument("field arrays do not match the grid size");
    }

    [[nodiscard]] int size() const { return grid.n_points; }
    [[nodiscard]] double h() const { return grid.spacing; }

    /// u_{i+1} - u_i with the seam term.
    [[nodiscard]] double angle_increment(int i) const {
        const int n = grid.n_points;
        if (i == n - 1) return (u[0] - u[n - 1]) + two_pi * winding;
        return u[i + 1] - u[i];
    }

    [[nodiscard]] double kappa(int i) const { return angle_increment(i) / grid.spacing; }

    [[nodiscard]] std::vector<double> curvature() const {
        std::vector<double> k(grid.size());
        for (int i = 0; i < size(); ++i) k[i] = kappa(i);
        return k;
    }

    [[nodiscard]] double mass() const {
        double s = 0.0;
        for (double x : v) s += x;
        return s * grid.spacing;
    }

    [[nodiscard]] bool finite() const {
        for (double x : u)
            if (!std::isfinite(x)) return false;
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

/// Circle of the given winding; u_i is the tangent angle at cell midpoint i.
inline FieldState circle_state(const Grid& grid, double v_value = 1.0, int winding = 1, double angle0 = 0.0) {
    std::vector<double> u(grid.size());
    for (int i = 0; i < grid.n_points; ++i) u[i] = angle0 + two_pi * winding * (i - 0.5) / grid.n_points;
    return FieldState(grid, std::move(u), winding, std::vector<double>(grid.size(), v_value));
}

/// (h sum cos u_i, h sum sin u_i); the end-to-start gap of the reconstructed polygon.
inline Point closure_defect(std::span<const double> u, double h) {
    double cx = 0.0, cy = 0.0;
    for (double a : u) {
        cx += std::cos(a);
        cy += std::sin(a);
    }
    return {h * cx, h * cy};
}

inline Point closure_defect(const FieldState& s) { return closure_defect(s.u, s.h()); }

inline double norm(const Point& p) { return std::hypot(p[0], p[1]); }

/// Polygon through the nodes: q_0 = base and u_i is the angle of the edge
/// ending at node i, so q_i = q_{i-1} + h (cos u_i, sin u_i) and the closing
/// edge uses u_0.  n+1 points.
inline std::vector<Point> reconstruct_curve(const FieldState& s, Point base = {0.0, 0.0}) {
    const int n = s.size();
    std::vector<Point> q(s.grid.size() + 1);
    q[0] = base;
    const double h = s.h();
    for (int i = 1; i <= n; ++i) {
        const double a = s.u[i == n ? 0 : i];
        q[i] = {q[i - 1][0] + h * std::cos(a), q[i - 1][1] + h * std::sin(a)};
    }
    return q;
}

/// Angle enclosed by two unit tangents, in [0, pi].
inline double jump_magnitude(double angle_before, double angle_after) {
    double d = std::remainder(angle_after - angle_before, two_pi);
    return std::min(std::abs(d), pi);
}

/// Signed representative of a turning angle in [-pi, pi].
inline double reduce_angle(double a) { return std::remainder(a, two_pi); }

}  // namespace kinkflow
