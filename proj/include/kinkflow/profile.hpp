#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp uses isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include "kinkflow/grid.hpp"
#include "kinkflow/potential.hpp"

namespace kinkflow {

/// Samples of the optimal transition profile p on [0, t_max] with monotone
/// piecewise-cubic interpolation.  Beyond t_max the last value is held.
class ProfileTable {
public:
    ProfileTable(std::vector<double> abscissae, std::vector<double> values)
        : t_(std::move(abscissae)), p_(std::move(values)),
          interp_(std::vector<double>(t_), std::vector<double>(p_)) {}

    [[nodiscard]] const std::vector<double>& abscissae() const { return t_; }
    [[nodiscard]] const std::vector<double>& values() const { return p_; }
    [[nodiscard]] double t_max() const { return t_.back(); }

    [[nodiscard]] double operator()(double t) const {
        if (t <= 0.0) return p_.front();
        if (t >= t_.back()) return p_.back();
        return interp_(t);
    }

private:
    std::vector<double> t_;
    std::vector<double> p_;
    boost::math::interpolators::pchip<std::vector<double>> interp_;
};

namespace detail {

inline std::vector<double> integrate_profile(const PotentialSpec& pot, double t_max, std::size_t steps) {
    using boost::numeric::odeint::runge_kutta4;
    runge_kutta4<double> stepper;
    const double dt = t_max / static_cast<double>(steps);
    const double ceiling = std::nextafter(1.0, 0.0);
    auto rhs = [&](double p, double& dp, double) { dp = pot.sqrt_value(std::clamp(p, -ceiling, ceiling)); };
    std::vector<double> p(steps + 1);
    double x = 0.0;
    p[0] = x;
    for (std::size_t k = 1; k <= steps; ++k) {
        stepper.do_step(rhs, x, dt * static_cast<double>(k - 1), dt);
        x = std::clamp(x, -ceiling, ceiling);
        p[k] = x;
    }
    return p;
}

}  // namespace detail

/// Solves p' = sqrt(Phi(p)), p(0) = 0 with classical RK4.  The step starts at
/// 1e-3 and is halved until two successive resolutions agree to tol.
inline ProfileTable optimal_profile(const PotentialSpec& pot, double t_max, double tol = 1e-10) {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("t_max must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("profile tolerance must be positive");
    auto steps = static_cast<std::size_t>(std::ceil(t_max / 1e-3));
    steps = std::max<std::size_t>(steps, 4);
    auto coarse = detail::integrate_profile(pot, t_max, steps);
    for (int refine = 0; refine < 8; ++refine) {
        auto fine = detail::integrate_profile(pot, t_max, 2 * steps);
        double diff = 0.0;
        for (std::size_t k = 0; k <= steps; ++k) diff = std::max(diff, std::abs(fine[2 * k] - coarse[k]));
        steps *= 2;
        coarse = std::move(fine);
        if (diff <= tol) break;
    }
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = t_max * static_cast<double>(k) / static_cast<double>(steps);
    return ProfileTable(std::move(t), std::move(coarse));
}

/// Half-width |[q']| eps / (2 sqrt(Phi(0))) of the smoothed kink.
inline double delta_eps(double jump, const PotentialSpec& pot, double eps) {
    if (!(jump >= 0.0 && jump <= pi)) throw std::invalid_argument("jump must lie in [0, pi]");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const double root = pot.sqrt_value(0.0);
    if (!(root > 0.0)) throw std::domain_error("Phi(0) = 0: kinks have no finite width");
    return jump * eps / (2.0 * root);
}

/// One-sided transition p_eps(t), t >= 0: zero on [0, delta], the rescaled
/// optimal profile for sqrt(eps), then a slope-1/eps ramp up to one.
class PEps {
public:
    PEps(double eps, double delta, ProfileTable profile)
        : eps_(eps), delta_(delta), root_eps_(std::sqrt(eps)), profile_(std::move(profile)) {
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
        if (!(delta >= 0.0)) throw std::invalid_argument("delta must be non-negative");
        if (profile_.t_max() < 1.0 / root_eps_)
            throw std::invalid_argument("profile table too short for this eps");
        p_star_ = profile_(1.0 / root_eps_);
    }

    [[nodiscard]] double eps() const { return eps_; }
    [[nodiscard]] double delta() const { return delta_; }
    [[nodiscard]] double p_star() const { return p_star_; }

    /// Length of the part where 0 < p_eps < 1.
    [[nodiscard]] double transition_width() const { return root_eps_ + eps_ * (1.0 - p_star_); }

    /// Distance from the kink centre at which p_eps reaches one.
    [[nodiscard]] double support() const { return delta_ + transition_width(); }

    [[nodiscard]] double operator()(double t) const {
        if (t <= delta_) return 0.0;
        const double r = t - delta_;
        if (r <= root_eps_) return profile_(r / eps_);
        return std::min(1.0, p_star_ + (r - root_eps_) / eps_);
    }

private:
    double eps_;
    double delta_;
    double root_eps_;
    double p_star_ = 0.0;
    ProfileTable profile_;
};

inline double profile_extent(double eps) { return std::max(5.0, 1.0 / std::sqrt(eps) + 1.0); }

inline PEps build_p_eps(double eps, double delta, const ProfileTable& profile) { return PEps(eps, delta, profile); }

}  // namespace kinkflow
