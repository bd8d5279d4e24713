#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace kinkflow {

enum class PotentialFamily { quartic_double_well, single_well };

inline std::string_view to_string(PotentialFamily f) {
    return f == PotentialFamily::quartic_double_well ? "quartic" : "single_well";
}

inline PotentialFamily parse_potential_family(std::string_view s) {
    if (s == "quartic" || s == "quartic_double_well") return PotentialFamily::quartic_double_well;
    if (s == "single_well" || s == "single") return PotentialFamily::single_well;
    throw std::invalid_argument("unknown potential family '" + std::string(s) + "'");
}

struct PotentialValue {
    double value;
    double derivative;
    double sqrt_value;
};

/// Polynomial well Phi(v):  quartic a(1-v^2)^2, single well a(1-v)^2.
struct PotentialSpec {
    PotentialFamily family = PotentialFamily::quartic_double_well;
    double scale = 1.0;

    PotentialSpec() = default;
    PotentialSpec(PotentialFamily f, double a) : family(f), scale(a) {
        if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("potential scale must be positive");
    }

    static PotentialSpec quartic(double a) { return {PotentialFamily::quartic_double_well, a}; }
    static PotentialSpec single_well(double a) { return {PotentialFamily::single_well, a}; }

    [[nodiscard]] bool symmetric() const { return family == PotentialFamily::quartic_double_well; }

    [[nodiscard]] double value(double v) const {
        if (family == PotentialFamily::quartic_double_well) {
            const double w = 1.0 - v * v;
            return scale * w * w;
        }
        const double w = 1.0 - v;
        return scale * w * w;
    }

    [[nodiscard]] double derivative(double v) const {
        if (family == PotentialFamily::quartic_double_well) return -4.0 * scale * v * (1.0 - v * v);
        return -2.0 * scale * (1.0 - v);
    }

    [[nodiscard]] double second_derivative(double v) const {
        if (family == PotentialFamily::quartic_double_well) return scale * (12.0 * v * v - 4.0);
        return 2.0 * scale;
    }

    [[nodiscard]] double sqrt_value(double v) const {
        const double r = std::sqrt(scale);
        if (family == PotentialFamily::quartic_double_well) return r * std::abs(1.0 - v * v);
        return r * std::abs(1.0 - v);
    }

    friend bool operator==(const PotentialSpec&, const PotentialSpec&) = default;
};

inline PotentialValue potential_eval(const PotentialSpec& pot, double v) {
    return {pot.value(v), pot.derivative(v), pot.sqrt_value(v)};
}

/// Interface cost 2 * int_{-1}^{1} sqrt(Phi).  Only defined for the symmetric double well.
inline double sigma(const PotentialSpec& pot) {
    if (!pot.symmetric())
        throw std::domain_error("sigma is undefined for the single-well potential");
    double error = 0.0;
    // sqrt(Phi) has a corner-free but flattening shape near +-1; 15-point
    // Gauss-Kronrod with bisection converges long before max_depth.
    const double integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double v) { return pot.sqrt_value(v); }, -1.0, 1.0, 20, 1e-14, &error);
    if (error > 1e-10) throw std::runtime_error("sigma quadrature did not reach 1e-10");
    return 2.0 * integral;
}

/// Kink cost per radian of tangent jump: 2 sqrt(Phi(0)).
inline double sigma_hat(const PotentialSpec& pot) { return 2.0 * pot.sqrt_value(0.0); }

}  // namespace kinkflow
