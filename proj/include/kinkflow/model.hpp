#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "kinkflow/potential.hpp"

namespace kinkflow {

struct CurvatureValue {
    double value;
    double derivative;
};

/// Spontaneous curvature C(v): cubic Hermite between C(-1) and C(+1) with
/// flat ends, held constant outside [-1, 1].
struct CurvatureSpec {
    double c_minus = 0.0;
    double c_plus = 0.0;

    [[nodiscard]] double at_phase(int phase) const { return phase < 0 ? c_minus : c_plus; }

    [[nodiscard]] CurvatureValue eval(double v) const {
        if (v <= -1.0) return {c_minus, 0.0};
        if (v >= 1.0) return {c_plus, 0.0};
        const double s = 0.5 * (v + 1.0);
        const double diff = c_plus - c_minus;
        return {c_minus + diff * s * s * (3.0 - 2.0 * s), 3.0 * diff * s * (1.0 - s)};
    }

    [[nodiscard]] double value(double v) const { return eval(v).value; }

    friend bool operator==(const CurvatureSpec&, const CurvatureSpec&) = default;
};

inline CurvatureValue spontaneous_curvature(const CurvatureSpec& spec, double v) { return spec.eval(v); }

struct ModelParams {
    double eps = 0.05;
    std::optional<double> m;  // prescribed mean of v; engaged when the volume constraint is on
    PotentialSpec potential;
    CurvatureSpec curvature_spec;
    bool volume_constraint_active = false;

    void validate() const {
        if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be positive");
        if (volume_constraint_active) {
            if (!m) throw std::invalid_argument("volume constraint active but m is unset");
            if (!(*m > -1.0 && *m < 1.0)) throw std::invalid_argument("m must lie in (-1, 1)");
        }
    }

    [[nodiscard]] double mean() const { return m.value_or(0.0); }
};

struct EnergyBreakdown {
    double curvature = 0.0;
    double interface = 0.0;
    double regularization = 0.0;
    double total = 0.0;

    static EnergyBreakdown from_parts(double curv, double iface, double reg) {
        return {curv, iface, reg, curv + iface + reg};
    }

    EnergyBreakdown& operator+=(const EnergyBreakdown& o) {
        curvature += o.curvature;
        interface += o.interface;
        regularization += o.regularization;
        total = curvature + interface + regularization;
        return *this;
    }
};

}  // namespace kinkflow
