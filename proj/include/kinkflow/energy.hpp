#pragma once

#include <stdexcept>

#include "kinkflow/field_state.hpp"
#include "kinkflow/model.hpp"

namespace kinkflow {

/// Per-node contribution to the discrete phase-field energy (without the factor h).
inline EnergyBreakdown energy_density(const FieldState& s, const ModelParams& p, int i) {
    const int n = s.size();
    const double h = s.h();
    const double vi = s.v[i];
    const double k = s.kappa(i);
    const double c = p.curvature_spec.value(vi);
    const double dv = (s.v[i + 1 == n ? 0 : i + 1] - vi) / h;
    const double curv = vi * vi * (k - c) * (k - c);
    const double iface = p.eps * dv * dv + p.potential.value(vi) / p.eps;
    const double reg = p.eps * k * k;
    return EnergyBreakdown::from_parts(curv, iface, reg);
}

/// Energy restricted to the nodes first, first+1, ..., first+count-1 (indices taken cyclically).
inline EnergyBreakdown energy_eps_window(const FieldState& s, const ModelParams& p, long first, long count) {
    double curv = 0.0, iface = 0.0, reg = 0.0;
    for (long j = 0; j < count; ++j) {
        const auto e = energy_density(s, p, s.grid.wrap_index(first + j));
        curv += e.curvature;
        iface += e.interface;
        reg += e.regularization;
    }
    const double h = s.h();
    return EnergyBreakdown::from_parts(h * curv, h * iface, h * reg);
}

/// Discrete phase-field energy
///   h sum v_i^2 (k_i - C(v_i))^2 + h sum [eps ((v_{i+1}-v_i)/h)^2 + Phi(v_i)/eps] + eps h sum k_i^2.
inline EnergyBreakdown energy_eps(const FieldState& s, const ModelParams& p) {
    s.check_sizes();
    if (!(p.eps > 0.0)) throw std::invalid_argument("eps must be positive");
    return energy_eps_window(s, p, 0, s.size());
}

}  // namespace kinkflow
