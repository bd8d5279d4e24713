#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinkflow/energy.hpp"
#include "kinkflow/field_state.hpp"
#include "kinkflow/model.hpp"
#include "kinkflow/spectral.hpp"

namespace kinkflow {

struct FlowParams {
    double dt = 1e-3;
    long max_steps = 10000;
    double energy_tol = 1e-6;      // converged when E decreases by less than energy_tol*dt ...
    int patience = 10;             // ... for this many consecutive steps
    double stationary_tol = 1e-10; // or at once when max|du| + max|dv| < stationary_tol*dt
    double closure_tol = 1e-8;
    double implicit_theta = 1.0;
    int projection_interval = 50;  // steps between closure Newton re-projections (0: only on drift)
    int max_halvings = 8;
    long log_every = 1;
    long snapshot_every = 0;       // 0: first and last state only
    double gram_condition_limit = 1e12;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("flow.dt must be positive");
        if (!(energy_tol >= 0.0)) throw std::invalid_argument("flow.energy_tol must be non-negative");
        if (!(implicit_theta >= 0.0 && implicit_theta <= 1.0))
            throw std::invalid_argument("flow.implicit_theta must lie in [0, 1]");
        if (max_steps < 0) throw std::invalid_argument("flow.max_steps must be non-negative");
        if (!(closure_tol > 0.0)) throw std::invalid_argument("flow.closure_tol must be positive");
        if (log_every < 1) throw std::invalid_argument("flow.log_every must be at least 1");
    }
};

enum class StopReason { converged, max_steps, blow_up };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::converged: return "converged";
        case StopReason::max_steps: return "max_steps";
        case StopReason::blow_up: return "blow_up";
    }
    return "?";
}

struct FlowLogEntry {
    long step;
    double time;
    EnergyBreakdown energy;
    double mass_defect;
    Point closure;

    [[nodiscard]] double closure_defect_norm() const { return norm(closure); }
};

struct FlowResult {
    FieldState final;
    std::vector<FlowLogEntry> energy_log;
    StopReason stop_reason = StopReason::max_steps;
    long steps = 0;
    long rejected_steps = 0;
    std::string message;
};

class FlowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact L2 gradient (1/h) dE/du_j of the discrete energy: (F_{j-1} - F_j)/h with
/// the edge flux F_i = 2 v_i^2 (k_i - C(v_i)) + 2 eps k_i.
inline std::vector<double> grad_u(const FieldState& s, const ModelParams& p) {
    const int n = s.size();
    const double h = s.h();
    std::vector<double> flux(s.grid.size());
    for (int i = 0; i < n; ++i) {
        const double k = s.kappa(i);
        const double vi = s.v[i];
        flux[i] = 2.0 * vi * vi * (k - p.curvature_spec.value(vi)) + 2.0 * p.eps * k;
    }
    std::vector<double> g(s.grid.size());
    for (int j = 0; j < n; ++j) g[j] = (flux[j == 0 ? n - 1 : j - 1] - flux[j]) / h;
    return g;
}

/// Exact L2 gradient (1/h) dE/dv_j of the discrete energy.
inline std::vector<double> grad_v(const FieldState& s, const ModelParams& p) {
    const int n = s.size();
    const double h = s.h();
    const double eps = p.eps;
    std::vector<double> g(s.grid.size());
    for (int j = 0; j < n; ++j) {
        const double vj = s.v[j];
        const double k = s.kappa(j);
        const auto c = p.curvature_spec.eval(vj);
        const double dev = k - c.value;
        const double prev = s.v[j == 0 ? n - 1 : j - 1];
        const double next = s.v[j + 1 == n ? 0 : j + 1];
        g[j] = 2.0 * vj * dev * dev - 2.0 * vj * vj * dev * c.derivative + p.potential.derivative(vj) / eps +
               2.0 * eps * (2.0 * vj - next - prev) / (h * h);
    }
    return g;
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b, double h) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return h * s;
}

/// Solves the symmetric 2x2 system G x = r; throws when G is ill-conditioned.
inline std::array<double, 2> solve_gram(const std::array<double, 4>& G, const std::array<double, 2>& r,
                                        double condition_limit) {
    const double tr = G[0] + G[3];
    const double det = G[0] * G[3] - G[1] * G[2];
    const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    const double lmax = 0.5 * tr + disc;
    const double lmin = 0.5 * tr - disc;
    if (!(lmin > 0.0) || lmax / lmin > condition_limit)
        throw FlowError("closure Gram matrix is singular (degenerate tangent distribution)");
    return {(G[3] * r[0] - G[1] * r[1]) / det, (G[0] * r[1] - G[2] * r[0]) / det};
}

inline std::array<std::vector<double>, 2> constraint_gradients(std::span<const double> u) {
    std::array<std::vector<double>, 2> ab{std::vector<double>(u.size()), std::vector<double>(u.size())};
    for (std::size_t i = 0; i < u.size(); ++i) {
        ab[0][i] = -std::sin(u[i]);
        ab[1][i] = std::cos(u[i]);
    }
    return ab;
}

}  // namespace detail

/// Discrete L2 Gram matrix of the closure gradients {-sin u, cos u}, row-major.
inline std::array<double, 4> closure_gram(const FieldState& s) {
    const auto ab = detail::constraint_gradients(s.u);
    const double h = s.h();
    const double g01 = detail::dot(ab[0], ab[1], h);
    return {detail::dot(ab[0], ab[0], h), g01, g01, detail::dot(ab[1], ab[1], h)};
}

struct ClosureProjection {
    std::vector<double> projected;
    std::array<double, 2> multipliers;
};

/// raw + l1 (-sin u) + l2 (cos u), L2-orthogonal to both closure gradients.
inline ClosureProjection project_closure(const FieldState& s, std::span<const double> raw,
                                         double condition_limit = 1e12) {
    if (raw.size() != s.grid.size()) throw std::invalid_argument("gradient size does not match the grid");
    const auto ab = detail::constraint_gradients(s.u);
    const double h = s.h();
    const auto G = closure_gram(s);
    const auto lambda =
        detail::solve_gram(G, {-detail::dot(raw, ab[0], h), -detail::dot(raw, ab[1], h)}, condition_limit);
    ClosureProjection out{std::vector<double>(raw.begin(), raw.end()), lambda};
    for (std::size_t i = 0; i < raw.size(); ++i) out.projected[i] += lambda[0] * ab[0][i] + lambda[1] * ab[1][i];
    return out;
}

/// Minimal-norm Newton iteration on (h sum cos u, h sum sin u) = target.
/// Returns the number of iterations used.
inline int newton_closure(std::vector<double>& u, double h, double tol, Point target = {0.0, 0.0},
                          int max_iter = 30) {
    for (int it = 0; it <= max_iter; ++it) {
        const auto c = closure_defect(u, h);
        const Point F{c[0] - target[0], c[1] - target[1]};
        if (norm(F) <= tol) return it;
        if (it == max_iter) break;
        double ss = 0.0, cc = 0.0, sc = 0.0;
        for (double a : u) {
            const double sn = std::sin(a), cs = std::cos(a);
            ss += sn * sn;
            cc += cs * cs;
            sc += sn * cs;
        }
        // J = h [-sin u; cos u];  J J^T = h^2 [[ss, -sc], [-sc, cc]].
        const double h2 = h * h;
        const std::array<double, 4> JJt{h2 * ss, -h2 * sc, -h2 * sc, h2 * cc};
        const auto y = detail::solve_gram(JJt, {F[0], F[1]}, 1e14);
        for (double& a : u) a -= h * (-std::sin(a) * y[0] + std::cos(a) * y[1]);
    }
    throw FlowError("closure re-projection did not converge");
}

/// One IMEX step of the coupled flow.
///
/// u: L2 flow restricted to the tangent space of the closure constraint.  The
///    second-order part 2 (eps + max v^2) (-Delta_h) is implicit with weight theta;
///    the multipliers make the increment orthogonal to {-sin u, cos u}.
/// v: H^{-1} flow v_t = Delta_h(dE/dv) when the volume constraint is active,
///    L2 flow otherwise.  The fourth-order part 2 eps Delta_h^2 is implicit with
///    weight theta; nonlinear terms are explicit with a linear stabiliser S_v
///    bounding their diagonal Hessian.
class FlowStepper {
public:
    FlowStepper(const Grid& grid, ModelParams params, FlowParams fp)
        : grid_(grid), params_(std::move(params)), fp_(fp), solver_(grid) {
        params_.validate();
        fp_.validate();
    }

    struct Trial {
        FieldState state;
        double max_change;
    };

    Trial step(const FieldState& s, double dt, long step_index) {
        const double h = s.h();
        const double theta = fp_.implicit_theta;
        const double eps = params_.eps;
        const int n = s.size();

        // Tangent angle.
        const auto g = grad_u(s, params_);
        double vmax2 = 0.0;
        for (double x : s.v) vmax2 = std::max(vmax2, x * x);
        const double a_u = 2.0 * theta * (eps + vmax2);
        auto mu = [&](double lam) { return 1.0 + dt * a_u * lam; };
        const auto ab = detail::constraint_gradients(s.u);
        const auto zg = solver_.solve(g, mu);
        const auto za = solver_.solve(ab[0], mu);
        const auto zb = solver_.solve(ab[1], mu);
        const std::array<double, 4> G{detail::dot(ab[0], za, h), detail::dot(ab[0], zb, h), detail::dot(ab[1], za, h),
                                      detail::dot(ab[1], zb, h)};
        const auto lambda = detail::solve_gram(G, {-detail::dot(ab[0], zg, h), -detail::dot(ab[1], zg, h)},
                                               fp_.gram_condition_limit);

        FieldState next = s;
        double change = 0.0;
        for (int i = 0; i < n; ++i) {
            const double du = -dt * (zg[i] + lambda[0] * za[i] + lambda[1] * zb[i]);
            next.u[i] += du;
            change = std::max(change, std::abs(du));
        }

        // Phase field.
        const auto muv = grad_v(s, params_);
        const double sv = stabiliser(s);
        std::vector<double> dv;
        if (params_.volume_constraint_active) {
            const auto rhs = periodic_laplacian(muv, h);
            dv = solver_.solve(rhs, [&](double lam) { return 1.0 + dt * lam * (2.0 * theta * eps * lam + sv); });
            double mean = 0.0;
            for (double x : dv) mean += x;
            mean /= n;
            for (double& x : dv) x = dt * (x - mean);
        } else {
            dv = solver_.solve(muv, [&](double lam) { return 1.0 + dt * (2.0 * theta * eps * lam + sv); });
            for (double& x : dv) x *= -dt;
        }
        double vchange = 0.0;
        for (int i = 0; i < n; ++i) {
            next.v[i] += dv[i];
            vchange = std::max(vchange, std::abs(dv[i]));
        }

        if (next.finite()) {
            const double drift = norm(closure_defect(next));
            const bool scheduled = fp_.projection_interval > 0 && step_index % fp_.projection_interval == 0;
            if (drift > 0.5 * fp_.closure_tol || (scheduled && drift > 1e-14 * grid_.length))
                newton_closure(next.u, h, std::min(1e-3 * fp_.closure_tol, 1e-13 * grid_.length));
        }
        return {std::move(next), change + vchange};
    }

    [[nodiscard]] const ModelParams& params() const { return params_; }
    [[nodiscard]] const FlowParams& flow_params() const { return fp_; }

private:
    /// Upper bound of the diagonal Hessian of the explicit part of dE/dv.
    [[nodiscard]] double stabiliser(const FieldState& s) const {
        double best = 0.0;
        const double eps = params_.eps;
        const auto& cs = params_.curvature_spec;
        for (int i = 0; i < s.size(); ++i) {
            const double v = s.v[i];
            const double k = s.kappa(i);
            const auto c = cs.eval(v);
            double c2 = 0.0;
            if (v > -1.0 && v < 1.0) c2 = 1.5 * (cs.c_plus - cs.c_minus) * (1.0 - 2.0 * (0.5 * (v + 1.0)));
            const double dev = k - c.value;
            const double d = 2.0 * dev * dev - 8.0 * v * dev * c.derivative + 2.0 * v * v * c.derivative * c.derivative -
                             2.0 * v * v * dev * c2 + params_.potential.second_derivative(v) / eps;
            best = std::max(best, d);
        }
        return fp_.implicit_theta * best;
    }

    Grid grid_;
    ModelParams params_;
    FlowParams fp_;
    PeriodicSpectralSolver solver_;
};

/// Single step at fp.dt without the step-size safeguard.
inline FieldState step_flow(const FieldState& s, const ModelParams& params, const FlowParams& fp) {
    FlowStepper stepper(s.grid, params, fp);
    return stepper.step(s, fp.dt, 1).state;
}

using SnapshotHook = std::function<void(long step, double time, const FieldState&, const EnergyBreakdown&)>;

inline double mass_reference(const FieldState& s, const ModelParams& p) {
    return p.volume_constraint_active ? p.mean() * s.grid.length : s.mass();
}

/// Iterates the flow until convergence, max_steps or numerical failure.  Never
/// throws on numerical failure; a non-finite state or an energy increase that
/// survives max_halvings step halvings ends the run with stop_reason blow_up.
inline FlowResult run_flow(const FieldState& initial, const ModelParams& params, const FlowParams& fp,
                           const SnapshotHook& hook = {}) {
    FlowStepper stepper(initial.grid, params, fp);
    FlowResult result{initial, {}, StopReason::max_steps, 0, 0, {}};
    FieldState& s = result.final;
    const double mass_ref = mass_reference(initial, params);

    auto energy = energy_eps(s, params);
    double time = 0.0;
    auto log = [&](long step) {
        result.energy_log.push_back({step, time, energy, s.mass() - mass_ref, closure_defect(s)});
    };
    log(0);
    long last_hook = -1;
    if (hook) {
        hook(0, 0.0, s, energy);
        last_hook = 0;
    }

    double dt = fp.dt;
    int small_steps = 0;
    long accepted_since_cut = 0;
    long step = 0;
    bool done = false;
    while (!done && step < fp.max_steps) {
        ++step;
        FlowStepper::Trial trial{s, 0.0};
        EnergyBreakdown trial_energy;
        bool accepted = false;
        for (int attempt = 0; attempt <= fp.max_halvings; ++attempt) {
            try {
                trial = stepper.step(s, dt, step);
            } catch (const FlowError& e) {
                result.stop_reason = StopReason::blow_up;
                result.message = e.what();
                done = true;
                break;
            }
            if (!trial.state.finite()) {
                result.stop_reason = StopReason::blow_up;
                result.message = "non-finite values at step " + std::to_string(step) + " (dt=" + std::to_string(dt) + ")";
                done = true;
                break;
            }
            trial_energy = energy_eps(trial.state, params);
            if (std::isfinite(trial_energy.total) &&
                trial_energy.total <= energy.total + 1e-12 * (1.0 + std::abs(energy.total))) {
                accepted = true;
                break;
            }
            ++result.rejected_steps;
            dt *= 0.5;
            accepted_since_cut = 0;
        }
        if (!accepted) {
            if (!done) {
                result.stop_reason = StopReason::blow_up;
                result.message = "energy increase persists after " + std::to_string(fp.max_halvings) + " step halvings";
                done = true;
            }
            --step;
            break;
        }

        const double decrease = energy.total - trial_energy.total;
        s = std::move(trial.state);
        energy = trial_energy;
        time += dt;
        result.steps = step;

        if (trial.max_change <= fp.stationary_tol * dt) {
            result.stop_reason = StopReason::converged;
            done = true;
        } else if (decrease < fp.energy_tol * dt) {
            if (++small_steps >= fp.patience) {
                result.stop_reason = StopReason::converged;
                done = true;
            }
        } else {
            small_steps = 0;
        }

        if (done || step % fp.log_every == 0) log(step);
        if (hook && (done || (fp.snapshot_every > 0 && step % fp.snapshot_every == 0))) {
            hook(step, time, s, energy);
            last_hook = step;
        }

        if (dt < fp.dt && ++accepted_since_cut >= 20) {
            dt = std::min(fp.dt, 2.0 * dt);
            accepted_since_cut = 0;
        }
    }
    if (result.energy_log.back().step != result.steps) log(result.steps);
    if (hook && last_hook != result.steps) hook(result.steps, time, s, energy);
    return result;
}

}  // namespace kinkflow
