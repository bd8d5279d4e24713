#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "kinkflow/field_state.hpp"
#include "kinkflow/flow.hpp"
#include "kinkflow/model.hpp"
#include "kinkflow/profile.hpp"
#include "kinkflow/sharp_state.hpp"

namespace kinkflow {

class RecoveryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Standard C-infinity bump exp(-1/(1-x^2)) moved to (a, b); zero outside.
inline double bump(double t, double a, double b) {
    const double x = (2.0 * t - a - b) / (b - a);
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - x * x));
}

/// Two correction directions for the closure of one kink patch.
struct ClosureBasis {
    std::vector<double> f;  // empty in the degenerate (jump pi) case
    std::vector<double> g;
    double condition = 1.0;

    [[nodiscard]] bool degenerate() const { return f.empty(); }
};

struct ClosureCorrection {
    std::vector<double> corrected;
    double alpha = 0.0;
    double beta = 0.0;
    int iterations = 0;
};

namespace detail {

inline double weighted(std::span<const double> phi, std::span<const double> u, double h, bool use_sin) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += phi[i] * (use_sin ? std::sin(u[i]) : std::cos(u[i]));
    return h * s;
}

inline double condition_2x2(double a, double b, double c, double d) {
    const double fro = a * a + b * b + c * c + d * d;
    const double det = std::abs(a * d - b * c);
    if (det == 0.0) return std::numeric_limits<double>::infinity();
    const double disc = std::sqrt(std::max(0.0, fro * fro - 4.0 * det * det));
    return std::sqrt((fro + disc) / (fro - disc));
}

}  // namespace detail

/// Builds f, g from two candidate bumps with T_c g = 1, T_c f = 0 and T_s f = 1,
/// where T_s phi = int phi sin u and T_c phi = int phi cos u.  The candidate
/// order giving the better conditioned Jacobian wins.  When T_c vanishes on
/// both candidates, g is the antisymmetric combination normalised by T_s g = 1
/// and f is left empty.
inline ClosureBasis closure_basis(std::span<const double> u, double h, std::span<const double> phi_left,
                                  std::span<const double> phi_right) {
    using detail::weighted;
    const std::span<const double> cand[2] = {phi_left, phi_right};
    double tc[2];
    for (int k = 0; k < 2; ++k) tc[k] = weighted(cand[k], u, h, false);
    const std::size_t n = u.size();
    if (std::abs(tc[0]) < 1e-10 && std::abs(tc[1]) < 1e-10) {
        ClosureBasis b;
        b.g.resize(n);
        for (std::size_t i = 0; i < n; ++i) b.g[i] = phi_right[i] - phi_left[i];
        const double s = weighted(b.g, u, h, true);
        if (std::abs(s) < 1e-14) throw RecoveryError("closure basis: antisymmetric bump has T_s g = 0");
        for (double& x : b.g) x /= s;
        return b;
    }
    std::optional<ClosureBasis> best;
    for (int a = 0; a < 2; ++a) {
        const int o = 1 - a;
        if (std::abs(tc[a]) < 1e-10) continue;
        ClosureBasis b;
        b.g.resize(n);
        b.f.resize(n);
        for (std::size_t i = 0; i < n; ++i) b.g[i] = cand[a][i] / tc[a];
        for (std::size_t i = 0; i < n; ++i) b.f[i] = cand[o][i] - tc[o] * b.g[i];
        const double sf = weighted(b.f, u, h, true);
        if (std::abs(sf) < 1e-14) continue;
        for (double& x : b.f) x /= sf;
        b.condition = detail::condition_2x2(1.0, weighted(b.g, u, h, true), weighted(b.f, u, h, false), 1.0);
        if (!best || b.condition < best->condition) best = std::move(b);
    }
    if (!best) throw RecoveryError("closure basis: T_s and T_c have a common kernel on the chosen bumps");
    return *best;
}

/// Newton iteration for (alpha, beta) such that u + alpha f + beta g has the
/// tangent integrals (C0, S0).  Degenerate bases solve the cosine equation only.
inline ClosureCorrection correct_closure(std::span<const double> u, double h, Point target, const ClosureBasis& basis,
                                         double tol = 1e-12, int max_iter = 50) {
    const std::size_t n = u.size();
    if (basis.g.size() != n || (!basis.degenerate() && basis.f.size() != n))
        throw std::invalid_argument("closure basis does not match the patch");
    ClosureCorrection out{std::vector<double>(u.begin(), u.end()), 0.0, 0.0, 0};
    std::vector<double> w(n);
    for (int it = 0; it <= max_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i)
            w[i] = u[i] + out.beta * basis.g[i] + (basis.degenerate() ? 0.0 : out.alpha * basis.f[i]);
        const auto cs = closure_defect(w, h);
        const double p1 = target[0] - cs[0];
        const double p2 = cs[1] - target[1];
        const double res = basis.degenerate() ? std::abs(p1) : std::hypot(p1, p2);
        if (res <= tol) {
            out.corrected = w;
            out.iterations = it;
            return out;
        }
        if (it == max_iter) break;
        const double sg = detail::weighted(basis.g, w, h, true);
        if (basis.degenerate()) {
            out.beta -= p1 / sg;
            continue;
        }
        const double sf = detail::weighted(basis.f, w, h, true);
        const double cf = detail::weighted(basis.f, w, h, false);
        const double cg = detail::weighted(basis.g, w, h, false);
        const double cond = detail::condition_2x2(sf, sg, cf, cg);
        if (cond > 1e8)
            throw RecoveryError("closure Jacobian condition number " + std::to_string(cond) +
                                " exceeds 1e8; place the correction bumps elsewhere");
        const double det = sf * cg - sg * cf;
        out.alpha -= (cg * p1 - sg * p2) / det;
        out.beta -= (sf * p2 - cf * p1) / det;
    }
    throw RecoveryError("closure correction did not converge in " + std::to_string(max_iter) + " iterations");
}

struct VolumeCorrection {
    std::vector<double> corrected;
    double gamma = 0.0;
};

/// v + gamma * bump with gamma = target - h sum v; bump has unit discrete integral.
inline VolumeCorrection correct_volume(std::span<const double> v, double h, double target_mass,
                                       std::span<const double> unit_bump) {
    if (unit_bump.size() != v.size()) throw std::invalid_argument("volume bump does not match the grid");
    double mass = 0.0;
    for (double x : v) mass += x;
    mass *= h;
    VolumeCorrection out{std::vector<double>(v.begin(), v.end()), target_mass - mass};
    for (std::size_t i = 0; i < v.size(); ++i) out.corrected[i] += out.gamma * unit_bump[i];
    return out;
}

/// Bump on the node interval (a, b) of a periodic grid scaled to h sum = 1.
inline std::vector<double> plateau_bump(const Grid& grid, double a, double b) {
    if (b - a < 8.0 * grid.spacing) throw RecoveryError("no phase plateau wide enough for the volume correction");
    std::vector<double> out(grid.size(), 0.0);
    double total = 0.0;
    const auto first = static_cast<long>(std::floor(a / grid.spacing));
    const auto last = static_cast<long>(std::ceil(b / grid.spacing));
    for (long i = first; i <= last; ++i) {
        const double val = bump(grid.spacing * static_cast<double>(i), a, b);
        out[grid.wrap_index(i)] += val;
        total += val;
    }
    for (double& x : out) x /= grid.spacing * total;
    return out;
}

/// Reconstruction data for one junction.
struct KinkPatch {
    double center = 0.0;      // arclength of the junction
    double half_width = 0.0;  // delta_eps
    double jump = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double u_half_width = 0.0;  // extent of the closure patch
    double v_half_width = 0.0;  // distance at which v returns to +-1
    long first_cell = 0;        // unwrapped index of the first u sample in the patch
    ClosureBasis correction_basis;
};

struct RecoveryResult {
    FieldState state;
    std::vector<KinkPatch> patches;
    double gamma = 0.0;
    int cleanup_iterations = 0;
};

namespace detail {

inline std::string suggest_eps(double eps) {
    std::ostringstream os;
    os << "patches overlap at eps = " << eps << "; use a smaller eps (e.g. " << eps / 4.0 << ")";
    return os.str();
}

}  // namespace detail

/// Recovery sequence for a sharp state on the given grid: u follows the sharp
/// angle except on the inner kink intervals, where it is interpolated
/// linearly and then corrected for closure; v is +-1 away from junctions and
/// follows p_eps around each one.  The volume correction runs when the
/// constraint is active.
inline RecoveryResult build_recovery_detailed(const SharpState& sharp, double eps, const Grid& grid,
                                              const ModelParams& params, double patch_factor = 10.0) {
    validate_geometry(sharp, params);
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const double L = sharp.length();
    if (std::abs(grid.length - L) > 1e-12 * L) throw std::invalid_argument("grid length differs from the sharp length");
    const double h = grid.spacing;
    const int n = grid.n_points;
    const SharpAngle angle(sharp);
    const int w = angle.winding();

    const ProfileTable profile = optimal_profile(params.potential, profile_extent(eps));
    const std::size_t nj = sharp.junctions.size();
    std::vector<double> centers(nj);
    std::vector<PEps> p_eps;
    p_eps.reserve(nj);
    for (std::size_t j = 0; j < nj; ++j) {
        centers[j] = sharp.junction_position(j);
        const double d = sharp.junctions[j].jump > 0.0 ? delta_eps(sharp.junctions[j].jump, params.potential, eps) : 0.0;
        p_eps.push_back(build_p_eps(eps, d, profile));
    }

    std::vector<KinkPatch> patches(nj);
    const double collar = std::sqrt(eps) + eps + h;
    for (std::size_t j = 0; j < nj; ++j) {
        auto& pt = patches[j];
        pt.center = centers[j];
        pt.jump = sharp.junctions[j].jump;
        pt.half_width = p_eps[j].delta();
        pt.v_half_width = p_eps[j].support();
        const double gap_prev = nj == 1 ? L : centers[j] - (j == 0 ? centers[nj - 1] - L : centers[j - 1]);
        const double gap_next = nj == 1 ? L : (j + 1 == nj ? centers[0] + L : centers[j + 1]) - centers[j];
        pt.u_half_width = std::min({patch_factor * collar, 0.5 * gap_prev, 0.5 * gap_next});
        if (pt.v_half_width + h > 0.5 * std::min(gap_prev, gap_next)) throw RecoveryError(detail::suggest_eps(eps));
        if (pt.jump > 0.0) {
            if (2.0 * pt.half_width < 8.0 * h)
                throw RecoveryError("grid too coarse: the kink interval needs at least 8 points (n >= " +
                                    std::to_string(static_cast<long>(std::ceil(4.0 * L / pt.half_width))) + ")");
            if (pt.u_half_width < pt.v_half_width + 8.0 * h) throw RecoveryError(detail::suggest_eps(eps));
        }
    }

    // u at cell midpoints; cell index i may run past [0, n) inside a patch.
    std::vector<double> u(grid.size());
    for (int i = 0; i < n; ++i) u[i] = angle(grid.midpoint(i));
    auto shift = [&](long i) { return two_pi * w * static_cast<double>((i - grid.wrap_index(i)) / n); };

    for (std::size_t j = 0; j < nj; ++j) {
        auto& pt = patches[j];
        if (pt.jump == 0.0) continue;
        const double s = pt.center, d = pt.half_width, W = pt.u_half_width, V = pt.v_half_width;
        const double left = angle(s - d), right = angle(s + d);
        const double frame = 0.5 * (left + right);
        pt.first_cell = static_cast<long>(std::ceil((s - W) / h + 0.5));
        const long last_cell = static_cast<long>(std::floor((s + W) / h + 0.5));
        const auto m = static_cast<std::size_t>(last_cell - pt.first_cell + 1);
        std::vector<double> local(m), phi_l(m), phi_r(m);
        for (std::size_t k = 0; k < m; ++k) {
            const long i = pt.first_cell + static_cast<long>(k);
            const double t = h * (static_cast<double>(i) - 0.5);
            const double a = std::abs(t - s) <= d ? left + (right - left) * (t - s + d) / (2.0 * d) : angle(t);
            local[k] = a - frame;
            phi_l[k] = bump(t, s - W, s - V);
            phi_r[k] = bump(t, s + V, s + W);
        }
        const double lo = h * (static_cast<double>(pt.first_cell) - 1.0), hi = h * static_cast<double>(last_cell);
        const Point exact = angle.tangent_integral(lo, hi);
        const Point target{std::cos(frame) * exact[0] + std::sin(frame) * exact[1],
                           -std::sin(frame) * exact[0] + std::cos(frame) * exact[1]};
        pt.correction_basis = closure_basis(local, h, phi_l, phi_r);
        const auto fix = correct_closure(local, h, target, pt.correction_basis);
        pt.alpha = fix.alpha;
        pt.beta = fix.beta;
        for (std::size_t k = 0; k < m; ++k) {
            const long i = pt.first_cell + static_cast<long>(k);
            u[grid.wrap_index(i)] = fix.corrected[k] + frame - shift(i);
        }
    }

    std::vector<double> v(grid.size());
    for (int i = 0; i < n; ++i) {
        const double t = grid.node(i);
        double level = 1.0;
        for (std::size_t j = 0; j < nj; ++j) {
            const double r = std::abs(grid.wrap_signed(t - centers[j]));
            if (r < patches[j].v_half_width) level = std::min(level, p_eps[j](r));
        }
        v[i] = angle.phase_at(t) * level;
    }

    RecoveryResult out;
    out.cleanup_iterations = newton_closure(u, h, 1e-11 * L);
    out.state = FieldState(grid, std::move(u), w, std::move(v));

    if (params.volume_constraint_active) {
        double best_len = -1.0, best_a = 0.0, best_b = 0.0;
        for (std::size_t k = 0; k < sharp.segments.size(); ++k) {
            double a = angle.segment_start(k), b = a + sharp.segments[k].length;
            if (nj > 0) {
                a += patches[(k + nj - 1) % nj].v_half_width;
                b -= patches[k].v_half_width;
            }
            if (b - a > best_len) {
                best_len = b - a;
                best_a = a;
                best_b = b;
            }
        }
        const auto unit = plateau_bump(grid, best_a, best_b);
        auto fix = correct_volume(out.state.v, h, params.mean() * L, unit);
        out.state.v = std::move(fix.corrected);
        out.gamma = fix.gamma;
    }
    out.patches = std::move(patches);
    return out;
}

inline FieldState build_recovery(const SharpState& sharp, double eps, const Grid& grid, const ModelParams& params,
                                 double patch_factor = 10.0) {
    return build_recovery_detailed(sharp, eps, grid, params, patch_factor).state;
}

/// h sum over nodes of the inner kink interval of eps k^2 + v^2 (k - C(v))^2 + Phi(v)/eps;
/// the gradient of v belongs to the adjacent transitions and is left out.
inline double kink_patch_energy(const FieldState& s, const ModelParams& params, const KinkPatch& patch) {
    const double h = s.h();
    const auto first = static_cast<long>(std::ceil((patch.center - patch.half_width) / h));
    const auto last = static_cast<long>(std::floor((patch.center + patch.half_width) / h));
    double e = 0.0;
    for (long j = first; j <= last; ++j) {
        const int i = s.grid.wrap_index(j);
        const double k = s.kappa(i), v = s.v[i];
        const double c = params.curvature_spec.value(v);
        e += params.eps * k * k + v * v * (k - c) * (k - c) + params.potential.value(v) / params.eps;
    }
    return h * e;
}

/// Discrete energy int eps u'^2 + Phi(0)/eps over a straight kink of half-angle
/// ubar smoothed linearly on (-delta, delta), sampled with spacing h.
inline double straight_kink_patch_energy(double ubar, double delta, const PotentialSpec& pot, double eps, double h) {
    const auto cells = static_cast<long>(std::ceil(delta / h)) + 2;
    auto angle = [&](double t) { return std::abs(t) <= delta ? ubar * t / delta : (t < 0.0 ? -ubar : ubar); };
    double e = 0.0;
    for (long i = -cells; i <= cells; ++i) {
        const double t = h * static_cast<double>(i);
        const double k = (angle(t + 0.5 * h) - angle(t - 0.5 * h)) / h;
        e += eps * k * k;
        if (std::abs(t) <= delta) e += pot.value(0.0) / eps;
    }
    return h * e;
}

}  // namespace kinkflow
