#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kinkflow/field_state.hpp"
#include "kinkflow/model.hpp"

namespace kinkflow {

enum class JunctionKind { interface, ghost, plain_interface };

inline std::string_view to_string(JunctionKind k) {
    switch (k) {
        case JunctionKind::interface: return "interface";
        case JunctionKind::ghost: return "ghost";
        case JunctionKind::plain_interface: return "plain_interface";
    }
    return "?";
}

inline JunctionKind parse_junction_kind(std::string_view s) {
    if (s == "interface") return JunctionKind::interface;
    if (s == "ghost") return JunctionKind::ghost;
    if (s == "plain_interface" || s == "plain") return JunctionKind::plain_interface;
    throw std::invalid_argument("unknown junction kind '" + std::string(s) + "'");
}

/// A smooth piece of the limit curve.  The curvature profile holds cell
/// averages over an even partition of the segment (piecewise constant, so a
/// single value describes a circular arc).
struct Segment {
    double length = 0.0;
    int phase = 1;
    std::vector<double> curvature_profile;

    [[nodiscard]] double piece_length() const { return length / static_cast<double>(curvature_profile.size()); }

    [[nodiscard]] double turning() const {
        return piece_length() * std::accumulate(curvature_profile.begin(), curvature_profile.end(), 0.0);
    }
};

/// Point of S_q u S_v.  jump is the enclosed tangent angle |[q']| in [0, pi];
/// turn gives the rotation sense (+1 counter-clockwise) needed to rebuild the curve.
struct Junction {
    double jump = 0.0;
    JunctionKind kind = JunctionKind::plain_interface;
    int turn = 1;

    [[nodiscard]] double signed_jump() const { return turn * jump; }
};

/// Piecewise description of a sharp-interface limit curve.  Junction i sits at
/// the end of segment i and separates it from segment (i+1) mod N.  Arclength
/// zero is the start of segment 0.
struct SharpState {
    std::vector<Segment> segments;
    std::vector<Junction> junctions;

    [[nodiscard]] std::size_t size() const { return segments.size(); }

    [[nodiscard]] double length() const {
        double s = 0.0;
        for (const auto& seg : segments) s += seg.length;
        return s;
    }

    [[nodiscard]] const Segment& after(std::size_t junction) const {
        return segments[(junction + 1) % segments.size()];
    }

    /// Arclength position of junction i (end of segment i).
    [[nodiscard]] double junction_position(std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += segments[k].length;
        return s;
    }

    [[nodiscard]] double total_turning() const {
        double t = 0.0;
        for (const auto& seg : segments) t += seg.turning();
        for (const auto& j : junctions) t += j.signed_jump();
        return t;
    }

    [[nodiscard]] int winding() const { return static_cast<int>(std::lround(total_turning() / two_pi)); }

    [[nodiscard]] double mass() const {
        double m = 0.0;
        for (const auto& seg : segments) m += seg.phase * seg.length;
        return m;
    }
};

/// Checks segment/junction bookkeeping: lengths, phases, jump ranges and the
/// phase relation each junction kind requires.
inline void validate_structure(const SharpState& s) {
    if (s.segments.empty()) throw std::invalid_argument("sharp state has no segments");
    if (s.junctions.empty()) {
        if (s.segments.size() != 1)
            throw std::invalid_argument("several segments need a junction between each pair");
    } else if (s.junctions.size() != s.segments.size()) {
        throw std::invalid_argument("a closed sharp state needs exactly one junction per segment");
    }
    for (std::size_t i = 0; i < s.segments.size(); ++i) {
        const auto& seg = s.segments[i];
        if (!(seg.length > 0.0) || !std::isfinite(seg.length))
            throw std::invalid_argument("segment " + std::to_string(i) + " has non-positive length");
        if (seg.phase != 1 && seg.phase != -1)
            throw std::invalid_argument("segment " + std::to_string(i) + " phase must be +1 or -1");
        if (seg.curvature_profile.empty())
            throw std::invalid_argument("segment " + std::to_string(i) + " has an empty curvature profile");
        for (double k : seg.curvature_profile)
            if (!std::isfinite(k)) throw std::invalid_argument("non-finite curvature sample");
    }
    for (std::size_t i = 0; i < s.junctions.size(); ++i) {
        const auto& j = s.junctions[i];
        const std::string where = "junction " + std::to_string(i);
        if (!(j.jump >= 0.0 && j.jump <= pi)) throw std::invalid_argument(where + " jump outside [0, pi]");
        if (j.turn != 1 && j.turn != -1) throw std::invalid_argument(where + " turn must be +1 or -1");
        const bool phase_change = s.segments[i].phase != s.after(i).phase;
        switch (j.kind) {
            case JunctionKind::interface:
                if (!phase_change) throw std::invalid_argument(where + " is an interface without a phase change");
                break;
            case JunctionKind::plain_interface:
                if (!phase_change) throw std::invalid_argument(where + " is an interface without a phase change");
                if (j.jump != 0.0) throw std::invalid_argument(where + " is a plain interface with a nonzero jump");
                break;
            case JunctionKind::ghost:
                if (phase_change) throw std::invalid_argument(where + " is a ghost junction across a phase change");
                if (!(j.jump > 0.0)) throw std::invalid_argument(where + " is a ghost junction without a kink");
                break;
        }
    }
}

/// Evaluates the (unwrapped) tangent angle and tangent integrals of a sharp
/// state.  Angles continue periodically: angle(t + L) = angle(t) + 2 pi w.
class SharpAngle {
public:
    explicit SharpAngle(const SharpState& s, double start_angle = 0.0) : state_(&s) {
        validate_structure(s);
        double t = 0.0, a = start_angle;
        for (std::size_t k = 0; k < s.segments.size(); ++k) {
            const auto& seg = s.segments[k];
            seg_starts_.push_back(t);
            const double ell = seg.piece_length();
            for (std::size_t j = 0; j < seg.curvature_profile.size(); ++j) {
                const double len = j + 1 == seg.curvature_profile.size() ? seg.length - ell * static_cast<double>(j) : ell;
                pieces_.push_back({t + ell * static_cast<double>(j), len, a, seg.curvature_profile[j], k});
                a += len * seg.curvature_profile[j];
            }
            t += seg.length;
            if (!s.junctions.empty()) a += s.junctions[k].signed_jump();
        }
        length_ = t;
        period_shift_ = a - start_angle;
        winding_ = static_cast<int>(std::lround(period_shift_ / two_pi));
    }

    [[nodiscard]] double length() const { return length_; }
    [[nodiscard]] int winding() const { return winding_; }
    /// Turning accumulated over one period (2 pi w for a consistent state).
    [[nodiscard]] double period_turning() const { return period_shift_; }
    [[nodiscard]] double segment_start(std::size_t k) const { return seg_starts_[k]; }

    /// Angle at arclength t (right-continuous at junctions).
    [[nodiscard]] double operator()(double t) const {
        const auto [periods, t0] = split(t);
        const auto& p = pieces_[locate(t0)];
        return p.angle + p.kappa * (t0 - p.start) + periods * period_shift_;
    }

    /// Angle approaching t from below (left limit at junctions).
    [[nodiscard]] double left_limit(double t) const {
        auto [periods, t0] = split(t);
        if (t0 == 0.0) {
            t0 = length_;
            periods -= 1.0;
        }
        auto it = std::lower_bound(pieces_.begin(), pieces_.end(), t0,
                                   [](const Piece& p, double x) { return p.start < x; });
        const auto& p = *(it == pieces_.begin() ? it : it - 1);
        return p.angle + p.kappa * (t0 - p.start) + periods * period_shift_;
    }

    [[nodiscard]] int phase_at(double t) const {
        return state_->segments[pieces_[locate(split(t).second)].segment].phase;
    }

    [[nodiscard]] std::size_t segment_at(double t) const { return pieces_[locate(split(t).second)].segment; }

    /// (int_a^b cos angle, int_a^b sin angle), exact for piecewise-constant curvature.
    [[nodiscard]] Point tangent_integral(double a, double b) const {
        if (b < a) {
            const auto r = tangent_integral(b, a);
            return {-r[0], -r[1]};
        }
        Point acc{0.0, 0.0};
        const auto first = static_cast<long>(std::floor(a / length_));
        const auto last = static_cast<long>(std::floor(b / length_));
        for (long per = first; per <= last; ++per) {
            const double offset = static_cast<double>(per) * length_;
            for (const auto& p : pieces_) {
                const double lo = std::max(a, offset + p.start);
                const double hi = std::min(b, offset + p.start + p.length);
                if (hi <= lo) continue;
                const double theta = p.angle + p.kappa * (lo - offset - p.start) + static_cast<double>(per) * period_shift_;
                const auto d = arc_increment(theta, p.kappa, hi - lo);
                acc[0] += d[0];
                acc[1] += d[1];
            }
        }
        return acc;
    }

    /// Curve point at arclength t for the curve starting at base.
    [[nodiscard]] Point point_at(double t, Point base = {0.0, 0.0}) const {
        const auto d = tangent_integral(0.0, t);
        return {base[0] + d[0], base[1] + d[1]};
    }

    /// Displacement along an arc of constant curvature kappa, initial angle theta.
    static Point arc_increment(double theta, double kappa, double len) {
        const double half = 0.5 * kappa * len;
        const double chord = std::abs(half) < 1e-6 ? len * (1.0 - half * half / 6.0) : 2.0 * std::sin(half) / kappa;
        return {chord * std::cos(theta + half), chord * std::sin(theta + half)};
    }

private:
    struct Piece {
        double start;
        double length;
        double angle;
        double kappa;
        std::size_t segment;
    };

    [[nodiscard]] std::pair<double, double> split(double t) const {
        const double periods = std::floor(t / length_);
        double t0 = t - periods * length_;
        if (t0 >= length_) t0 = 0.0;
        return {periods, t0};
    }

    [[nodiscard]] std::size_t locate(double t0) const {
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t0,
                                   [](double x, const Piece& p) { return x < p.start; });
        return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - pieces_.begin()) - 1));
    }

    const SharpState* state_;
    double length_ = 0.0;
    int winding_ = 0;
    double period_shift_ = 0.0;
    std::vector<double> seg_starts_;
    std::vector<Piece> pieces_;
};

struct SharpGeometryReport {
    double turning_defect;  // |total turning - 2 pi w|
    double closure_defect;  // |q(L) - q(0)|
    double mass_defect;     // |sum phase*length - m L|, 0 when the constraint is off
};

inline SharpGeometryReport sharp_geometry(const SharpState& s, const ModelParams& params) {
    SharpAngle angle(s);
    const double L = s.length();
    const double turning = angle.period_turning();
    const auto gap = angle.tangent_integral(0.0, L);
    double mass_defect = 0.0;
    if (params.volume_constraint_active) mass_defect = std::abs(s.mass() - params.mean() * L);
    return {std::abs(turning - two_pi * std::round(turning / two_pi)), norm(gap), mass_defect};
}

/// Requires closure, integer turning and (when active) the volume constraint,
/// each within rel_tol relative to L.
inline void validate_geometry(const SharpState& s, const ModelParams& params, double rel_tol = 1e-9) {
    validate_structure(s);
    const double L = s.length();
    const auto r = sharp_geometry(s, params);
    if (r.turning_defect > rel_tol * two_pi)
        throw std::invalid_argument("sharp state total turning is not a multiple of 2 pi");
    if (r.closure_defect > rel_tol * L) throw std::invalid_argument("sharp state curve does not close");
    if (r.mass_defect > std::max(rel_tol, 1e-12) * L)
        throw std::invalid_argument("sharp state violates the volume constraint");
}

/// Sharp limit energy: bending on the segments plus sigma + sigma_hat |[q']| per junction.
/// For the single-well potential sigma is undefined and only the kink term is charged.
inline EnergyBreakdown energy_sharp(const SharpState& s, const ModelParams& params) {
    validate_structure(s);
    double curv = 0.0;
    for (const auto& seg : s.segments) {
        const double c = params.curvature_spec.at_phase(seg.phase);
        double acc = 0.0;
        for (double k : seg.curvature_profile) acc += (k - c) * (k - c);
        curv += seg.piece_length() * acc;
    }
    const bool with_sigma = params.potential.symmetric();
    const double sig = with_sigma ? sigma(params.potential) : 0.0;
    const double sig_hat = sigma_hat(params.potential);
    double iface = 0.0;
    for (const auto& j : s.junctions) iface += sig + sig_hat * j.jump;
    return EnergyBreakdown::from_parts(curv, iface, 0.0);
}

/// Circle of radius R = L / (2 pi) split into equal-length arcs with alternating phases
/// separated by plain interfaces.  n_arcs = 1 gives a single-phase circle.
inline SharpState sharp_circle(double length, int n_arcs = 1, int first_phase = -1) {
    SharpState s;
    const double kappa = two_pi / length;
    for (int k = 0; k < n_arcs; ++k) {
        const int phase = n_arcs == 1 ? first_phase : (k % 2 == 0 ? first_phase : -first_phase);
        s.segments.push_back({length / n_arcs, phase, {kappa}});
        if (n_arcs > 1) s.junctions.push_back({0.0, JunctionKind::plain_interface, 1});
    }
    return s;
}

/// Two circular arcs sharing a chord: arc 0 turns theta0, arc 1 turns theta1,
/// joined by kinks of jump pi - (theta0 + theta1)/2.  Ghost junctions when the
/// phases agree, kinked interfaces otherwise.
inline SharpState sharp_lens(double radius0, double theta0, double theta1, int phase0 = 1, int phase1 = 1) {
    const double chord = 2.0 * radius0 * std::sin(0.5 * theta0);
    const double radius1 = chord / (2.0 * std::sin(0.5 * theta1));
    const double jump = pi - 0.5 * (theta0 + theta1);
    const JunctionKind kind = phase0 == phase1 ? JunctionKind::ghost : JunctionKind::interface;
    SharpState s;
    s.segments.push_back({radius0 * theta0, phase0, {1.0 / radius0}});
    s.junctions.push_back({jump, kind, 1});
    s.segments.push_back({radius1 * theta1, phase1, {1.0 / radius1}});
    s.junctions.push_back({jump, kind, 1});
    return s;
}

}  // namespace kinkflow
