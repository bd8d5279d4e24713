#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "kinkflow/energy.hpp"
#include "kinkflow/field_state.hpp"
#include "kinkflow/flow.hpp"
#include "kinkflow/model.hpp"
#include "kinkflow/profile.hpp"
#include "kinkflow/recovery.hpp"
#include "kinkflow/sharp_state.hpp"

namespace kinkflow {

struct DetectionThresholds {
    double zero_band = 0.1;       // |v| <= zero_band marks kink regions
    double interface_band = 0.5;  // a sign change must swing from <= -band to >= +band
    double min_separation = 0.0;  // closer interface positions are merged
    double max_component_length = std::numeric_limits<double>::infinity();
    double min_kink_jump = 0.05;  // smaller jumps at a sign change make a plain interface

    void validate() const {
        if (!(zero_band > 0.0 && zero_band < 1.0)) throw std::invalid_argument("zero_band must lie in (0, 1)");
        if (!(interface_band >= 0.0 && interface_band < 1.0))
            throw std::invalid_argument("interface_band must lie in [0, 1)");
        if (!(min_separation >= 0.0)) throw std::invalid_argument("min_separation must be non-negative");
        if (!(max_component_length > 0.0)) throw std::invalid_argument("max_component_length must be positive");
    }

    /// Defaults with the component length capped at a few transition collars.
    static DetectionThresholds for_eps(double eps) {
        DetectionThresholds th;
        th.max_component_length = 4.0 * (std::sqrt(eps) + eps);
        return th;
    }
};

namespace detail {

inline int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

/// First node index (cyclic) with |v| >= band, or -1.
inline int settled_node(const FieldState& s, double band) {
    for (int i = 0; i < s.size(); ++i)
        if (std::abs(s.v[i]) >= band && s.v[i] != 0.0) return i;
    return -1;
}

}  // namespace detail

/// Arclength positions of the sign changes of v.  A change is counted when v
/// swings across the hysteresis band; its position is the linearly
/// interpolated zero crossing, or the midpoint of the first and last
/// crossings when v rests at or wiggles around zero.
inline std::vector<double> detect_interfaces(const FieldState& s, const DetectionThresholds& th = {}) {
    th.validate();
    const int n = s.size();
    const double h = s.h();
    const double band = std::max(th.interface_band, std::numeric_limits<double>::min());
    std::vector<double> out;
    const int start = detail::settled_node(s, band);
    if (start < 0) return out;
    int state = detail::sign_of(s.v[start]);
    std::vector<double> zeros;
    for (int k = 1; k <= n; ++k) {
        const long i = start + k;
        const double prev = s.v[s.grid.wrap_index(i - 1)], cur = s.v[s.grid.wrap_index(i)];
        if (detail::sign_of(prev) != detail::sign_of(cur) && prev != cur) {
            const double t = h * (static_cast<double>(i - 1) + prev / (prev - cur));
            zeros.push_back(t);
        }
        if (detail::sign_of(cur) == -state && std::abs(cur) >= band) {
            if (!zeros.empty()) out.push_back(s.grid.wrap(0.5 * (zeros.front() + zeros.back())));
            state = -state;
            zeros.clear();
        } else if (detail::sign_of(cur) == state && std::abs(cur) >= band) {
            zeros.clear();
        }
    }
    std::sort(out.begin(), out.end());
    if (th.min_separation > 0.0 && out.size() > 1) {
        std::vector<double> merged;
        for (double p : out) {
            if (!merged.empty() && p - merged.back() < th.min_separation)
                merged.back() = 0.5 * (merged.back() + p);
            else
                merged.push_back(p);
        }
        if (merged.size() > 1 && merged.front() + s.grid.length - merged.back() < th.min_separation) {
            merged.front() = s.grid.wrap(0.5 * (merged.front() + s.grid.length + merged.back()));
            merged.pop_back();
            std::sort(merged.begin(), merged.end());
        }
        out = std::move(merged);
    }
    return out;
}

/// Region where v is near zero.  Node indices are unwrapped: first may be
/// negative and last may exceed n - 1.
struct KinkDetection {
    double position = 0.0;  // centre of the component, in [0, L)
    double length = 0.0;
    long first = 0;
    long last = 0;
    double turning = 0.0;  // sum of the angle increments across the component
    double jump_estimate = 0.0;
    bool sign_change = false;

    [[nodiscard]] int turn() const { return turning < 0.0 ? -1 : 1; }
};

/// Connected components of {|v| <= zero_band} no longer than the configured
/// bound, plus the crossing cells of sign changes that skip the band.  The jump
/// estimate is the enclosed angle of the turning accumulated across the
/// component.
inline std::vector<KinkDetection> detect_kinks(const FieldState& s, const DetectionThresholds& th = {}) {
    th.validate();
    const int n = s.size();
    const double h = s.h();
    std::vector<KinkDetection> out;
    auto in_band = [&](long i) { return std::abs(s.v[s.grid.wrap_index(i)]) <= th.zero_band; };
    long start = -1;
    for (int i = 0; i < n; ++i)
        if (!in_band(i)) {
            start = i;
            break;
        }
    if (start < 0) return out;
    auto finish = [&](long first, long last) {
        KinkDetection k;
        k.first = first;
        k.last = last;
        k.length = h * static_cast<double>(last - first);
        k.position = s.grid.wrap(0.5 * h * static_cast<double>(first + last));
        for (long i = first; i <= last; ++i) k.turning += s.angle_increment(s.grid.wrap_index(i));
        k.jump_estimate = jump_magnitude(0.0, k.turning);
        const double before = s.v[s.grid.wrap_index(first - 1)], after = s.v[s.grid.wrap_index(last + 1)];
        k.sign_change = detail::sign_of(before) * detail::sign_of(after) < 0;
        if (k.length <= th.max_component_length) out.push_back(k);
    };
    for (long k = 1; k <= n; ++k) {
        const long i = start + k;
        if (in_band(i)) {
            long j = i;
            while (j + 1 < start + n + 1 && in_band(j + 1)) ++j;
            finish(i, j);
            k = j - start;
            continue;
        }
        const double prev = s.v[s.grid.wrap_index(i - 1)], cur = s.v[s.grid.wrap_index(i)];
        if (!in_band(i - 1) && detail::sign_of(prev) * detail::sign_of(cur) < 0) {
            // Sign change between two nodes outside the band: the crossing cell.
            KinkDetection kd;
            kd.first = i - 1;
            kd.last = i - 1;
            kd.length = 0.0;
            kd.position = s.grid.wrap(h * (static_cast<double>(i - 1) + prev / (prev - cur)));
            kd.turning = s.angle_increment(s.grid.wrap_index(i - 1));
            kd.jump_estimate = jump_magnitude(0.0, kd.turning);
            kd.sign_change = true;
            out.push_back(kd);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.position < b.position; });
    return out;
}

/// Sharp state read off a near-limit field, with segment 0 starting at origin.
struct Extraction {
    SharpState sharp;
    double origin = 0.0;
    std::vector<KinkDetection> junctions;
};

/// Junctions at the detected kink components (dips without a kink are dropped
/// as noise); segments between them carry the sampled curvature of the nodes
/// outside all components and the sign of the mean of v.  The turning lost
/// inside components beyond the junction jumps is spread evenly over the
/// segments so that the total turning stays 2 pi w.
inline Extraction extract_sharp_detailed(const FieldState& s, const DetectionThresholds& th,
                                         const ModelParams& params) {
    params.validate();
    const int n = s.size();
    const double L = s.grid.length;
    Extraction out;
    auto kinks = detect_kinks(s, th);
    std::erase_if(kinks, [&](const KinkDetection& k) { return !k.sign_change && k.jump_estimate < th.min_kink_jump; });

    if (kinks.empty()) {
        double mean_v = 0.0;
        for (double x : s.v) mean_v += x;
        out.sharp.segments.push_back({L, mean_v < 0.0 ? -1 : 1, s.curvature()});
        return out;
    }
    out.origin = kinks.front().position;
    const std::size_t m = kinks.size();
    double residual = two_pi * s.winding;
    std::vector<double> positions(m);
    for (std::size_t k = 0; k < m; ++k) {
        positions[k] = kinks[k].position + (kinks[k].position < out.origin ? L : 0.0);
    }
    for (std::size_t k = 0; k < m; ++k) {
        const auto& a = kinks[k];
        const auto& b = kinks[(k + 1) % m];
        long lo = a.last + 1;
        long hi = b.first - 1;
        while (hi < lo) hi += n;
        while (hi - lo >= n) hi -= n;
        Segment seg;
        seg.length = (k + 1 < m ? positions[k + 1] : positions[0] + L) - positions[k];
        double vsum = 0.0;
        for (long i = lo; i <= hi; ++i) {
            const int j = s.grid.wrap_index(i);
            seg.curvature_profile.push_back(s.kappa(j));
            vsum += s.v[j];
        }
        if (seg.curvature_profile.empty()) throw std::invalid_argument("overlapping detections");
        seg.phase = vsum < 0.0 ? -1 : 1;
        out.sharp.segments.push_back(std::move(seg));
    }
    for (std::size_t k = 0; k < m; ++k) {
        const auto& b = kinks[(k + 1) % m];
        Junction j;
        j.turn = b.turn();
        const bool phase_change = out.sharp.segments[k].phase != out.sharp.segments[(k + 1) % m].phase;
        if (phase_change) {
            j.kind = b.jump_estimate >= th.min_kink_jump ? JunctionKind::interface : JunctionKind::plain_interface;
            j.jump = j.kind == JunctionKind::interface ? b.jump_estimate : 0.0;
        } else {
            j.kind = JunctionKind::ghost;
            j.jump = b.jump_estimate;
        }
        out.sharp.junctions.push_back(j);
        out.junctions.push_back(b);
    }
    double total_len = 0.0;
    for (const auto& seg : out.sharp.segments) total_len += seg.length;
    for (auto& seg : out.sharp.segments) seg.length *= L / total_len;
    residual -= out.sharp.total_turning();
    const double spread = residual / L;
    for (auto& seg : out.sharp.segments)
        for (double& k : seg.curvature_profile) k += spread;
    return out;
}

inline SharpState extract_sharp(const FieldState& s, const DetectionThresholds& th, const ModelParams& params) {
    return extract_sharp_detailed(s, th, params).sharp;
}

struct SegmentStats {
    double mean_curvature = 0.0;
    double std_curvature = 0.0;
    double length = 0.0;
    int samples = 0;
};

/// Curvature statistics between consecutive cuts (cyclic), skipping nodes
/// within collar of a cut.  No cuts gives one segment over the whole curve.
inline std::vector<SegmentStats> segment_stats(const FieldState& s, std::vector<double> cuts, double collar) {
    const double h = s.h();
    const double L = s.grid.length;
    for (double& c : cuts) c = s.grid.wrap(c);
    std::sort(cuts.begin(), cuts.end());
    auto stats_of = [&](long first, long last, double length) {
        SegmentStats st;
        st.length = length;
        double sum = 0.0;
        for (long i = first; i <= last; ++i) sum += s.kappa(s.grid.wrap_index(i));
        st.samples = static_cast<int>(std::max(0L, last - first + 1));
        if (st.samples == 0) return st;
        st.mean_curvature = sum / st.samples;
        double sq = 0.0;
        for (long i = first; i <= last; ++i) {
            const double d = s.kappa(s.grid.wrap_index(i)) - st.mean_curvature;
            sq += d * d;
        }
        st.std_curvature = std::sqrt(sq / st.samples);
        return st;
    };
    std::vector<SegmentStats> out;
    if (cuts.empty()) {
        out.push_back(stats_of(0, s.size() - 1, L));
        return out;
    }
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        const double a = cuts[k], b = k + 1 < cuts.size() ? cuts[k + 1] : cuts[0] + L;
        out.push_back(stats_of(static_cast<long>(std::ceil((a + collar) / h)),
                               static_cast<long>(std::floor((b - collar) / h)), b - a));
    }
    return out;
}

/// Grid size for a sweep row: n grows like 1/eps and resolves the smallest kink.
struct GridPolicy {
    double points_per_eps = 8.0;    // h <= eps / points_per_eps
    double points_per_delta = 8.0;  // h <= delta_eps / points_per_delta
    int min_points = 256;
    int multiple = 64;

    [[nodiscard]] int points(const SharpState& sharp, const PotentialSpec& pot, double eps) const {
        const double L = sharp.length();
        double need = std::max<double>(min_points, points_per_eps * L / eps);
        for (const auto& j : sharp.junctions)
            if (j.jump > 0.0) need = std::max(need, points_per_delta * L / delta_eps(j.jump, pot, eps));
        const auto n = static_cast<long>(std::ceil(need / multiple)) * multiple;
        if (n > std::numeric_limits<int>::max()) throw std::invalid_argument("grid policy asks for too many points");
        return static_cast<int>(n);
    }
};

struct SweepRow {
    double eps = 0.0;
    int n_points = 0;
    EnergyBreakdown e_recovery;
    std::optional<EnergyBreakdown> e_relaxed;
    EnergyBreakdown e_sharp;
    std::optional<StopReason> relax_stop;

    [[nodiscard]] double gap() const { return e_recovery.total - e_sharp.total; }
};

struct SweepTable {
    std::vector<SweepRow> rows;
};

struct SweepOptions {
    GridPolicy grid;
    bool relax = false;
    FlowParams flow;
    double patch_factor = 10.0;
    unsigned threads = 1;
};

/// One row per eps: recovery energy, optionally the energy after relaxing the
/// recovery by the flow, and the sharp energy.  Rows run on up to
/// options.threads workers.
inline SweepTable gamma_sweep(const SharpState& sharp, const std::vector<double>& eps_list, const ModelParams& params,
                              const SweepOptions& options = {}) {
    if (eps_list.empty()) throw std::invalid_argument("eps list is empty");
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] > 0.0)) throw std::invalid_argument("eps values must be positive");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1])) throw std::invalid_argument("eps list must be strictly decreasing");
    }
    validate_geometry(sharp, params);
    const EnergyBreakdown e_sharp = energy_sharp(sharp, params);
    SweepTable table;
    table.rows.resize(eps_list.size());
    auto run_row = [&](std::size_t k) {
        ModelParams p = params;
        p.eps = eps_list[k];
        const int n = options.grid.points(sharp, p.potential, p.eps);
        const Grid grid(n, sharp.length());
        const FieldState rec = build_recovery(sharp, p.eps, grid, p, options.patch_factor);
        SweepRow row;
        row.eps = p.eps;
        row.n_points = n;
        row.e_recovery = energy_eps(rec, p);
        row.e_sharp = e_sharp;
        if (options.relax) {
            const auto res = run_flow(rec, p, options.flow);
            row.e_relaxed = res.energy_log.back().energy;
            row.relax_stop = res.stop_reason;
        }
        table.rows[k] = row;
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(eps_list.size())));
    if (workers == 1) {
        for (std::size_t k = 0; k < eps_list.size(); ++k) run_row(k);
        return table;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < eps_list.size(); k = next++) {
                try {
                    run_row(k);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return table;
}

}  // namespace kinkflow
