#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "kinkflow/analysis.hpp"
#include "kinkflow/recovery.hpp"

using namespace kinkflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams base_params(double eps) {
    ModelParams p;
    p.eps = eps;
    p.potential = PotentialSpec::quartic(1.0);
    p.curvature_spec = {1.0, 2.0};
    return p;
}

FieldState recovered(const SharpState& sharp, double eps, const ModelParams& p) {
    GridPolicy policy;
    const Grid grid(policy.points(sharp, p.potential, eps), sharp.length());
    return build_recovery(sharp, eps, grid, p);
}

// The same curve traversed backwards: node k becomes node n - k and edge angles turn by pi.
FieldState reversed(const FieldState& s) {
    const int n = s.size();
    FieldState r = s;
    r.winding = -s.winding;
    for (int j = 0; j < n; ++j) {
        r.v[j] = s.v[(n - j) % n];
        r.u[j] = s.u[(n - j + 1) % n] + pi + (j <= 1 ? two_pi * s.winding : 0.0);
    }
    return r;
}

double cyclic_distance(double a, double b, double L) { return std::abs(std::remainder(a - b, L)); }

bool near_any(double x, const std::vector<double>& ys, double L, double tol) {
    return std::any_of(ys.begin(), ys.end(), [&](double y) { return cyclic_distance(x, y, L) <= tol; });
}

}  // namespace

TEST_CASE("interfaces of simple fields", "[detect]") {
    const Grid grid(400, 4 * pi);
    auto s = circle_state(grid, 1.0);
    CHECK(detect_interfaces(s).empty());
    CHECK(detect_kinks(s).empty());

    const double a = 3.1, b = 9.7, w = 0.05;
    for (int i = 0; i < grid.n_points; ++i) {
        const double t = grid.node(i);
        s.v[i] = std::tanh((t - a) / w) * std::tanh((b - t) / w);
    }
    const auto pos = detect_interfaces(s);
    REQUIRE(pos.size() == 2);
    CHECK_THAT(pos[0], WithinAbs(a, grid.spacing));
    CHECK_THAT(pos[1], WithinAbs(b, grid.spacing));

    DetectionThresholds merge;
    merge.min_separation = 7.0;
    CHECK(detect_interfaces(s, merge).size() == 1);

    // A noisy crossing still counts once.
    auto noisy = s;
    const int c = static_cast<int>(std::lround(a / grid.spacing));
    noisy.v[c - 1] = -0.01;
    noisy.v[c] = 0.01;
    noisy.v[c + 1] = -0.01;
    noisy.v[c + 2] = 0.02;
    const auto npos = detect_interfaces(noisy);
    REQUIRE(npos.size() == 2);
    CHECK_THAT(npos[0], WithinAbs(a, 3 * grid.spacing));

    // A shallow dip is no interface.
    auto dip = circle_state(grid, 1.0);
    for (int i = 0; i < grid.n_points; ++i) dip.v[i] = 1.0 - 1.2 * std::exp(-std::pow((grid.node(i) - 5.0) / 0.1, 2));
    CHECK(detect_interfaces(dip).empty());

    DetectionThresholds bad;
    bad.zero_band = 1.5;
    CHECK_THROWS_AS(detect_interfaces(s, bad), std::invalid_argument);
}

TEST_CASE("interfaces of a recovered two-interface circle", "[detect]") {
    const auto sharp = sharp_circle(4 * pi, 2, -1);
    const auto p = base_params(0.05);
    const auto s = recovered(sharp, 0.05, p);
    const double L = s.grid.length;
    const auto pos = detect_interfaces(s);
    REQUIRE(pos.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) CHECK(near_any(sharp.junction_position(j), pos, L, 2 * s.h()));

    const auto kinks = detect_kinks(s);
    REQUIRE(kinks.size() == 2);
    for (const auto& k : kinks) {
        CHECK(k.sign_change);
        CHECK(k.jump_estimate < 0.05);
    }
}

TEST_CASE("kinks of a recovered lens", "[detect]") {
    const double eps = 0.01;
    const auto sharp = sharp_lens(2.0, pi / 2, pi / 2);
    const auto p = base_params(eps);
    const auto s = recovered(sharp, eps, p);
    const double L = s.grid.length;
    CHECK(detect_interfaces(s).empty());
    const auto kinks = detect_kinks(s, DetectionThresholds::for_eps(eps));
    REQUIRE(kinks.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK_FALSE(kinks[j].sign_change);
        CHECK_THAT(kinks[j].jump_estimate, WithinRel(pi / 2, 0.05));
        CHECK(near_any(kinks[j].position, {sharp.junction_position(0), sharp.junction_position(1)}, L, 2 * s.h()));
    }

    DetectionThresholds tight = DetectionThresholds::for_eps(eps);
    tight.max_component_length = 0.5 * kinks[0].length;
    CHECK(detect_kinks(s, tight).empty());
}

TEST_CASE("detections are invariant under rotation and reversal", "[detect]") {
    const double eps = 0.02;
    const auto sharp = sharp_lens(1.5, 2 * pi / 3, pi / 3, 1, -1);
    const auto p = base_params(eps);
    const auto s = recovered(sharp, eps, p);
    const double L = s.grid.length;
    const auto th = DetectionThresholds::for_eps(eps);
    const auto pos = detect_interfaces(s, th);
    const auto kinks = detect_kinks(s, th);
    REQUIRE(pos.size() == 2);
    REQUIRE(kinks.size() == 2);

    auto rotated = s;
    for (auto& x : rotated.u) x += 0.7;
    CHECK(detect_interfaces(rotated, th) == pos);
    const auto rk = detect_kinks(rotated, th);
    REQUIRE(rk.size() == kinks.size());
    for (std::size_t j = 0; j < rk.size(); ++j) {
        CHECK(rk[j].position == kinks[j].position);
        CHECK_THAT(rk[j].jump_estimate, WithinAbs(kinks[j].jump_estimate, 1e-12));
    }

    const auto back = reversed(s);
    CHECK(norm(closure_defect(back)) < 1e-9 * L);
    const auto bpos = detect_interfaces(back, th);
    REQUIRE(bpos.size() == 2);
    for (double x : pos) CHECK(near_any(L - x, bpos, L, 1e-9));
    const auto bk = detect_kinks(back, th);
    REQUIRE(bk.size() == 2);
    for (const auto& k : kinks) {
        const auto match = std::find_if(bk.begin(), bk.end(),
                                        [&](const KinkDetection& b) { return cyclic_distance(L - k.position, b.position, L) < 1e-9; });
        REQUIRE(match != bk.end());
        CHECK_THAT(match->jump_estimate, WithinAbs(k.jump_estimate, 1e-9));
    }
}

TEST_CASE("sharp extraction", "[extract]") {
    SECTION("smooth constant phase") {
        const Grid grid(256, 4 * pi);
        const auto s = circle_state(grid, 1.0);
        const auto sharp = extract_sharp(s, {}, base_params(0.05));
        REQUIRE(sharp.segments.size() == 1);
        CHECK(sharp.junctions.empty());
        CHECK(sharp.segments[0].phase == 1);
        CHECK_THAT(sharp.segments[0].length, WithinRel(grid.length, 1e-14));
        CHECK_THAT(sharp.total_turning(), WithinAbs(two_pi, 1e-12));
    }

    SECTION("round trip of an asymmetric kinked lens") {
        const double eps = 0.01;
        const auto sharp = sharp_lens(1.5, 2 * pi / 3, pi / 3, 1, -1);
        const auto p = base_params(eps);
        const auto s = recovered(sharp, eps, p);
        const auto ex = extract_sharp_detailed(s, DetectionThresholds::for_eps(eps), p);
        const auto& got = ex.sharp;
        REQUIRE(got.segments.size() == 2);
        REQUIRE(got.junctions.size() == 2);
        validate_structure(got);
        CHECK_THAT(got.length(), WithinRel(sharp.length(), 1e-12));
        CHECK_THAT(got.total_turning(), WithinAbs(two_pi, 1e-9));
        // Extraction starts at a detected kink; match segments by phase.
        for (const auto& seg : sharp.segments) {
            const auto it = std::find_if(got.segments.begin(), got.segments.end(),
                                         [&](const Segment& g) { return g.phase == seg.phase; });
            REQUIRE(it != got.segments.end());
            CHECK_THAT(it->length, WithinAbs(seg.length, 2 * (std::sqrt(eps) + eps)));
        }
        for (const auto& j : got.junctions) {
            CHECK(j.kind == JunctionKind::interface);
            CHECK_THAT(j.jump, WithinRel(sharp.junctions[0].jump, 0.05));
        }
    }

    SECTION("plain interfaces carry no jump") {
        const auto sharp = sharp_circle(4 * pi, 2, -1);
        const auto p = base_params(0.05);
        const auto got = extract_sharp(recovered(sharp, 0.05, p), {}, p);
        REQUIRE(got.junctions.size() == 2);
        for (const auto& j : got.junctions) {
            CHECK(j.kind == JunctionKind::plain_interface);
            CHECK(j.jump == 0.0);
        }
        CHECK(got.segments[0].phase == -got.segments[1].phase);
    }
}

TEST_CASE("segment curvature statistics", "[stats]") {
    const Grid grid(512, 4 * pi);
    const auto circle = circle_state(grid);
    const auto one = segment_stats(circle, {}, 0.0);
    REQUIRE(one.size() == 1);
    CHECK_THAT(one[0].mean_curvature, WithinAbs(0.5, 1e-12));
    CHECK(one[0].std_curvature < 1e-10);

    // Two arcs of curvature 0.25 and 0.75 meeting at t = 2 pi and t = 4 pi.
    FieldState two = circle;
    const double h = grid.spacing;
    double a = 0.0;
    for (int i = 0; i < grid.n_points; ++i) {
        two.u[i] = a;
        a += h * (i < grid.n_points / 2 ? 0.25 : 0.75);
    }
    const auto st = segment_stats(two, {2 * pi, 0.0}, 3 * h);
    REQUIRE(st.size() == 2);
    CHECK_THAT(st[0].mean_curvature, WithinAbs(0.25, 1e-12));
    CHECK_THAT(st[1].mean_curvature, WithinAbs(0.75, 1e-12));
    CHECK(st[0].std_curvature < 1e-10);
    CHECK(st[1].std_curvature < 1e-10);
    CHECK_THAT(st[0].length, WithinAbs(2 * pi, 1e-12));
}

TEST_CASE("grid policy", "[sweep]") {
    const auto sharp = sharp_lens(2.0, pi / 2, pi / 2);
    const auto pot = PotentialSpec::quartic(1.0);
    GridPolicy policy;
    for (double eps : {0.1, 0.05, 0.02}) {
        const int n = policy.points(sharp, pot, eps);
        const double h = sharp.length() / n;
        CHECK(n % policy.multiple == 0);
        CHECK(n >= policy.min_points);
        CHECK(h <= eps / policy.points_per_eps);
        CHECK(h <= delta_eps(pi / 2, pot, eps) / policy.points_per_delta);
    }
}

TEST_CASE("sweep of a smooth circle", "[sweep]") {
    const double R = 2.0, L = two_pi * R;
    auto p = base_params(0.1);
    const auto sharp = sharp_circle(L, 1, 1);
    const std::vector<double> eps_list{0.1, 0.05};
    const auto table = gamma_sweep(sharp, eps_list, p);
    REQUIRE(table.rows.size() == 2);
    for (const auto& row : table.rows) {
        const double h = L / row.n_points;
        CHECK_THAT(row.gap(), WithinAbs(row.eps * L / (R * R), h * h));
        CHECK_FALSE(row.e_relaxed);
    }
    CHECK_THAT(table.rows[0].gap() / table.rows[1].gap(), WithinRel(2.0, 1e-6));
}

TEST_CASE("sweep of a two-interface circle", "[sweep]") {
    const auto p = base_params(0.1);
    const auto sharp = sharp_circle(4 * pi, 2, -1);
    SweepOptions opt;
    opt.relax = true;
    opt.flow.dt = 1e-2;
    opt.flow.max_steps = 30;
    opt.threads = 3;
    const std::vector<double> eps_list{0.2, 0.1, 0.05};
    const auto table = gamma_sweep(sharp, eps_list, p, opt);
    REQUIRE(table.rows.size() == 3);
    double last = 1e9;
    for (const auto& row : table.rows) {
        REQUIRE(row.e_relaxed);
        CHECK(row.e_relaxed->total <= row.e_recovery.total);
        CHECK_THAT(row.e_sharp.total, WithinRel(5 * pi + 16.0 / 3.0, 1e-10));
        CHECK(std::abs(row.gap()) < last);
        last = std::abs(row.gap());
    }

    opt.threads = 1;
    const auto serial = gamma_sweep(sharp, eps_list, p, opt);
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        CHECK(serial.rows[k].e_recovery.total == table.rows[k].e_recovery.total);
        CHECK(serial.rows[k].e_relaxed->total == table.rows[k].e_relaxed->total);
    }
}

TEST_CASE("sweep input validation", "[sweep]") {
    const auto p = base_params(0.1);
    const auto sharp = sharp_circle(4 * pi, 1, 1);
    CHECK_THROWS_AS(gamma_sweep(sharp, {}, p), std::invalid_argument);
    CHECK_THROWS_AS(gamma_sweep(sharp, {0.1, 0.2}, p), std::invalid_argument);
    CHECK_THROWS_AS(gamma_sweep(sharp, {0.1, -0.2}, p), std::invalid_argument);
    SweepOptions opt;
    opt.threads = 4;
    CHECK_THROWS_AS(gamma_sweep(sharp_lens(0.3, pi / 2, pi / 2), {0.5, 0.4}, p, opt), RecoveryError);
}
