#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kinkflow/energy.hpp"
#include "kinkflow/sharp_state.hpp"
#include "kinkflow/spectral.hpp"

using namespace kinkflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("potential values", "[potential]") {
    const auto q1 = potential_eval(PotentialSpec::quartic(1.0), 1.0);
    CHECK(q1.value == 0.0);
    CHECK(q1.derivative == 0.0);
    CHECK(q1.sqrt_value == 0.0);

    const auto q75 = potential_eval(PotentialSpec::quartic(0.75), 0.0);
    CHECK_THAT(q75.value, WithinAbs(0.75, 1e-15));
    CHECK(q75.derivative == 0.0);
    CHECK_THAT(q75.sqrt_value, WithinAbs(std::sqrt(0.75), 1e-15));

    const auto q2 = potential_eval(PotentialSpec::quartic(1.0), 2.0);
    CHECK_THAT(q2.value, WithinAbs(9.0, 1e-13));
    CHECK_THAT(q2.derivative, WithinAbs(24.0, 1e-13));
    CHECK_THAT(q2.sqrt_value, WithinAbs(3.0, 1e-13));

    const auto sw = PotentialSpec::single_well(1.0);
    CHECK(sw.value(1.0) == 0.0);
    CHECK_THAT(sw.value(0.0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("potential is symmetric and non-negative", "[potential]") {
    const auto pot = PotentialSpec::quartic(1.3);
    for (double v = -3.0; v <= 3.0; v += 0.125) {
        CHECK(pot.value(v) >= 0.0);
        CHECK(pot.value(v) == pot.value(-v));
        const double d = 1e-6;
        CHECK_THAT(pot.derivative(v), WithinAbs((pot.value(v + d) - pot.value(v - d)) / (2 * d), 1e-6 * (1 + v * v * v * v)));
    }
}

TEST_CASE("interface and kink constants", "[potential]") {
    CHECK_THAT(sigma(PotentialSpec::quartic(1.0)), WithinAbs(8.0 / 3.0, 1e-10));
    CHECK_THAT(sigma(PotentialSpec::quartic(0.75)), WithinAbs(8.0 * std::sqrt(0.75) / 3.0, 1e-10));
    CHECK_THAT(sigma(PotentialSpec::quartic(1e-16)), WithinAbs(8.0e-8 / 3.0, 1e-15));
    CHECK(sigma_hat(PotentialSpec::quartic(1.0)) == 2.0);
    CHECK_THAT(sigma_hat(PotentialSpec::quartic(0.75)), WithinAbs(std::sqrt(3.0), 1e-15));
    CHECK(sigma_hat(PotentialSpec::single_well(1.0)) == 2.0);
    CHECK_THROWS_AS(sigma(PotentialSpec::single_well(1.0)), std::domain_error);

    for (double a : {0.1, 0.5, 2.0, 7.0}) {
        CHECK_THAT(sigma(PotentialSpec::quartic(a)), WithinAbs(std::sqrt(a) * sigma(PotentialSpec::quartic(1.0)), 1e-10));
        CHECK(sigma_hat(PotentialSpec::quartic(a)) == std::sqrt(a) * 2.0);
    }
}

TEST_CASE("spontaneous curvature interpolation", "[curvature]") {
    const CurvatureSpec c{1.0, 2.0};
    auto at = [&](double v) { return spontaneous_curvature(c, v); };
    CHECK(at(-1.0).value == 1.0);
    CHECK(at(-1.0).derivative == 0.0);
    CHECK_THAT(at(0.0).value, WithinAbs(1.5, 1e-15));
    CHECK_THAT(at(0.0).derivative, WithinAbs(0.75, 1e-15));
    CHECK(at(5.0).value == 2.0);
    CHECK(at(5.0).derivative == 0.0);
    CHECK(at(-7.0).value == 1.0);

    const double d = 1e-6;
    for (double v = -0.95; v < 1.0; v += 0.1)
        CHECK_THAT(at(v).derivative, WithinAbs((at(v + d).value - at(v - d).value) / (2 * d), 1e-8));

    const CurvatureSpec down{3.0, -1.0};
    for (double v = -2.0; v <= 2.0; v += 0.05) {
        CHECK(down.value(v) <= 3.0);
        CHECK(down.value(v) >= -1.0);
    }
}

namespace {

ModelParams params_with(double eps, double c_minus, double c_plus, double a = 1.0) {
    ModelParams p;
    p.eps = eps;
    p.potential = PotentialSpec::quartic(a);
    p.curvature_spec = {c_minus, c_plus};
    return p;
}

}  // namespace

TEST_CASE("energy of constant-phase circles", "[energy]") {
    const double R = 2.0;
    const Grid grid(256, two_pi * R);

    auto p = params_with(0.05, 0.0, 1.0 / R);
    const auto e = energy_eps(circle_state(grid), p);
    CHECK_THAT(e.curvature, WithinAbs(0.0, 1e-12));
    CHECK(e.interface == 0.0);
    CHECK_THAT(e.regularization, WithinRel(p.eps * grid.length / (R * R), 1e-12));

    p.curvature_spec = {1.0, 2.0};
    const auto f = energy_eps(circle_state(grid), p);
    CHECK_THAT(f.total, WithinRel(9.05 * pi, 1e-12));
    CHECK_THAT(f.total, WithinAbs(28.4314, 1e-4));
}

TEST_CASE("energy with vanishing phase field", "[energy]") {
    const Grid grid(128, 5.0);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    std::vector<double> u(grid.size());
    for (int i = 0; i < grid.n_points; ++i) u[i] = two_pi * i / grid.n_points + jitter(rng);
    const FieldState s(grid, u, 1, std::vector<double>(grid.size(), 0.0));
    const auto p = params_with(0.1, 1.0, 2.0);
    const auto e = energy_eps(s, p);
    double k2 = 0.0;
    for (int i = 0; i < grid.n_points; ++i) k2 += s.kappa(i) * s.kappa(i);
    CHECK(e.curvature == 0.0);
    CHECK_THAT(e.interface, WithinRel(grid.length / p.eps, 1e-12));
    CHECK_THAT(e.regularization, WithinRel(p.eps * grid.spacing * k2, 1e-12));
}

TEST_CASE("energy components are non-negative and sum to the total", "[energy]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid grid(64, 3.0 + trial);
        std::vector<double> u(grid.size()), v(grid.size());
        for (auto& x : u) x = U(rng);
        for (auto& x : v) x = U(rng);
        const FieldState s(grid, u, trial % 3 - 1, v);
        const auto e = energy_eps(s, params_with(0.05 + 0.01 * trial, U(rng), U(rng), 0.5));
        CHECK(e.curvature >= 0.0);
        CHECK(e.interface >= 0.0);
        CHECK(e.regularization >= 0.0);
        CHECK_THAT(e.total, WithinRel(e.curvature + e.interface + e.regularization, 1e-12));
    }
}

TEST_CASE("energy rejects inconsistent input", "[energy]") {
    const Grid grid(32, 1.0);
    FieldState s = circle_state(grid);
    s.v.pop_back();
    CHECK_THROWS_AS(energy_eps(s, params_with(0.1, 0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(energy_eps(circle_state(grid), params_with(0.0, 0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(Grid(8, 1.0), std::invalid_argument);
}

TEST_CASE("rigid rotation leaves the energy bit-identical", "[energy]") {
    const Grid grid(200, 9.0);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> u(grid.size()), v(grid.size());
    // Dyadic samples keep u + c exact, so any change would come from the energy itself.
    const double q = std::ldexp(1.0, -30);
    for (int i = 0; i < grid.n_points; ++i) {
        u[i] = std::round((two_pi * i / grid.n_points + 0.2 * U(rng)) / q) * q;
        v[i] = U(rng);
    }
    const auto p = params_with(0.07, 0.5, 1.5);
    const auto e0 = energy_eps(FieldState(grid, u, 1, v), p);
    for (double c : {0.5, -3.0, 1024.0}) {
        auto shifted = u;
        for (auto& x : shifted) x += c;
        const auto e1 = energy_eps(FieldState(grid, shifted, 1, v), p);
        CHECK(e1.curvature == e0.curvature);
        CHECK(e1.interface == e0.interface);
        CHECK(e1.regularization == e0.regularization);
        CHECK(e1.total == e0.total);
    }
    auto shifted = u;
    for (auto& x : shifted) x += 0.1;
    CHECK_THAT(energy_eps(FieldState(grid, shifted, 1, v), p).total, WithinRel(e0.total, 1e-13));
}

TEST_CASE("discrete energy converges at second order", "[energy]") {
    const double L = 7.0, eps = 0.2;
    const auto p = params_with(eps, 0.4, 1.3, 0.8);
    const double w = two_pi / L;
    auto u = [&](double t) { return w * t + 0.3 * std::sin(w * t) + 0.1 * std::cos(2 * w * t); };
    auto du = [&](double t) { return w + 0.3 * w * std::cos(w * t) - 0.2 * w * std::sin(2 * w * t); };
    auto v = [&](double t) { return 0.6 * std::cos(w * t) + 0.1; };
    auto dv = [&](double t) { return -0.6 * w * std::sin(w * t); };
    auto density = [&](double t) {
        const double k = du(t), c = p.curvature_spec.value(v(t));
        return v(t) * v(t) * (k - c) * (k - c) + eps * dv(t) * dv(t) + p.potential.value(v(t)) / eps + eps * k * k;
    };
    const double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, 0.0, L, 15, 1e-15);

    std::vector<double> err;
    for (int n : {64, 128, 256, 512}) {
        const Grid grid(n, L);
        std::vector<double> us(n), vs(n);
        for (int i = 0; i < n; ++i) {
            us[i] = u(grid.midpoint(i));
            vs[i] = v(grid.node(i));
        }
        err.push_back(std::abs(energy_eps(FieldState(grid, us, 1, vs), p).total - exact));
    }
    for (std::size_t k = 0; k + 1 < err.size(); ++k) {
        const double rate = std::log2(err[k] / err[k + 1]);
        INFO("n = " << (64 << k) << " rate = " << rate);
        CHECK(rate >= 1.8);
        CHECK(rate <= 2.2);
    }
}

TEST_CASE("curve reconstruction and closure defect", "[geometry]") {
    const double R = 1.5;
    const Grid grid(400, two_pi * R);
    const auto s = circle_state(grid, 1.0, 1, pi / 2);
    const auto q = reconstruct_curve(s, {R, 0.0});
    REQUIRE(q.size() == grid.size() + 1);
    double worst = 0.0;
    for (const auto& pt : q) worst = std::max(worst, std::abs(std::hypot(pt[0], pt[1]) - R));
    CHECK(worst < grid.spacing * grid.spacing);
    CHECK(norm(closure_defect(s)) < 1e-12);

    const FieldState line(grid, std::vector<double>(grid.size(), 0.0), 0, std::vector<double>(grid.size(), 1.0));
    const auto ql = reconstruct_curve(line, {1.0, 2.0});
    CHECK_THAT(ql.back()[0], WithinAbs(1.0 + grid.length, 1e-12));
    CHECK_THAT(ql.back()[1], WithinAbs(2.0, 1e-12));
    CHECK_THAT(closure_defect(line)[0], WithinAbs(grid.length, 1e-12));
    CHECK_THAT(closure_defect(line)[1], WithinAbs(0.0, 1e-12));

    for (int n : {100, 200}) {
        const double L = 3.0, h = L / n;
        std::vector<double> half(n);
        for (int i = 0; i < n; ++i) half[i] = pi * (i + 0.5) / n;
        const auto c = closure_defect(half, h);
        CHECK_THAT(c[0], WithinAbs(0.0, 1e-12));
        CHECK_THAT(c[1], WithinAbs(2.0 * L / pi, h * h));
    }
}

TEST_CASE("enclosed jump angle", "[geometry]") {
    CHECK_THAT(jump_magnitude(0.0, pi / 2), WithinAbs(pi / 2, 1e-15));
    CHECK_THAT(jump_magnitude(0.0, 3 * pi / 2), WithinAbs(pi / 2, 1e-15));
    CHECK_THAT(jump_magnitude(0.1, 0.1 + two_pi), WithinAbs(0.0, 1e-15));
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> U(-10.0, 10.0);
    for (int k = 0; k < 50; ++k) {
        const double a = U(rng), b = U(rng);
        const double j = jump_magnitude(a, b);
        CHECK(j >= 0.0);
        CHECK(j <= pi);
        CHECK_THAT(jump_magnitude(b, a), WithinAbs(j, 1e-12));
        CHECK_THAT(jump_magnitude(a + 4 * pi, b - two_pi), WithinAbs(j, 1e-12));
    }
}

TEST_CASE("sharp energy examples", "[sharp]") {
    auto p = params_with(0.05, 1.0, 2.0);

    SECTION("single stationary circle") {
        auto q = p;
        q.curvature_spec = {0.0, 0.5};
        const auto s = sharp_circle(4 * pi, 1, 1);
        const auto e = energy_sharp(s, q);
        CHECK_THAT(e.total, WithinAbs(0.0, 1e-14));
        CHECK(e.regularization == 0.0);
    }

    SECTION("two-interface circle") {
        const auto s = sharp_circle(4 * pi, 2, -1);
        const auto e = energy_sharp(s, p);
        CHECK_THAT(e.curvature, WithinRel(2 * pi * 0.25 + 2 * pi * 2.25, 1e-12));
        CHECK_THAT(e.interface, WithinRel(16.0 / 3.0, 1e-10));
        CHECK_THAT(e.total, WithinRel(5 * pi + 16.0 / 3.0, 1e-10));
        CHECK_THAT(e.total, WithinAbs(21.0413, 1e-4));
    }

    SECTION("symmetric lens with ghost kinks") {
        const double R = 1.7;
        const auto s = sharp_lens(R, pi / 2, pi / 2);
        REQUIRE(s.junctions[0].kind == JunctionKind::ghost);
        CHECK_THAT(s.junctions[0].jump, WithinAbs(pi / 2, 1e-15));
        const auto e = energy_sharp(s, p);
        CHECK_THAT(e.curvature, WithinRel(s.length() * (1 / R - 2.0) * (1 / R - 2.0), 1e-12));
        CHECK_THAT(e.interface, WithinRel(16.0 / 3.0 + 2 * pi, 1e-10));
        validate_geometry(s, p);
    }

    SECTION("single-well potential charges kinks only") {
        auto q = p;
        q.potential = PotentialSpec::single_well(1.0);
        const auto e = energy_sharp(sharp_lens(1.0, pi / 2, pi / 2), q);
        CHECK_THAT(e.interface, WithinRel(2 * pi, 1e-12));
    }
}

TEST_CASE("sharp state validation", "[sharp]") {
    const auto p = params_with(0.05, 1.0, 2.0);
    auto s = sharp_circle(4 * pi, 2, -1);
    validate_structure(s);

    auto same = s;
    same.segments[1].phase = -1;
    CHECK_THROWS_AS(energy_sharp(same, p), std::invalid_argument);

    auto kinked = s;
    kinked.junctions[0].jump = 0.3;
    CHECK_THROWS_AS(validate_structure(kinked), std::invalid_argument);

    auto ghost = sharp_lens(1.0, pi / 2, pi / 2);
    ghost.junctions[1].jump = 0.0;
    CHECK_THROWS_AS(validate_structure(ghost), std::invalid_argument);

    auto wide = s;
    wide.junctions[0] = {3.5, JunctionKind::interface, 1};
    CHECK_THROWS_AS(validate_structure(wide), std::invalid_argument);

    auto open = sharp_lens(1.0, pi / 2, pi / 2);
    open.junctions[0].jump = 1.0;
    open.junctions[1].jump = 1.0;
    CHECK_THROWS_AS(validate_geometry(open, p), std::invalid_argument);

    auto volume = p;
    volume.volume_constraint_active = true;
    volume.m = 0.5;
    CHECK_THROWS_AS(validate_geometry(s, volume), std::invalid_argument);
    volume.m = 0.0;
    validate_geometry(s, volume);
}

TEST_CASE("sharp angle function", "[sharp]") {
    const auto s = sharp_lens(1.0, pi / 2, pi / 3);
    const SharpAngle th(s);
    CHECK(th.winding() == 1);
    CHECK_THAT(th.length(), WithinRel(s.length(), 1e-15));
    const double s0 = s.segments[0].length;
    CHECK_THAT(th(s0) - th.left_limit(s0), WithinAbs(s.junctions[0].jump, 1e-12));
    CHECK(th.phase_at(0.5 * s0) == 1);
    CHECK(th.segment_at(s0 + 0.01) == 1u);
    CHECK_THAT(th(0.3 + th.length()) - th(0.3), WithinAbs(two_pi, 1e-12));
    const auto full = th.tangent_integral(0.0, th.length());
    CHECK(norm(full) < 1e-12);

    // Tangent integral against Gauss-Kronrod on each side of the kink.
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double a = 0.2, b = s0 + 0.4;
    auto part = [&](auto f) { return GK::integrate(f, a, s0, 10, 1e-14) + GK::integrate(f, s0, b, 10, 1e-14); };
    const auto ti = th.tangent_integral(a, b);
    CHECK_THAT(ti[0], WithinAbs(part([&](double t) { return std::cos(th(t)); }), 1e-12));
    CHECK_THAT(ti[1], WithinAbs(part([&](double t) { return std::sin(th(t)); }), 1e-12));
}

TEST_CASE("periodic spectral solver", "[spectral]") {
    const Grid grid(96, 4.0);
    PeriodicSpectralSolver solver(grid);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> x(grid.size());
    for (auto& a : x) a = U(rng);
    const auto lap = periodic_laplacian(x, grid.spacing);
    std::vector<double> b(grid.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 2.0 * x[i] - 0.3 * lap[i];
    const auto y = solver.solve(b, [](double lam) { return 2.0 + 0.3 * lam; });
    for (std::size_t i = 0; i < x.size(); ++i) CHECK_THAT(y[i], WithinAbs(x[i], 1e-12));

    double row = 0.0;
    for (double l : periodic_laplacian(std::vector<double>(grid.size(), 3.0), grid.spacing)) row = std::max(row, std::abs(l));
    CHECK(row == 0.0);
}
