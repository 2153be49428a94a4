#include <doctest.h>

#include "helpers.hpp"

using namespace grf;
using namespace grf::test;

namespace {
FlowRHS zero_rhs(const GeometryState& s) {
    FlowRHS r;
    r.dG = s.G.zeros_like();
    r.dg = s.g.zeros_like();
    r.dA = s.A.zeros_like();
    r.GdA = s.A.zeros_like();
    r.Bdot = zero_two_form(s.mesh, s.k());
    r.dH = s.H.zeros_like();
    return r;
}

double max_rhs(const FlowRHS& r) { return std::max({r.dG.max_abs(), r.dg.max_abs(), r.dA.max_abs(), r.dH.max_abs()}); }

// d/dt G = G'' on an abelian k=1 fiber; every other field frozen.
FlowRHS heat_rhs(const GeometryState& s) {
    FlowRHS r = zero_rhs(s);
    r.dG = partial_derivative(partial_derivative(s.G, 0), 0);
    return r;
}

double heat_value(int steps) {
    auto m = line(32);
    GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(1), m);
    s.G = fill(m, {Slot::Fiber, Slot::Fiber}, 1, [](int, double x, double) { return 1.0 + 0.1 * std::sin(kTwoPi * x); });
    const double T = 0.01, dt = T / steps;
    for (int i = 0; i < steps; ++i) s = rk4_step(s, heat_rhs, dt);
    return s.G.at(0, 8);  // x = 1/4, the peak of the sine
}

GeometryState scalar_fiber_state(int N, double eps) {
    auto m = line(N);
    GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(1), m);
    s.G = fill(m, {Slot::Fiber, Slot::Fiber}, 1,
               [&](int, double x, double) { return std::exp(2 * eps * std::sin(kTwoPi * x)); });
    return s;
}
}  // namespace

TEST_SUITE("flow") {
    TEST_CASE("flat abelian product is a fixed point in every gauge") {
        auto m = torus(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(2), m);
        Field f0 = Field::scalar(m, 2);
        for (Gauge g : {Gauge::Ungauged, Gauge::Canonical, Gauge::General}) CHECK(max_rhs(flow_rhs(s, g, &f0)) == 0.0);
    }

    TEST_CASE("Heisenberg constant data") {
        auto m = line(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::heisenberg3(), m);
        FlowRHS r = rhs_ungauged(s);
        const double want[3] = {1.0, 1.0, -1.0};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(r.dG.at(r.dG.comp({i, j}), 4) == doctest::Approx(i == j ? want[i] : 0.0).epsilon(1e-12));
        CHECK(r.dg.max_abs() < 1e-14);
        CHECK(r.dA.max_abs() < 1e-14);
        FlowRHS c = rhs_canonical(s);
        CHECK(max_diff(c.dG, r.dG) < 1e-14);
        CHECK(max_diff(c.dg, r.dg) < 1e-14);
        CHECK(max_diff(c.dA, r.dA) < 1e-14);
    }

    TEST_CASE("scalar reduction over a circle") {
        // G = exp(2 phi): dG = G'' - G'^2/(2G), dg = G''/G - G'^2/(2G^2); 4th-order stencils
        const double eps = 0.1;
        auto errors = [&](int N) {
            GeometryState s = scalar_fiber_state(N, eps);
            FlowRHS r = rhs_ungauged(s);
            double eG = 0, eg = 0, scale = 0;
            for (int p = 0; p < s.mesh->npts(); ++p) {
                const double x = s.mesh->x(0, p), w = kTwoPi;
                const double phi = eps * std::sin(w * x), phi1 = eps * w * std::cos(w * x), phi2 = -w * w * phi;
                const double G = std::exp(2 * phi), G1 = 2 * phi1 * G, G2 = (2 * phi2 + 4 * phi1 * phi1) * G;
                const double wG = G2 - G1 * G1 / (2 * G), wg = G2 / G - 0.5 * G1 * G1 / (G * G);
                scale = std::max({scale, std::abs(wG), std::abs(wg)});
                eG = std::max(eG, std::abs(r.dG.at(0, p) - wG));
                eg = std::max(eg, std::abs(r.dg.at(0, p) - wg));
            }
            return std::array<double, 3>{eG, eg, scale};
        };
        const auto e64 = errors(64), e128 = errors(128);
        CHECK(e64[0] < 1e-4 * e64[2]);
        CHECK(e64[1] < 1e-4 * e64[2]);
        CHECK(e128[0] < 1e-5 * e128[2]);
        CHECK(e64[0] / e128[0] > 12.0);
        CHECK(e64[1] / e128[1] > 12.0);
    }

    TEST_CASE("canonical minus ungauged is the Lie derivative along q") {
        // dG and dA use the same stencils on both sides; the g block converges at 4th order
        auto lie_g_error = [](int N, double* scale) {
            GeometryState s = perturbed(LieAlgebra::abelian_algebra(2), torus(N), 0.1, 31);
            DerivedGeometry dg = derive(s);
            FlowRHS u = flow_rhs(s, dg, Gauge::Ungauged), c = flow_rhs(s, dg, Gauge::Canonical);
            const Field& q = dg.q;
            Field LG = ein("a,aij->ij", q, dg.DG);
            Field LA = ein("b,bai->ai", q, dg.F);
            CHECK(LA.max_abs() > 1e-3);
            CHECK(max_diff(c.dG - u.dG, LG) < 1e-12);
            CHECK(max_diff(c.dA - u.dA, LA) < 1e-12);
            Field dq = gradient(q);  // (a,c) = d_a q^c
            Field Lg = ein("c,cab->ab", q, gradient(s.g)) + ein("cb,ac->ab", s.g, dq) + ein("ac,bc->ab", s.g, dq);
            *scale = Lg.max_abs();
            return max_diff(c.dg - u.dg, Lg);
        };
        double s32 = 0, s64 = 0;
        const double e32 = lie_g_error(32, &s32), e64 = lie_g_error(64, &s64);
        CHECK(s64 > 1e-2);
        CHECK(e64 < 1e-3 * s64);
        CHECK(e32 / e64 > 12.0);
    }


    TEST_CASE("general gauge") {
        auto m = torus(32);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.05, 32);
        Rng rng(32);
        s.H = algebroid_d(random_two_form(m, 3, 0.1, rng), s);
        Field fc = Field::scalar(m, 3, 0.7);
        FlowRHS g0 = rhs_general(s, fc), c = rhs_canonical(s);
        CHECK(max_diff(g0.dG, c.dG) < 1e-13);
        CHECK(max_diff(g0.dg, c.dg) < 1e-13);
        CHECK(max_diff(g0.dH, c.dH) < 1e-13);

        Field f = smooth_field(m, {}, 3, 0.1, rng);
        Field f2 = 2.0 * f;
        FlowRHS r1 = rhs_general(s, f), r2 = rhs_general(s, f2);
        CHECK(max_diff(r2.dG - c.dG, 2.0 * (r1.dG - c.dG)) < 1e-12);
        CHECK(max_diff(r2.dg - c.dg, 2.0 * (r1.dg - c.dg)) < 1e-12);
        CHECK(max_diff(r2.dA - c.dA, 2.0 * (r1.dA - c.dA)) < 1e-12);
        CHECK(max_diff(r2.dH - c.dH, 2.0 * (r1.dH - c.dH)) < 1e-12);
        CHECK((r1.dg - c.dg).max_abs() > 1e-3);
    }

    TEST_CASE("general gauge on flat data leaves only the Hessian of f") {
        auto m = line(64);
        GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(2), m);
        const double eps = 0.05;
        Field f = scalar_fn(m, 2, [&](double x, double) { return eps * std::sin(kTwoPi * x); });
        FlowRHS r = rhs_general(s, f);
        CHECK(r.dG.max_abs() == 0.0);
        CHECK(r.dA.max_abs() == 0.0);
        CHECK(r.dH.max_abs() == 0.0);
        Field want = scalar_fn(m, 2, [&](double x, double) { return 2 * kTwoPi * kTwoPi * eps * std::sin(kTwoPi * x); });
        double err = 0;
        for (int p = 0; p < m->npts(); ++p) err = std::max(err, std::abs(r.dg.at(0, p) - want.at(0, p)));
        CHECK(err < 1e-5 * want.max_abs());
    }

    TEST_CASE("RK4") {
        auto m = line(16);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.1, 33);
        GeometryState n = rk4_step(s, zero_rhs, 0.01);
        CHECK(max_diff(n.G, s.G) == 0.0);
        CHECK(max_diff(n.A, s.A) == 0.0);
        CHECK(n.t == doctest::Approx(0.01));

        // semi-discrete reference with a much finer step; global error is 4th order in dt
        const double ref = heat_value(256);
        const double e1 = std::abs(heat_value(8) - ref), e2 = std::abs(heat_value(16) - ref);
        CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));
        // the mode decays like exp(-lambda t), lambda the symbol of the composed 4th-order stencil
        const double h = 1.0 / 32, th = kTwoPi * h;
        const double sym = (8 * std::sin(th) - std::sin(2 * th)) / (6 * h);
        CHECK(ref == doctest::Approx(1.0 + 0.1 * std::exp(-sym * sym * 0.01)).epsilon(1e-9));
    }

    TEST_CASE("integrator aborts cleanly") {
        auto m = line(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(1), m);
        IntegratorConfig cfg;
        cfg.t_end = 1.0;
        FlowRun run = integrate(
            s,
            [](const GeometryState& x) {
                FlowRHS r = zero_rhs(x);
                for (double& v : r.dG.values()) v = -2.0;
                return r;
            },
            cfg);
        CHECK(run.aborted);
        CHECK(run.abort_reason.find("aborted at t=") != std::string::npos);
        CHECK(run.reports.back().t < 0.5 + 1e-12);

        cfg.blowup = 1.5;
        FlowRun up = integrate(
            s,
            [](const GeometryState& x) {
                FlowRHS r = zero_rhs(x);
                for (double& v : r.dG.values()) v = 10.0;
                return r;
            },
            cfg);
        CHECK(up.aborted);
        CHECK(up.abort_reason.find("blow-up") != std::string::npos);
    }

    TEST_CASE("report times") {
        auto m = line(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::heisenberg3(), m);
        IntegratorConfig cfg;
        cfg.t_end = 0.01;
        cfg.report_dt = 0.0025;
        int nodes = 0;
        FlowRun run = integrate(s, rhs_ungauged, cfg, [&](const GeometryState&) { ++nodes; });
        REQUIRE(run.reports.size() == 5);
        for (size_t i = 0; i < run.reports.size(); ++i) CHECK(run.reports[i].t == doctest::Approx(0.0025 * i));
        CHECK(nodes == static_cast<int>(run.node_times.size()));
        CHECK(run.steps + 1 == static_cast<long>(run.node_times.size()));
    }

    TEST_CASE("blowdown rescaling") {
        auto m = line(32);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.1, 34);
        Rng rng(34);
        s.H = algebroid_d(random_two_form(m, 3, 0.1, rng), s);
        IntegratorConfig cfg;
        cfg.t_end = 0.02;
        cfg.report_dt = 0.01;
        FlowRun run = integrate(s, rhs_ungauged, cfg);
        GeometryState same = blowdown_rescale(run.reports, 1.0, 0.01);
        CHECK(max_diff(same.G, run.reports[1].G) == 0.0);

        // parabolic scaling: G, g, H carry weight one, A weight zero
        const double sc = 2.0;
        GeometryState r = blowdown_rescale(run.reports, sc, 0.01);
        CHECK(r.t == 0.01);
        FlowRHS a = rhs_ungauged(r), b = rhs_ungauged(run.reports[2]);
        CHECK(max_diff(a.dG, b.dG) < 1e-12);
        CHECK(max_diff(a.dg, b.dg) < 1e-12);
        CHECK(max_diff(a.GdA, b.GdA) < 1e-12);
        CHECK(max_diff(a.dA, sc * b.dA) < 1e-12);
        CHECK(max_diff(a.dH, b.dH) < 1e-12);
        CHECK_THROWS_AS(blowdown_rescale(run.reports, 10.0, 0.01), Error);

        auto flat = GeometryState::trivial(LieAlgebra::abelian_algebra(2), m);
        GeometryState fr = blowdown_rescale({flat}, 3.0, 0.0);
        CHECK(max_rhs(rhs_ungauged(fr)) == 0.0);
    }

    TEST_CASE("gauge equivalence check") {
        IntegratorConfig cfg;
        cfg.t_end = 0.005;
        cfg.report_dt = 0.0025;
        auto m = line(32);
        GeometryState c = GeometryState::trivial(LieAlgebra::abelian_algebra(1), m);
        c.G *= 2.0;
        CHECK(gauge_flow_check(c, cfg).max_error() < 1e-14);

        const double e32 = gauge_flow_check(scalar_fiber_state(32, 0.2), cfg).max_error();
        const double e64 = gauge_flow_check(scalar_fiber_state(64, 0.2), cfg).max_error();
        CHECK(e64 < 1e-4);
        CHECK(e32 / e64 > 10.0);

        GeometryState h = GeometryState::trivial(LieAlgebra::heisenberg3(), m);
        CHECK_THROWS_AS(gauge_flow_check(h, cfg), Error);
    }

    TEST_CASE("periodic interpolation") {
        auto m = line(32);
        Field f = scalar_fn(m, 1, [](double x, double) { return std::sin(kTwoPi * x); });
        std::vector<double> xq(32);
        for (int p = 0; p < 32; ++p) xq[p] = m->x(0, p) + 0.3 / 32 + (p == 0 ? 1.0 : 0.0);
        Field v = periodic_interpolate(f, xq);
        double err = 0;
        for (int p = 0; p < 32; ++p) err = std::max(err, std::abs(v.at(0, p) - std::sin(kTwoPi * xq[p])));
        CHECK(err < 1e-7);
    }
}
