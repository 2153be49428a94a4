#include <doctest.h>

#include "helpers.hpp"

using namespace grf;
using namespace grf::test;

namespace {
Field unit_h3(MeshPtr m, int k, double value = 1.0) {
    Field H = zero_three_form(m, k);
    for (int p = 0; p < H.npts(); ++p) H.at(H.comp({0, 1, 2}), p) = 6.0 * value;
    H.enforce_symmetry();
    return H;
}
}  // namespace

TEST_SUITE("torsion") {
    TEST_CASE("zero torsion has zero contractions") {
        auto m = line(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::heisenberg3(), m);
        HContractions c = h_contractions(s.H, s.G, s.g);
        for (const Field* f : {&c.Hff, &c.Hfb, &c.Hbb, &c.trG, &c.trg, &c.norm2}) CHECK(f->max_abs() == 0.0);
        CHECK(dstar_H(s.H, s, derive(s)).max_abs() == 0.0);
        CHECK(b_dot(s.H, s, derive(s), Gauge::Canonical).max_abs() == 0.0);
        SplittingTerms st = splitting_identity(s.H, s.G, s.g);
        CHECK(st.lhs.max_abs() == 0.0);
        CHECK(st.residual.max_abs() == 0.0);
    }

    TEST_CASE("unit fiber three-form") {
        auto m = line(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(3), m);
        s.H = unit_h3(m, 3);
        CHECK(s.H.at(s.H.comp({0, 1, 2}), 0) == doctest::Approx(1.0));
        CHECK(s.H.at(s.H.comp({2, 1, 0}), 0) == doctest::Approx(-1.0));
        HContractions c = h_contractions(s.H, s.G, s.g);
        CHECK(c.norm2.at(0, 0) == doctest::Approx(6.0));
        CHECK(c.trG.at(0, 0) == doctest::Approx(6.0));
        for (int i = 0; i < 3; ++i) CHECK(c.Hff.at(c.Hff.comp({i, i}), 0) == doctest::Approx(2.0));
    }

    TEST_CASE("|H|^2 from block norms matches a brute-force sum") {
        auto m = torus(16);
        Rng rng(9);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.1, 9);
        Field H = smooth_field(m, {Slot::Total, Slot::Total, Slot::Total}, 3, 0.3, rng, {{0, 1, true}, {1, 2, true}});
        HContractions c = h_contractions(H, s.G, s.g);
        Field gEi = inverse_spd(total_metric(s.G, s.g));
        Field brute = ein("PA,QB,RC,PQR,ABC->", gEi, gEi, gEi, H, H);
        Field blocks = c.n3 + 3.0 * c.n21 + 3.0 * c.n12 + c.n03;
        CHECK(max_diff(c.norm2, brute) < 1e-12 * brute.max_abs());
        CHECK(max_diff(blocks, brute) < 1e-12 * brute.max_abs());
        CHECK(c.n03.max_abs() < 1e-14);  // no three-forms on a 2-D base
    }

    TEST_CASE("blocks round trip") {
        auto m = torus(8);
        Rng rng(10);
        Field H = smooth_field(m, {Slot::Total, Slot::Total, Slot::Total}, 2, 1.0, rng, {{0, 1, true}, {1, 2, true}});
        CHECK(max_diff(torsion_from_blocks(torsion_blocks(H)), H) < 1e-14);
    }

    TEST_CASE("d*H vanishes on constant data over a flat abelian product") {
        auto m = torus(16);
        GeometryState s = GeometryState::trivial(LieAlgebra::abelian_algebra(2), m);
        Rng rng(12);
        Field H = zero_three_form(m, 2);
        std::normal_distribution<double> nd;
        for (int c = 0; c < H.ncomp(); ++c) {
            const double v = nd(rng);
            for (int p = 0; p < H.npts(); ++p) H.at(c, p) = v;
        }
        H.declare({{0, 1, true}, {1, 2, true}});
        s.H = H;
        CHECK(dstar_H(H, s, derive(s)).max_abs() < 1e-14);
        CHECK(b_dot(H, s, derive(s), Gauge::Canonical).max_abs() < 1e-14);
    }

    TEST_CASE("d*H matches the oracle codifferential") {
        auto m = torus(32);
        Rng rng(13);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.05, 13);
        Field H = smooth_field(m, {Slot::Total, Slot::Total, Slot::Total}, 3, 0.1, rng, {{0, 1, true}, {1, 2, true}});
        Field closed = dstar_H(H, s, derive(s)), oracle = codifferential_oracle(H, curvature_oracle(s));
        CHECK(max_diff(closed, oracle) < 1e-4 * oracle.max_abs());
    }

    TEST_CASE("exterior derivative") {
        auto m = torus(32);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.05, 14);
        Rng rng(14);
        CHECK(algebroid_d(Field::scalar(m, 3, 2.0), s).max_abs() < 1e-14);

        Field w = smooth_field(m, {Slot::Total}, 3, 0.1, rng);
        Field dw = algebroid_d(w, s);
        CHECK(algebroid_d(dw, s).max_abs() < 1e-4 * dw.max_abs());

        Field B = random_two_form(m, 3, 0.1, rng);
        CHECK(max_diff(algebroid_d2_expanded(B, s, derive(s)), algebroid_d(B, s)) < 1e-10);
    }

    TEST_CASE("canonical B-dot is -d*H plus the q contraction") {
        auto m = torus(16);
        Rng rng(15);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.1, 15);
        s.H = algebroid_d(random_two_form(m, 3, 0.1, rng), s);
        DerivedGeometry dg = derive(s);
        Field lhs = b_dot(s.H, s, dg, Gauge::Canonical);
        Field rhs = dstar_H(s.H, s, dg) + interior_base(dg.q, s.H);
        CHECK(max_diff(lhs, rhs) < 1e-13 * std::max(1.0, rhs.max_abs()));
        CHECK(max_diff(b_dot(s.H, s, dg, Gauge::Ungauged), dstar_H(s.H, s, dg)) == 0.0);
    }

    TEST_CASE("splitting identity") {
        auto m = torus(16);
        Rng rng(16);
        GeometryState s = perturbed(LieAlgebra::heisenberg3(), m, 0.1, 16);
        Field H = smooth_field(m, {Slot::Total, Slot::Total, Slot::Total}, 3, 0.5, rng, {{0, 1, true}, {1, 2, true}});
        SplittingTerms st = splitting_identity(H, s.G, s.g);
        CHECK(st.residual.max_abs() < 1e-12 * st.lhs.max_abs());

        // without fiber torsion the right side is a sum of nonnegative terms
        TorsionBlocks b = torsion_blocks(H);
        b.H3 = Field(m, {Slot::Fiber, Slot::Fiber, Slot::Fiber}, 3, {{0, 1, true}, {1, 2, true}});
        SplittingTerms s0 = splitting_identity(torsion_from_blocks(b), s.G, s.g);
        CHECK(s0.fiber.max_abs() == 0.0);
        for (double x : s0.lhs.values()) CHECK(x >= -1e-14);
    }

    TEST_CASE("splitting correction") {
        auto m = line(16);
        Rng rng(17);
        Field H = unit_h3(m, 3);
        Field zeroA(m, {Slot::Base, Slot::Fiber}, 3);
        CHECK(splitting_correction(H, zeroA).max_abs() == 0.0);

        Field alpha = smooth_field(m, {Slot::Base, Slot::Fiber}, 3, 0.5, rng);
        TorsionBlocks corr = torsion_blocks(splitting_correction(H, alpha));
        CHECK(corr.H3.max_abs() == 0.0);
        CHECK(corr.H21.max_abs() > 0.1);
    }

    TEST_CASE("gauge names") {
        CHECK(parse_gauge("canonical") == Gauge::Canonical);
        CHECK(std::string(gauge_name(Gauge::General)) == "general");
        CHECK_THROWS_AS(parse_gauge("harmonic"), Error);
    }
}
