#include "verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "functionals.hpp"
#include "random_fields.hpp"

namespace grf {

namespace {

double rel_err(const Field& a, const Field& ref) {
    const double e = (a - ref).max_abs();
    const double m = ref.max_abs();
    return m > 1e-14 ? e / m : e;
}

CheckResult below(const std::string& suite, const std::string& name, double v, double thr, std::string detail = {}) {
    return {suite, name, v, thr, std::isfinite(v) && v < thr, std::move(detail)};
}

GeometryState heisenberg_plane_state(int N, double amp, std::uint64_t seed) {
    Rng rng(seed);
    auto mesh = Mesh::make(2, {N, N}, {1.0, 1.0});
    return random_state(LieAlgebra::heisenberg3(), mesh, amp, rng);
}

std::vector<CheckResult> curvature_suite(const VerifyOptions& o) {
    const char* names[] = {"R1", "R2", "R3", "R4", "R5", "Ricff", "Ricfb", "Ricbb", "R"};
    auto errors = [&](int N) {
        GeometryState s = heisenberg_plane_state(N, o.amplitude, o.seed);
        CurvatureSet cf = curvature_closed_form(s, derive(s));
        CurvatureSet ob = oracle_blocks(curvature_oracle(s), s.k());
        const Field* a[] = {&cf.R1, &cf.R2, &cf.R3, &cf.R4, &cf.R5, &cf.Ricff, &cf.Ricfb, &cf.Ricbb, &cf.R};
        const Field* b[] = {&ob.R1, &ob.R2, &ob.R3, &ob.R4, &ob.R5, &ob.Ricff, &ob.Ricfb, &ob.Ricbb, &ob.R};
        std::vector<double> e;
        for (int i = 0; i < 9; ++i) e.push_back(rel_err(*a[i], *b[i]));
        return e;
    };
    const int fine = o.mesh, coarse = o.mesh / 2;
    std::vector<double> ec = errors(coarse), ef = errors(fine);
    std::vector<CheckResult> out;
    for (int i = 0; i < 9; ++i) {
        std::ostringstream d;
        d << "N=" << coarse << ": " << ec[i] << ", N=" << fine << ": " << ef[i];
        out.push_back(below("curvature", std::string(names[i]) + " rel err", ef[i], 1e-5, d.str()));
        // Blocks that agree to round-off have no discretization error to measure.
        if (ef[i] < 1e-10) {
            out.push_back({"curvature", std::string(names[i]) + " order ratio", 0.0, 12.0, true, "exact to round-off"});
        } else {
            const double ratio = ec[i] / ef[i];
            out.push_back({"curvature", std::string(names[i]) + " order ratio", ratio, 12.0, ratio >= 12.0, d.str()});
        }
    }
    return out;
}

std::vector<CheckResult> torsion_suite(const VerifyOptions& o) {
    std::vector<CheckResult> out;
    GeometryState s = heisenberg_plane_state(o.mesh, o.amplitude, o.seed);
    Rng rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
    DerivedGeometry dg = derive(s);
    OracleGeometry og = oracle_connection(s);
    Field H = smooth_field(s.mesh, {Slot::Total, Slot::Total, Slot::Total}, s.k(), 0.1, rng,
                           {{0, 1, true}, {1, 2, true}});
    out.push_back(below("torsion", "dstar_H vs oracle codifferential", rel_err(dstar_H(H, s, dg), codifferential_oracle(H, og)),
                        1e-5));

    Field B = random_two_form(s.mesh, s.k(), 0.1, rng);
    out.push_back(below("torsion", "d of two-form vs expanded formula",
                        rel_err(algebroid_d2_expanded(B, s, dg), algebroid_d(B, og.C)), 1e-10));

    // d(d form) is pure truncation error: small, and shrinking at fourth order.
    auto dd_defects = [&](int N) {
        GeometryState x = heisenberg_plane_state(N, o.amplitude, o.seed);
        Field C = oracle_connection(x).C;
        Rng r2(o.seed + 17);
        std::vector<double> e;
        Field forms[] = {smooth_field(x.mesh, {}, x.k(), 0.1, r2), smooth_field(x.mesh, {Slot::Total}, x.k(), 0.1, r2),
                         random_two_form(x.mesh, x.k(), 0.1, r2)};
        for (const Field& w : forms) {
            Field dw = algebroid_d(w, C);
            e.push_back(algebroid_d(dw, C).max_abs() / dw.max_abs());
        }
        return e;
    };
    std::vector<double> dc = dd_defects(o.mesh / 2), df = dd_defects(o.mesh);
    const char* deg[] = {"scalar", "one-form", "two-form"};
    for (int i = 0; i < 3; ++i) {
        std::ostringstream d;
        d << "N=" << o.mesh / 2 << ": " << dc[i] << ", N=" << o.mesh << ": " << df[i];
        out.push_back(below("torsion", std::string("d(d ") + deg[i] + ") relative", df[i], 1e-5, d.str()));
        if (df[i] < 1e-10)
            out.push_back({"torsion", std::string("d(d ") + deg[i] + ") order ratio", 0.0, 12.0, true, "exact to round-off"});
        else
            out.push_back({"torsion", std::string("d(d ") + deg[i] + ") order ratio", dc[i] / df[i], 12.0,
                           dc[i] / df[i] >= 12.0, d.str()});
    }

    // Canonical B-dot equals -d*H + H(q,*,*) with H(q,*,*) = -1/2 g^{ab} trDG_b H(a,*,*).
    Field lhs = b_dot(H, s, dg, Gauge::Canonical);
    Field rhs = dstar_H(H, s, dg);
    rhs.axpy(-0.5, ein("ab,b,aYZ->YZ", dg.gi, dg.trDG, extract_block(H, {Slot::Base, Slot::Total, Slot::Total})));
    out.push_back(below("torsion", "canonical B-dot identity", rel_err(lhs, rhs), 1e-12));

    SplittingTerms st = splitting_identity(H, s.G, s.g);
    HContractions hc = h_contractions(H, s.G, s.g);
    double worst = 0;
    for (int p = 0; p < H.npts(); ++p)
        worst = std::max(worst, std::abs(st.residual.at(0, p)) / (std::abs(hc.norm2.at(0, p)) + 1.0));
    out.push_back(below("torsion", "splitting identity on smooth fields", worst, 1e-12));
    return out;
}

// Nilpotent algebra with generic constants: a preset rewritten in a random basis.
LieAlgebra random_nilpotent(Rng& rng) {
    std::uniform_int_distribution<int> pick(0, 1);
    LieAlgebra base = pick(rng) ? LieAlgebra::heisenberg3() : LieAlgebra::preset("filiform4");
    const int k = base.k;
    std::normal_distribution<double> nd;
    Eigen::MatrixXd P(k, k);
    do {
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) P(i, j) = (i == j ? 1.0 : 0.0) + 0.5 * nd(rng);
    } while (std::abs(P.determinant()) < 0.2);
    Eigen::MatrixXd Pi = P.inverse();
    LieAlgebra out = LieAlgebra::abelian_algebra(k);
    // new basis y_i = P^a_i x_a
    for (int m = 0; m < k; ++m)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                double v = 0;
                for (int n = 0; n < k; ++n)
                    for (int a = 0; a < k; ++a)
                        for (int b = 0; b < k; ++b) v += Pi(m, n) * base(n, a, b) * P(a, i) * P(b, j);
                out(m, i, j) = v;
            }
    return out;
}

std::vector<double> random_spd(int k, Rng& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd X(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) X(i, j) = nd(rng);
    Eigen::MatrixXd G = X * X.transpose() + 0.1 * Eigen::MatrixXd::Identity(k, k);
    return std::vector<double>(G.data(), G.data() + k * k);
}

double frob(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<CheckResult> algebra_suite(const VerifyOptions& o) {
    std::vector<CheckResult> out;
    Rng rng(o.seed);
    double worst_single = 0, worst_nested = 0;
    for (int n = 0; n < o.samples; ++n) {
        LieAlgebra alg = random_nilpotent(rng);
        require_nilpotent(alg);
        std::vector<double> G = random_spd(alg.k, rng);
        AdTraces tr = ad_traces(alg, G);
        Eigen::Map<const Eigen::MatrixXd> Gm(G.data(), alg.k, alg.k);
        const double scale = Gm.norm() * Gm.inverse().norm();
        const double c = frob(alg.c);
        for (double x : tr.single) worst_single = std::max(worst_single, std::abs(x) / (scale * c));
        for (double x : tr.nested) worst_nested = std::max(worst_nested, std::abs(x) / (scale * c * c));
    }
    out.push_back(below("algebra", "tr_G G([eta,.],.) relative", worst_single, 1e-12));
    out.push_back(below("algebra", "tr_G G([eta1,[eta2,.]],.) relative", worst_nested, 1e-12));

    // Pointwise splitting identity on unstructured random samples.
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(o.samples))));
    auto mesh = Mesh::make(2, {std::max(side, 8), std::max(side, 8)}, {1.0, 1.0});
    const int k = 3;
    std::normal_distribution<double> nd;
    Field G(mesh, {Slot::Fiber, Slot::Fiber}, k, {{0, 1, false}});
    Field g(mesh, {Slot::Base, Slot::Base}, k, {{0, 1, false}});
    Field H(mesh, {Slot::Total, Slot::Total, Slot::Total}, k);
    for (int p = 0; p < mesh->npts(); ++p) {
        std::vector<double> a = random_spd(k, rng), b = random_spd(2, rng);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) G.at(G.comp({i, j}), p) = a[i * k + j];
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) g.at(g.comp({i, j}), p) = b[i * 2 + j];
    }
    for (double& x : H.values()) x = nd(rng);
    H.declare({{0, 1, true}, {1, 2, true}});
    SplittingTerms st = splitting_identity(H, G, g);
    double worst = 0;
    for (int p = 0; p < mesh->npts(); ++p) {
        const double scale = std::abs(st.lhs.at(0, p)) + std::abs(st.fiber.at(0, p)) + std::abs(st.mixed.at(0, p)) +
                             std::abs(st.base.at(0, p));
        worst = std::max(worst, std::abs(st.residual.at(0, p)) / std::max(scale, 1e-300));
    }
    out.push_back(below("algebra", "splitting identity relative", worst, 1e-12,
                        std::to_string(mesh->npts()) + " random samples"));

    LieAlgebra so3 = LieAlgebra::abelian_algebra(3);
    so3(0, 1, 2) = 1; so3(0, 2, 1) = -1;
    so3(1, 2, 0) = 1; so3(1, 0, 2) = -1;
    so3(2, 0, 1) = 1; so3(2, 1, 0) = -1;
    AlgebraReport rep = validate_algebra(so3);
    out.push_back({"algebra", "so(3) rejected as non-nilpotent", rep.nilpotent ? 1.0 : 0.0, 0.5, !rep.nilpotent,
                   rep.describe()});
    return out;
}

std::vector<CheckResult> variation_suite(const VerifyOptions& o) {
    Rng rng(o.seed);
    auto mesh = Mesh::make(2, {o.mesh, o.mesh}, {1.0, 1.0});
    GeometryState s = random_state(LieAlgebra::heisenberg3(), mesh, 0.05, rng);
    DerivedGeometry dg = derive(s);
    s.H = algebroid_d(random_two_form(mesh, s.k(), 0.1, rng), frame_brackets(s, dg.M, dg.F));
    Field f = smooth_field(mesh, {}, s.k(), 0.05, rng);
    double worst = 0;
    for (int n = 0; n < o.directions; ++n) {
        VariationDirection dir;
        dir.dG = smooth_field(mesh, {Slot::Fiber, Slot::Fiber}, s.k(), 0.1, rng, {{0, 1, false}});
        dir.dA = smooth_field(mesh, {Slot::Base, Slot::Fiber}, s.k(), 0.1, rng);
        dir.dg = smooth_field(mesh, {Slot::Base, Slot::Base}, s.k(), 0.1, rng, {{0, 1, false}});
        dir.Bdot = random_two_form(mesh, s.k(), 0.1, rng);
        dir.df = smooth_field(mesh, {}, s.k(), 0.1, rng);
        worst = std::max(worst, variation_check_F(s, f, dir).rel_gap);
    }
    return {below("variation", "max relative gap over " + std::to_string(o.directions) + " directions", worst, 1e-4)};
}

const std::map<std::string, std::function<std::vector<CheckResult>(const VerifyOptions&)>>& registry() {
    static const std::map<std::string, std::function<std::vector<CheckResult>(const VerifyOptions&)>> r = {
        {"curvature", curvature_suite},
        {"torsion", torsion_suite},
        {"algebra", algebra_suite},
        {"variation", variation_suite},
    };
    return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> n = {"curvature", "torsion", "algebra", "variation"};
    return n;
}

std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opt) {
    require(opt.mesh >= 16 && opt.mesh % 2 == 0, ErrorKind::Config, "verify: mesh must be even and >= 16");
    if (suite == "all") {
        std::vector<CheckResult> all;
        for (const auto& n : suite_names()) {
            auto r = registry().at(n)(opt);
            all.insert(all.end(), r.begin(), r.end());
        }
        return all;
    }
    auto it = registry().find(suite);
    require(it != registry().end(), ErrorKind::Config,
            "unknown verification suite '" + suite + "' (expected curvature, torsion, algebra, variation or all)");
    return it->second(opt);
}

std::string format_table(const std::vector<CheckResult>& rows) {
    std::ostringstream o;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-10s %-44s %12s %10s  %s\n", "suite", "check", "value", "limit", "result");
    o << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-10s %-44s %12.4e %10.2e  %s", r.suite.c_str(), r.name.c_str(), r.value,
                      r.threshold, r.pass ? "PASS" : "FAIL");
        o << buf;
        if (!r.detail.empty()) o << "  (" << r.detail << ")";
        o << "\n";
    }
    return o.str();
}

bool all_pass(const std::vector<CheckResult>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const CheckResult& r) { return r.pass; });
}

}  // namespace grf
