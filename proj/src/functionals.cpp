#include "functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace grf {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

Field exp_neg(const Field& f) {
    Field w = f;
    for (double& x : w.values()) x = std::exp(-x);
    return w;
}

double sup_sqrt(const Field& scalar) {
    double m = 0;
    for (double x : scalar.values()) m = std::max(m, std::sqrt(std::max(x, 0.0)));
    return m;
}

// Squared norms of the four residual tensors, pointwise.
struct ResidualDensities {
    Field G, A, g, B;
};
ResidualDensities residual_densities(const FlowRHS& r, const DerivedGeometry& dg, const Field& gEi,
                                     const Field* g_shift) {
    ResidualDensities d;
    d.G = ein("ip,jq,ij,pq->", dg.Gi, dg.Gi, r.dG, r.dG);
    d.A = ein("ab,ij,ai,bj->", dg.gi, dg.Gi, r.GdA, r.GdA);
    Field Z = r.dg;
    if (g_shift) Z += *g_shift;
    d.g = ein("ac,bd,ab,cd->", dg.gi, dg.gi, Z, Z);
    d.B = ein("PA,QB,PQ,AB->", gEi, gEi, r.Bdot, r.Bdot);
    return d;
}
}  // namespace

EnergyTerms energy_terms(const GeometryState& s, const DerivedGeometry& dg, const Field& f) {
    EnergyTerms e;
    Field df = gradient(f);
    e.grad_f2 = ein("ab,a,b->", dg.gi, df, df);
    e.R = dg.lc.R;
    e.DG2 = ein("ab,ip,jq,aij,bpq->", dg.gi, dg.Gi, dg.Gi, dg.DG, dg.DG);
    e.F2 = ein("ac,bd,ij,abi,cdj->", dg.gi, dg.gi, s.G, dg.F, dg.F);
    e.H2 = s.H.max_abs() > 0 ? h_contractions(s.H, s.G, s.g).norm2 : Field::scalar(s.mesh, s.k());
    if (s.alg.abelian()) {
        e.BB = Field::scalar(s.mesh, s.k());
    } else {
        const ConstTensor b = s.alg.beta_tensor();
        e.BB = ein("ij,kl,mn,mik,njl->", dg.Gi, dg.Gi, s.G, b, b);
    }
    e.lap_f = ein("ab,ab->", dg.gi, hessian(f, dg.lc));
    return e;
}

Field energy_density(const EnergyTerms& e) {
    Field out = e.grad_f2 + e.R;
    out.axpy(-0.25, e.DG2);
    out.axpy(-0.25, e.F2);
    out.axpy(-1.0 / 12.0, e.H2);
    out.axpy(-0.25, e.BB);
    return out;
}

double eval_F(const GeometryState& s, const Field& f) {
    DerivedGeometry dg = derive(s);
    Field integrand = energy_density(energy_terms(s, dg, f));
    Field w = exp_neg(f);
    for (int p = 0; p < w.npts(); ++p) integrand.at(0, p) *= w.at(0, p);
    return integrate_density(integrand, dg.vol);
}

double eval_Wplus(const GeometryState& s, const Field& f, double t, double n) {
    require(t > 0, ErrorKind::Domain, "eval_Wplus: t must be positive");
    DerivedGeometry dg = derive(s);
    Field w = exp_neg(f);
    Field e = energy_density(energy_terms(s, dg, f));
    Field integrand = Field::scalar(s.mesh, s.k());
    for (int p = 0; p < w.npts(); ++p)
        integrand.at(0, p) = (t * e.at(0, p) + n - f.at(0, p)) * w.at(0, p);
    return std::pow(4 * M_PI * t, -0.5 * n) * integrate_density(integrand, dg.vol);
}

FResiduals residuals_F(const GeometryState& s, const Field& f) {
    DerivedGeometry dg = derive(s);
    FlowRHS r = flow_rhs(s, dg, Gauge::General, &f);
    Field gEi = inverse_spd(total_metric(s.G, s.g), "total metric g_E");
    ResidualDensities d = residual_densities(r, dg, gEi, nullptr);
    Field w = exp_neg(f);
    for (int p = 0; p < w.npts(); ++p) w.at(0, p) *= dg.vol.at(0, p);
    auto I = [&](const Field& x) { return integrate_density(x, w); };
    FResiduals out;
    out.R1 = 0.5 * I(d.G);
    out.R2 = I(d.A);
    out.R3 = 0.5 * I(d.g);
    out.R4 = 0.5 * I(d.B);
    return out;
}

WResiduals residuals_W(const GeometryState& s, const Field& f, double t, double n) {
    require(t > 0, ErrorKind::Domain, "residuals_W: t must be positive");
    DerivedGeometry dg = derive(s);
    FlowRHS r = flow_rhs(s, dg, Gauge::General, &f);
    Field gEi = inverse_spd(total_metric(s.G, s.g), "total metric g_E");
    Field shift = s.g;
    shift *= -1.0 / t;
    ResidualDensities d = residual_densities(r, dg, gEi, &shift);
    Field w = exp_neg(f);
    const double norm = std::pow(4 * M_PI * t, -0.5 * n);
    for (int p = 0; p < w.npts(); ++p) w.at(0, p) *= norm * dg.vol.at(0, p);
    auto I = [&](const Field& x) { return integrate_density(x, w); };
    WResiduals out;
    out.R1 = 0.5 * t * I(d.G);
    out.R2 = t * I(d.A);
    out.R3 = 0.5 * t * I(d.g);
    out.R4 = 0.5 * t * I(d.B);

    EnergyTerms e = energy_terms(s, dg, f);
    Field extra = e.F2;
    extra *= 0.25;
    extra.axpy(-0.25, e.BB);
    if (s.H.max_abs() > 0) {
        HContractions hc = h_contractions(s.H, s.G, s.g);
        extra.axpy(1.0 / 6.0, hc.norm2);
        extra.axpy(-0.25, hc.trG);
    }
    out.W_extra = I(extra);
    return out;
}

VariationGap variation_check_F(const GeometryState& s, const Field& f, const VariationDirection& dir, double eps) {
    DerivedGeometry dg = derive(s);
    const Field C = frame_brackets(s, dg.M, dg.F);
    Field dH = algebroid_d(dir.Bdot, C);
    dH -= splitting_correction(s.H, dir.dA);

    auto shifted = [&](double e) {
        GeometryState x = s;
        x.G.axpy(e, dir.dG);
        x.g.axpy(e, dir.dg);
        x.A.axpy(e, dir.dA);
        x.H.axpy(e, dH);
        Field fx = f;
        fx.axpy(e, dir.df);
        return eval_F(x, fx);
    };
    VariationGap out;
    out.fd = (shifted(eps) - shifted(-eps)) / (2 * eps);

    FlowRHS r = flow_rhs(s, dg, Gauge::General, &f);
    Field gEi = inverse_spd(total_metric(s.G, s.g), "total metric g_E");
    EnergyTerms e = energy_terms(s, dg, f);
    Field w = exp_neg(f);
    for (int p = 0; p < w.npts(); ++p) w.at(0, p) *= dg.vol.at(0, p);
    auto I = [&](const Field& x) { return integrate_density(x, w); };

    out.terms[0] = 0.5 * I(ein("ip,jq,ij,pq->", dg.Gi, dg.Gi, dir.dG, r.dG));
    out.terms[1] = I(ein("ab,ai,bi->", dg.gi, dir.dA, r.GdA));
    out.terms[2] = 0.5 * I(ein("ac,bd,ab,cd->", dg.gi, dg.gi, dir.dg, r.dg));
    out.terms[3] = 0.5 * I(ein("PA,QB,PQ,AB->", gEi, gEi, dir.Bdot, r.Bdot));
    Field scal = energy_density(e);
    scal.axpy(2.0, e.lap_f);
    scal.axpy(-2.0, e.grad_f2);  // energy density carries +|grad f|^2, the variation needs -|grad f|^2
    Field trace = ein("ab,ab->", dg.gi, dir.dg);
    for (int p = 0; p < scal.npts(); ++p) scal.at(0, p) *= 0.5 * trace.at(0, p) - dir.df.at(0, p);
    out.terms[4] = I(scal);

    for (double x : out.terms) out.formula += x;
    out.abs_gap = std::abs(out.fd - out.formula);
    const double scale = std::max(std::abs(out.fd), std::abs(out.formula));
    out.rel_gap = scale > 0 ? out.abs_gap / scale : 0.0;
    return out;
}

RigidityMetrics rigidity_metrics(const GeometryState& s, double t) {
    DerivedGeometry dg = derive(s);
    RigidityMetrics m;
    m.H_sup = s.H.max_abs();
    m.F_sup = dg.F.max_abs();
    FlowRHS r = flow_rhs(s, dg, Gauge::Ungauged);
    m.logdetG_rate = ein("ij,ij->", dg.Gi, r.dG).max_abs();
    m.Ric_sup = sup_sqrt(ein("ac,bd,ab,cd->", dg.gi, dg.gi, dg.lc.Ric, dg.lc.Ric));
    Field E1 = ein("ab,abij->ij", dg.gi, dg.DDG) - ein("ab,pq,aip,bqj->ij", dg.gi, dg.Gi, dg.DG, dg.DG);
    m.expander_fiber = sup_sqrt(ein("ip,jq,ij,pq->", dg.Gi, dg.Gi, E1, E1));
    if (t > 0) {
        Field E2 = dg.lc.Ric;
        E2.axpy(-0.25, ein("pr,qs,apq,brs->ab", dg.Gi, dg.Gi, dg.DG, dg.DG));
        E2.axpy(0.5 / t, s.g);
        m.expander_base = sup_sqrt(ein("ac,bd,ab,cd->", dg.gi, dg.gi, E2, E2));
    } else {
        m.expander_base = kNaN;
    }
    return m;
}

void fill_time_derivatives(std::vector<FunctionalReport>& s, double floor) {
    const size_t n = s.size();
    for (size_t i = 0; i < n; ++i) {
        FunctionalReport& r = s[i];
        r.dF_dt_fd = r.dW_dt_fd = r.identity_gap_F = r.identity_gap_W = kNaN;
        if (i == 0 || i + 1 == n) continue;
        const double t0 = s[i - 1].t, t1 = r.t, t2 = s[i + 1].t;
        // three-point derivative, exact for quadratics on uneven spacing
        auto deriv = [&](double y0, double y1, double y2) {
            const double h0 = t1 - t0, h1 = t2 - t1;
            return (-h1 / (h0 * (h0 + h1))) * y0 + ((h1 - h0) / (h0 * h1)) * y1 + (h0 / (h1 * (h0 + h1))) * y2;
        };
        r.dF_dt_fd = deriv(s[i - 1].F, r.F, s[i + 1].F);
        r.identity_gap_F = std::abs(r.dF_dt_fd - r.RF.sum()) / std::max(std::abs(r.RF.sum()), floor);
        if (std::isfinite(s[i - 1].W)) {
            r.dW_dt_fd = deriv(s[i - 1].W, r.W, s[i + 1].W);
            r.identity_gap_W = std::abs(r.dW_dt_fd - r.RW.sum()) / std::max(std::abs(r.RW.sum()), floor);
        }
    }
}

SolitonFlags soliton_detect(const std::vector<FunctionalReport>& series, const SolitonThresholds& th) {
    require(!series.empty(), ErrorKind::Structural, "soliton_detect: empty report series");
    SolitonFlags fl;
    for (const FunctionalReport& r : series) {
        fl.max_residual_F = std::max(fl.max_residual_F, r.RF.sum());
        const RigidityMetrics& m = r.rigidity;
        fl.max_field = std::max({fl.max_field, m.H_sup, m.F_sup, m.logdetG_rate, m.Ric_sup});
    }
    fl.steady = fl.max_residual_F < th.residual && fl.max_field < th.field;
    const RigidityMetrics& last = series.back().rigidity;
    fl.final_expander = std::max(last.expander_fiber, last.expander_base);
    fl.expander = std::isfinite(last.expander_base) && fl.final_expander < th.residual && last.H_sup < th.field &&
                  last.F_sup < th.field;
    return fl;
}

}  // namespace grf
