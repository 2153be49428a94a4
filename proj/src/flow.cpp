#include "flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace grf {

namespace {
constexpr Slot Tt = Slot::Total;

bool is_zero(const Field& f) { return f.max_abs() == 0.0; }
}  // namespace

Field hessian(const Field& f, const LeviCivita& lc) {
    Field d1 = gradient(f);
    Field h = gradient(d1) - ein("cab,c->ab", lc.Gamma, d1);
    h.declare({{0, 1, false}});
    return h;
}

FlowRHS flow_rhs(const GeometryState& s, Gauge gauge, const Field* f) { return flow_rhs(s, derive(s), gauge, f); }

FlowRHS flow_rhs(const GeometryState& s, const DerivedGeometry& dg, Gauge gauge, const Field* f) {
    require(gauge != Gauge::General || f != nullptr, ErrorKind::Structural, "flow_rhs: general gauge needs f");
    const Field &G = s.G, &Gi = dg.Gi, &gi = dg.gi, &DG = dg.DG, &DDG = dg.DDG, &F = dg.F;
    const ConstTensor b = s.alg.beta_tensor();
    const bool ungauged = gauge == Gauge::Ungauged;
    const bool has_H = !is_zero(s.H);
    const Field GF = ein("abm,mi->abi", F, G);
    FlowRHS r;

    r.dG = ein("ab,abij->ij", gi, DDG);
    r.dG -= ein("ab,pq,aip,bqj->ij", gi, Gi, DG, DG);
    r.dG.axpy(-0.5, ein("ac,bd,abi,cdj->ij", gi, gi, GF, GF));
    if (!s.alg.abelian()) {
        r.dG += ein("pq,mn,mpi,nqj->ij", Gi, G, b, b);
        Field Gb = ein("mi,mpq->ipq", G, b);
        r.dG.axpy(-0.5, ein("pr,qs,ipq,jrs->ij", Gi, Gi, Gb, Gb));
    }
    if (ungauged) r.dG.axpy(0.5, ein("ab,a,bij->ij", gi, dg.trDG, DG));

    r.GdA = ein("bc,bacm,mi->ai", gi, dg.DF, G);
    r.GdA += ein("bc,bmi,acm->ai", gi, DG, F);
    r.GdA *= -1.0;
    if (!s.alg.abelian()) r.GdA += ein("pq,amq,mpi->ai", Gi, DG, b);
    if (ungauged) r.GdA.axpy(-0.5, ein("bc,aci,b->ai", gi, GF, dg.trDG));

    r.dg = dg.lc.Ric;
    r.dg *= -2.0;
    r.dg += ein("cd,acn,bdn->ab", gi, GF, F);
    Field DGDG = ein("pr,qs,apq,brs->ab", Gi, Gi, DG, DG);
    if (ungauged) {
        r.dg += ein("pq,abpq->ab", Gi, DDG);
        r.dg.axpy(-0.5, DGDG);
    } else {
        r.dg.axpy(0.5, DGDG);
    }

    if (gauge == Gauge::General) {
        Field gradf = ein("ab,b->a", gi, gradient(*f));
        r.dG -= ein("a,aij->ij", gradf, DG);
        r.GdA -= ein("b,bai->ai", gradf, GF);
        r.dg.axpy(-2.0, hessian(*f, dg.lc));
    }

    if (has_H) {
        HContractions hc = h_contractions(s.H, G, s.g);
        r.dG.axpy(0.5, hc.Hff);
        r.GdA.axpy(0.5, ein("ia->ai", hc.Hfb));
        r.dg.axpy(0.5, hc.Hbb);
    }
    r.dG.declare({{0, 1, false}});
    r.dg.declare({{0, 1, false}});
    r.dA = ein("ai,ij->aj", r.GdA, Gi);

    if (has_H) {
        r.Bdot = b_dot(s.H, s, dg, gauge, f);
        r.dH = algebroid_d(r.Bdot, frame_brackets(s, dg.M, F));
        r.dH -= splitting_correction(s.H, r.dA);
    } else {
        r.Bdot = zero_two_form(s.mesh, s.k());
        r.dH = zero_three_form(s.mesh, s.k());
    }
    return r;
}

GeometryState add_scaled(const GeometryState& s, double h, const FlowRHS& r) {
    GeometryState out = s;
    out.t = s.t + h;
    out.G.axpy(h, r.dG);
    out.g.axpy(h, r.dg);
    out.A.axpy(h, r.dA);
    out.H.axpy(h, r.dH);
    return out;
}

double stable_dt(const GeometryState& s, double sigma) {
    const double hmin = s.mesh->min_h();
    // max eig of g^{-1} is 1 / min eig of g
    const double lam = 1.0 / min_eigenvalue(s.g);
    return sigma * hmin * hmin / lam;
}

GeometryState rk4_step(const GeometryState& s, const RhsFn& rhs, double dt, double spd_floor) {
    FlowRHS k1 = rhs(s);
    FlowRHS k2 = rhs(add_scaled(s, 0.5 * dt, k1));
    FlowRHS k3 = rhs(add_scaled(s, 0.5 * dt, k2));
    FlowRHS k4 = rhs(add_scaled(s, dt, k3));
    GeometryState out = s;
    out.t = s.t + dt;
    const double w[4] = {dt / 6, dt / 3, dt / 3, dt / 6};
    const FlowRHS* ks[4] = {&k1, &k2, &k3, &k4};
    for (int i = 0; i < 4; ++i) {
        out.G.axpy(w[i], ks[i]->dG);
        out.g.axpy(w[i], ks[i]->dg);
        out.A.axpy(w[i], ks[i]->dA);
        out.H.axpy(w[i], ks[i]->dH);
    }
    out.G.enforce_symmetry();
    out.g.enforce_symmetry();
    out.H.enforce_symmetry();
    validate_state(out, spd_floor);
    return out;
}

double closedness_defect(const GeometryState& s) {
    if (s.n() < 4 || is_zero(s.H)) return 0.0;
    return algebroid_d(s.H, s).max_abs();
}

namespace {
// Step towards the next report time without leaving a sliver at the end.
double clip_step(double t, double dt, double target) {
    if (t + dt >= target) return target - t;
    if (t + 2 * dt > target) return 0.5 * (target - t);
    return dt;
}

std::string describe_abort(const Error& e, double t) {
    std::ostringstream o;
    o << "aborted at t=" << t << ": " << e.what();
    return o.str();
}
}  // namespace

FlowRun integrate(const GeometryState& s0, const RhsFn& rhs, const IntegratorConfig& cfg, const NodeObserver& on_node) {
    require(cfg.sigma > 0 && cfg.sigma < 1, ErrorKind::Config, "integrator: sigma must lie in (0,1)");
    require(cfg.fixed_steps > 0 || cfg.t_end > 0, ErrorKind::Config, "integrator: t_end must be positive");
    validate_state(s0, cfg.spd_floor);
    FlowRun run;
    GeometryState s = s0;
    run.reports.push_back(s);
    run.node_times.push_back(s.t);
    if (on_node) on_node(s);
    if (cfg.track_closedness) run.max_dH = closedness_defect(s);

    auto accept = [&](GeometryState next) {
        s = std::move(next);
        ++run.steps;
        run.node_times.push_back(s.t);
        if (on_node) on_node(s);
    };
    auto check_blowup = [&]() {
        for (const Field* f : {&s.G, &s.g, &s.A, &s.H})
            if (f->max_abs() > cfg.blowup) fail(ErrorKind::Domain, "field magnitude exceeds blow-up threshold");
    };
    auto report = [&]() {
        run.reports.push_back(s);
        if (cfg.track_closedness) run.max_dH = std::max(run.max_dH, closedness_defect(s));
    };

    try {
        if (cfg.fixed_steps > 0) {
            for (int i = 0; i < cfg.fixed_steps; ++i) {
                accept(rk4_step(s, rhs, stable_dt(s, cfg.sigma), cfg.spd_floor));
                check_blowup();
            }
            report();
            return run;
        }
        const double t0 = s0.t;
        const double rdt = cfg.report_dt > 0 ? cfg.report_dt : cfg.t_end / 40.0;
        const int nrep = std::max(1, static_cast<int>(std::ceil((cfg.t_end - 1e-12 * cfg.t_end) / rdt)));
        for (int ri = 1; ri <= nrep; ++ri) {
            const double target = t0 + (ri == nrep ? cfg.t_end : ri * rdt);
            while (s.t < target) {
                require(run.steps < cfg.max_steps, ErrorKind::Abort, "integrator: step budget exhausted");
                double dt = clip_step(s.t, stable_dt(s, cfg.sigma), target);
                GeometryState next = rk4_step(s, rhs, dt, cfg.spd_floor);
                if (next.t >= target - 1e-14 * std::max(1.0, target)) next.t = target;
                accept(std::move(next));
                check_blowup();
            }
            report();
        }
    } catch (const Error& e) {
        run.aborted = true;
        run.abort_reason = describe_abort(e, s.t);
    }
    return run;
}

GeometryState blowdown_rescale(const std::vector<GeometryState>& history, double s, double t) {
    require(s > 0, ErrorKind::Structural, "blowdown_rescale: s must be positive");
    require(!history.empty(), ErrorKind::Structural, "blowdown_rescale: empty history");
    const double T = s * t;
    const double eps = 1e-12 * std::max(1.0, std::abs(T));
    require(T >= history.front().t - eps && T <= history.back().t + eps, ErrorKind::Structural,
            "blowdown_rescale: time s*t outside stored history");
    size_t j = 1;
    while (j < history.size() && history[j].t < T) ++j;
    GeometryState out;
    if (j >= history.size()) {
        out = history.back();
    } else {
        const GeometryState &a = history[j - 1], &b = history[j];
        const double w = b.t > a.t ? std::clamp((T - a.t) / (b.t - a.t), 0.0, 1.0) : 1.0;
        out = a;
        auto lerp = [&](Field& dst, const Field& fa, const Field& fb) {
            dst = fa;
            dst *= (1 - w);
            dst.axpy(w, fb);
        };
        lerp(out.G, a.G, b.G);
        lerp(out.g, a.g, b.g);
        lerp(out.A, a.A, b.A);
        lerp(out.H, a.H, b.H);
    }
    out.G *= 1.0 / s;
    out.g *= 1.0 / s;
    out.H *= 1.0 / s;
    out.t = t;
    return out;
}

Field periodic_interpolate(const Field& f, const std::vector<double>& xq) {
    const Mesh& m = f.mesh();
    require(m.d == 1, ErrorKind::Structural, "periodic_interpolate: 1-D mesh required");
    const int N = m.n[0];
    require(static_cast<int>(xq.size()) == N, ErrorKind::Structural, "periodic_interpolate: one query per point");
    const double h = m.h(0);
    constexpr int W = 8;
    std::vector<int> base(N);
    std::vector<double> wts(static_cast<size_t>(N) * W);
    for (int p = 0; p < N; ++p) {
        const double sx = xq[p] / h;
        const int i0 = static_cast<int>(std::floor(sx)) - 3;
        base[p] = i0;
        for (int j = 0; j < W; ++j) {
            double w = 1.0;
            for (int l = 0; l < W; ++l)
                if (l != j) w *= (sx - (i0 + l)) / static_cast<double>(j - l);
            wts[static_cast<size_t>(p) * W + j] = w;
        }
    }
    Field out = f;
    for (int c = 0; c < f.ncomp(); ++c) {
        const double* src = f.data(c);
        double* dst = out.data(c);
        for (int p = 0; p < N; ++p) {
            double v = 0;
            for (int j = 0; j < W; ++j) {
                int i = (base[p] + j) % N;
                if (i < 0) i += N;
                v += wts[static_cast<size_t>(p) * W + j] * src[i];
            }
            dst[p] = v;
        }
    }
    return out;
}

double GaugeCheckReport::max_error() const {
    double m = 0;
    for (const auto* v : {&err_G, &err_g, &err_A, &err_H})
        for (double x : *v) m = std::max(m, x);
    return m;
}

namespace {
// Multiplies every component by jac^(number of base slots); d = 1 so Total slot k is the base one.
Field pull_back_slots(const Field& f, const Field& jac) {
    Field out = f;
    std::vector<int> idx(f.rank());
    for (int c = 0; c < f.ncomp(); ++c) {
        f.unflatten(c, idx.data());
        int nb = 0;
        for (int s = 0; s < f.rank(); ++s)
            if (f.slots()[s] == Slot::Base || (f.slots()[s] == Tt && idx[s] >= f.k())) ++nb;
        if (nb == 0) continue;
        double* d = out.data(c);
        for (int p = 0; p < f.npts(); ++p) d[p] *= std::pow(jac.at(0, p), nb);
    }
    return out;
}

double sup_diff(const Field& a, const Field& b) { return (a - b).max_abs(); }
}  // namespace

GaugeCheckReport gauge_flow_check(const GeometryState& s0, const IntegratorConfig& cfg) {
    require(s0.d() == 1, ErrorKind::Structural, "gauge_flow_check: only supported on a 1-D base");
    require(s0.alg.abelian() && is_zero(s0.A), ErrorKind::Validation,
            "gauge_flow_check: requires an abelian algebra and A = 0 (the vertical part of the lift is not modelled)");
    require(cfg.t_end > 0, ErrorKind::Config, "gauge_flow_check: t_end must be positive");

    FlowRun canon = integrate(s0, rhs_canonical, cfg);
    require(!canon.aborted, ErrorKind::Abort, "gauge_flow_check: canonical run " + canon.abort_reason);

    const Mesh& m = *s0.mesh;
    const int N = m.n[0];
    auto positions = [&](const Field& psi) {
        std::vector<double> xq(N);
        for (int p = 0; p < N; ++p) xq[p] = m.x(0, p) + psi.at(0, p);
        return xq;
    };
    // Augmented system: ungauged state plus the displacement psi of phi(x) = x + psi(x).
    struct Aug {
        FlowRHS r;
        Field dpsi;
    };
    auto aug_rhs = [&](const GeometryState& s, const Field& psi) {
        DerivedGeometry dg = derive(s);
        Aug a{flow_rhs(s, dg, Gauge::Ungauged), periodic_interpolate(dg.q, positions(psi))};
        return a;
    };

    GaugeCheckReport rep;
    GeometryState s = s0;
    Field psi(s0.mesh, {Slot::Base}, s0.k());
    auto compare = [&](const GeometryState& c) {
        std::vector<double> xq = positions(psi);
        Field jac = partial_derivative(psi, 0);
        for (double& v : jac.values()) v += 1.0;
        rep.times.push_back(s.t);
        rep.err_G.push_back(sup_diff(periodic_interpolate(s.G, xq), c.G));
        rep.err_g.push_back(sup_diff(pull_back_slots(periodic_interpolate(s.g, xq), jac), c.g));
        rep.err_A.push_back(sup_diff(pull_back_slots(periodic_interpolate(s.A, xq), jac), c.A));
        rep.err_H.push_back(sup_diff(pull_back_slots(periodic_interpolate(s.H, xq), jac), c.H));
    };
    compare(canon.reports.front());

    const double rdt = cfg.report_dt > 0 ? cfg.report_dt : cfg.t_end / 40.0;
    const int nrep = std::max(1, static_cast<int>(std::ceil((cfg.t_end - 1e-12 * cfg.t_end) / rdt)));
    for (int ri = 1; ri <= nrep; ++ri) {
        const double target = s0.t + (ri == nrep ? cfg.t_end : ri * rdt);
        while (s.t < target) {
            const double dt = clip_step(s.t, stable_dt(s, cfg.sigma), target);
            Aug k1 = aug_rhs(s, psi);
            Field p2 = psi;
            p2.axpy(0.5 * dt, k1.dpsi);
            Aug k2 = aug_rhs(add_scaled(s, 0.5 * dt, k1.r), p2);
            Field p3 = psi;
            p3.axpy(0.5 * dt, k2.dpsi);
            Aug k3 = aug_rhs(add_scaled(s, 0.5 * dt, k2.r), p3);
            Field p4 = psi;
            p4.axpy(dt, k3.dpsi);
            Aug k4 = aug_rhs(add_scaled(s, dt, k3.r), p4);
            const double w[4] = {dt / 6, dt / 3, dt / 3, dt / 6};
            const Aug* ks[4] = {&k1, &k2, &k3, &k4};
            GeometryState next = s;
            next.t = s.t + dt;
            for (int i = 0; i < 4; ++i) {
                next.G.axpy(w[i], ks[i]->r.dG);
                next.g.axpy(w[i], ks[i]->r.dg);
                next.A.axpy(w[i], ks[i]->r.dA);
                next.H.axpy(w[i], ks[i]->r.dH);
                psi.axpy(w[i], ks[i]->dpsi);
            }
            next.G.enforce_symmetry();
            next.g.enforce_symmetry();
            next.H.enforce_symmetry();
            validate_state(next, cfg.spd_floor);
            if (next.t >= target - 1e-14 * std::max(1.0, target)) next.t = target;
            s = std::move(next);
        }
        require(static_cast<size_t>(ri) < canon.reports.size(), ErrorKind::Abort, "gauge_flow_check: report mismatch");
        compare(canon.reports[ri]);
    }
    return rep;
}

}  // namespace grf
