#include "conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace grf {

ConjugateBackground conjugate_background(const GeometryState& s) { return conjugate_background(s, derive(s)); }

ConjugateBackground conjugate_background(const GeometryState& s, const DerivedGeometry& dg) {
    ConjugateBackground bg;
    bg.t = s.t;
    bg.g = s.g;
    bg.q = dg.q;
    bg.c = dg.lc.R;
    bg.c.axpy(-0.25, ein("ab,ip,jq,aij,bpq->", dg.gi, dg.Gi, dg.Gi, dg.DG, dg.DG));
    if (s.d() > 1) bg.c.axpy(-0.5, ein("ac,bd,ij,abi,cdj->", dg.gi, dg.gi, s.G, dg.F, dg.F));
    if (s.H.max_abs() > 0) bg.c.axpy(-0.25, h_contractions(s.H, s.G, s.g).trg);
    return bg;
}

Field laplacian(const Field& u, const Field& g) {
    Field gi = inverse_spd(g, "base metric g");
    Field vol = sqrt_det(g);
    Field flux = ein("ab,b->a", gi, gradient(u));
    for (int a = 0; a < flux.dim(0); ++a) {
        double* f = flux.data(a);
        for (int p = 0; p < flux.npts(); ++p) f[p] *= vol.at(0, p);
    }
    Field div = Field::scalar(u.mesh_ptr(), u.k());
    Field dflux = gradient(flux);  // (b, a) = d_b flux^a
    for (int a = 0; a < flux.dim(0); ++a) {
        const double* d = dflux.data(dflux.comp({a, a}));
        for (int p = 0; p < div.npts(); ++p) div.at(0, p) += d[p];
    }
    for (int p = 0; p < div.npts(); ++p) div.at(0, p) /= vol.at(0, p);
    return div;
}

Field conj_rhs(const Field& u, const ConjugateBackground& bg, double kappa) {
    for (int p = 0; p < u.npts(); ++p)
        require(u.at(0, p) > 0, ErrorKind::Domain,
                "conjugate heat: u must be positive (u=" + std::to_string(u.at(0, p)) + " at point " +
                    std::to_string(p) + ")");
    Field out = laplacian(u, bg.g);
    out *= -1.0;
    Field drift = ein("a,a->", bg.q, gradient(u));  // <q, grad log u> u = q^a d_a u
    for (int p = 0; p < u.npts(); ++p) out.at(0, p) += bg.c.at(0, p) * u.at(0, p) + kappa * drift.at(0, p);
    return out;
}

ConjugateBackground interpolate_background(const std::vector<ConjugateBackground>& h, double t) {
    require(!h.empty(), ErrorKind::Structural, "interpolate_background: empty history");
    const int n = static_cast<int>(h.size());
    if (n == 1) return h.front();
    int j = static_cast<int>(std::lower_bound(h.begin(), h.end(), t, [](const ConjugateBackground& b, double x) {
                                 return b.t < x;
                             }) - h.begin());
    // exact node hit
    if (j < n && h[j].t == t) return h[j];
    const int m = std::min(4, n);
    int lo = std::clamp(j - 2, 0, n - m);
    ConjugateBackground out = h[lo];
    out.t = t;
    out.g *= 0.0;
    out.q *= 0.0;
    out.c *= 0.0;
    for (int a = 0; a < m; ++a) {
        double w = 1.0;
        for (int b = 0; b < m; ++b)
            if (b != a) w *= (t - h[lo + b].t) / (h[lo + a].t - h[lo + b].t);
        out.g.axpy(w, h[lo + a].g);
        out.q.axpy(w, h[lo + a].q);
        out.c.axpy(w, h[lo + a].c);
    }
    out.g.enforce_symmetry();
    return out;
}

ConjugateTrajectory solve_backward(const std::vector<ConjugateBackground>& h, const ConjugateOptions& opt) {
    require(!h.empty(), ErrorKind::Structural, "solve_backward: empty forward history");
    for (size_t i = 1; i < h.size(); ++i)
        require(h[i].t > h[i - 1].t, ErrorKind::Structural, "solve_backward: node times must increase");
    const int n = static_cast<int>(h.size());
    const double kappa = opt.q_coefficient;
    ConjugateTrajectory tr;
    tr.t.resize(n);
    tr.u.resize(n);
    tr.mass.resize(n);
    auto mass_of = [](const Field& u, const Field& g) { return integrate(u, g); };

    const Field& gT = h.back().g;
    const double vol = integrate(Field::scalar(gT.mesh_ptr(), gT.k(), 1.0), gT);
    Field u = Field::scalar(gT.mesh_ptr(), gT.k(), 1.0 / vol);
    tr.t[n - 1] = h.back().t;
    tr.u[n - 1] = u;
    tr.mass[n - 1] = mass_of(u, gT);

    int i = n - 1;
    try {
        // s = T - t runs forward; du/ds = -conj_rhs.
        for (; i > 0; --i) {
            const double ds = h[i].t - h[i - 1].t;
            ConjugateBackground mid = interpolate_background(h, 0.5 * (h[i].t + h[i - 1].t));
            Field k1 = conj_rhs(u, h[i], kappa);
            Field u2 = u;
            u2.axpy(-0.5 * ds, k1);
            Field k2 = conj_rhs(u2, mid, kappa);
            Field u3 = u;
            u3.axpy(-0.5 * ds, k2);
            Field k3 = conj_rhs(u3, mid, kappa);
            Field u4 = u;
            u4.axpy(-ds, k3);
            Field k4 = conj_rhs(u4, h[i - 1], kappa);
            u.axpy(-ds / 6, k1);
            u.axpy(-ds / 3, k2);
            u.axpy(-ds / 3, k3);
            u.axpy(-ds / 6, k4);
            require(u.finite(), ErrorKind::Domain, "conjugate heat: non-finite values");
            for (int p = 0; p < u.npts(); ++p)
                require(u.at(0, p) > 0, ErrorKind::Domain, "conjugate heat: positivity lost");
            tr.t[i - 1] = h[i - 1].t;
            tr.u[i - 1] = u;
            tr.mass[i - 1] = mass_of(u, h[i - 1].g);
        }
    } catch (const Error& e) {
        std::ostringstream o;
        o << "conjugate heat aborted at t=" << h[i].t << ": " << e.what();
        tr.aborted = true;
        tr.abort_reason = o.str();
        tr.t.erase(tr.t.begin(), tr.t.begin() + i);
        tr.u.erase(tr.u.begin(), tr.u.begin() + i);
        tr.mass.erase(tr.mass.begin(), tr.mass.begin() + i);
    }
    const double mT = tr.mass.back();
    for (double m : tr.mass) tr.max_mass_drift = std::max(tr.max_mass_drift, std::abs(m - mT) / mT);
    return tr;
}

Field potential(const Field& u, double t, PotentialMode mode, double n) {
    require(mode == PotentialMode::Steady || t > 0, ErrorKind::Domain, "potential: expander mode needs t > 0");
    Field f = u;
    const double shift = mode == PotentialMode::Expander ? 0.5 * n * std::log(4 * M_PI * t) : 0.0;
    for (double& x : f.values()) {
        require(x > 0, ErrorKind::Domain, "potential: u must be positive");
        x = -std::log(x) - shift;
    }
    return f;
}

}  // namespace grf
