#include "geometry.hpp"

#include <cmath>

namespace grf {

namespace {
constexpr Slot Fb = Slot::Fiber;
constexpr Slot Bs = Slot::Base;
constexpr Slot Tt = Slot::Total;

Field identity_field(MeshPtr mesh, Slot kind, int k) {
    Field f(mesh, {kind, kind}, k, {{0, 1, false}});
    const int r = f.dim(0);
    for (int i = 0; i < r; ++i) std::fill(f.data(i * r + i), f.data(i * r + i) + f.npts(), 1.0);
    return f;
}
}  // namespace

GeometryState GeometryState::trivial(const LieAlgebra& alg, MeshPtr mesh) {
    GeometryState s;
    s.alg = alg;
    s.mesh = mesh;
    const int k = alg.k;
    s.G = identity_field(mesh, Fb, k);
    s.g = identity_field(mesh, Bs, k);
    s.A = Field(mesh, {Bs, Fb}, k);
    s.H = Field(mesh, {Tt, Tt, Tt}, k, {{0, 1, true}, {1, 2, true}});
    return s;
}

Field extract_block(const Field& T, const std::vector<Slot>& kinds) {
    require(static_cast<int>(kinds.size()) == T.rank(), ErrorKind::Structural, "extract_block: rank mismatch");
    const int k = T.k();
    for (int s = 0; s < T.rank(); ++s)
        require(T.slots()[s] == kinds[s] || T.slots()[s] == Tt, ErrorKind::Structural,
                "extract_block: can only restrict Total slots");
    Field out(T.mesh_ptr(), kinds, k);
    std::vector<int> idx(T.rank()), src(T.rank());
    for (int c = 0; c < out.ncomp(); ++c) {
        out.unflatten(c, idx.data());
        for (int s = 0; s < T.rank(); ++s)
            src[s] = idx[s] + (kinds[s] == Bs && T.slots()[s] == Tt ? k : 0);
        const double* p = T.data(T.comp(src.data()));
        std::copy(p, p + T.npts(), out.data(c));
    }
    return out;
}

Field embed_block(const Field& B, const std::vector<Slot>& out_slots) {
    require(static_cast<int>(out_slots.size()) == B.rank(), ErrorKind::Structural, "embed_block: rank mismatch");
    for (int s = 0; s < B.rank(); ++s)
        require(B.slots()[s] == out_slots[s] || out_slots[s] == Tt, ErrorKind::Structural,
                "embed_block: can only widen to Total slots");
    Field out(B.mesh_ptr(), out_slots, B.k());
    std::vector<int> idx(B.rank()), dst(B.rank());
    for (int c = 0; c < B.ncomp(); ++c) {
        B.unflatten(c, idx.data());
        for (int s = 0; s < B.rank(); ++s)
            dst[s] = idx[s] + (B.slots()[s] == Bs && out_slots[s] == Tt ? B.k() : 0);
        std::copy(B.data(c), B.data(c) + B.npts(), out.data(out.comp(dst.data())));
    }
    return out;
}

Field anchor_derivative(const Field& X) {
    std::vector<Slot> slots{Tt};
    slots.insert(slots.end(), X.slots().begin(), X.slots().end());
    Field out(X.mesh_ptr(), slots, X.k());
    const size_t block = static_cast<size_t>(X.ncomp()) * X.npts();
    for (int a = 0; a < X.mesh().d; ++a) {
        Field da = partial_derivative(X, a);
        std::copy(da.values().begin(), da.values().end(), out.values().begin() + (X.k() + a) * block);
    }
    return out;
}

Field total_metric(const Field& G, const Field& g) {
    Field out = embed_block(G, {Tt, Tt});
    out += embed_block(g, {Tt, Tt});
    out.declare({{0, 1, false}});
    return out;
}

LeviCivita levi_civita(const Field& g) {
    LeviCivita lc;
    Field gi = inverse_spd(g, "base metric g");
    Field dg = gradient(g);  // (a,b,c) = d_a g_bc
    Field low = dg + ein("bad->abd", dg) - ein("dab->abd", dg);
    low *= 0.5;
    lc.Gamma = ein("abd,dc->cab", low, gi);
    Field dGam = gradient(lc.Gamma);  // (e,c,a,b) = d_e Gamma^c_ab
    // R^e_{cab} = d_a Gamma^e_bc - d_b Gamma^e_ac + Gamma^e_af Gamma^f_bc - Gamma^e_bf Gamma^f_ac
    Field Rup = ein("aebc->ecab", dGam) - ein("beac->ecab", dGam) + ein("eaf,fbc->ecab", lc.Gamma, lc.Gamma) -
                ein("ebf,fac->ecab", lc.Gamma, lc.Gamma);
    lc.Rm = ein("ecab,ed->abcd", Rup, g);
    lc.Ric = ein("abcd,ad->bc", lc.Rm, gi);
    lc.Ric.declare({{0, 1, false}});
    lc.R = ein("bc,bc->", lc.Ric, gi);
    return lc;
}

Field connection_matrix(const Field& A, const LieAlgebra& alg) { return ein("al,mli->ami", A, alg.c_tensor()); }

Field compute_F(const Field& A, const LieAlgebra& alg) {
    Field dA = gradient(A);  // (a,b,i) = d_a A^i_b
    Field F = dA - ein("bai->abi", dA) + ein("aj,bk,ijk->abi", A, A, alg.c_tensor());
    F.declare({{0, 1, true}});
    return F;
}

Field compute_DG(const Field& G, const Field& A, const LieAlgebra& alg) {
    Field M = connection_matrix(A, alg);
    Field DG = gradient(G) - ein("ami,mj->aij", M, G) - ein("amj,im->aij", M, G);
    DG.declare({{1, 2, false}});
    return DG;
}

Field compute_DDG(const Field& DG, const Field& M, const Field& Gamma) {
    Field dDG = gradient(DG);  // (a,b,i,j) = d_a DG_{b,ij}
    Field out = dDG - ein("cab,cij->abij", Gamma, DG) - ein("ami,bmj->abij", M, DG) - ein("amj,bim->abij", M, DG);
    out.declare({{2, 3, false}});
    return out;
}

Field compute_q(const Field& G, const Field& g, const Field& DG) {
    Field Gi = inverse_spd(G, "fiber metric G");
    Field gi = inverse_spd(g, "base metric g");
    Field q = ein("ab,ij,bij->a", gi, Gi, DG);
    q *= -0.5;
    return q;
}

void validate_state(const GeometryState& s, double spd_floor) {
    require(s.mesh && s.G.mesh_ptr() == s.mesh && s.g.mesh_ptr() == s.mesh && s.A.mesh_ptr() == s.mesh &&
                s.H.mesh_ptr() == s.mesh,
            ErrorKind::Structural, "state: all fields must share the mesh");
    require(s.G.dims() == std::vector<int>{s.k(), s.k()} && s.g.dims() == std::vector<int>{s.d(), s.d()} &&
                s.A.dims() == std::vector<int>{s.d(), s.k()} && s.H.rank() == 3,
            ErrorKind::Structural, "state: field shapes do not match (k, d)");
    for (const Field* f : {&s.G, &s.g, &s.A, &s.H})
        require(f->finite(), ErrorKind::Domain, "state: non-finite field values");
    int where = 0;
    if (s.k() > 0) {
        double e = min_eigenvalue(s.G, &where);
        require(e > spd_floor, ErrorKind::Domain,
                "fiber metric G below SPD floor (min eigenvalue " + std::to_string(e) + " at point " +
                    std::to_string(where) + ")");
    }
    double e = min_eigenvalue(s.g, &where);
    require(e > spd_floor, ErrorKind::Domain,
            "base metric g below SPD floor (min eigenvalue " + std::to_string(e) + " at point " +
                std::to_string(where) + ")");
}

DerivedGeometry derive(const GeometryState& s) {
    DerivedGeometry dg;
    dg.Gi = inverse_spd(s.G, "fiber metric G");
    dg.gi = inverse_spd(s.g, "base metric g");
    dg.vol = sqrt_det(s.g);
    dg.M = connection_matrix(s.A, s.alg);
    dg.F = compute_F(s.A, s.alg);
    dg.DG = compute_DG(s.G, s.A, s.alg);
    dg.trDG = ein("pq,apq->a", dg.Gi, dg.DG);
    dg.lc = levi_civita(s.g);
    dg.DDG = compute_DDG(dg.DG, dg.M, dg.lc.Gamma);
    Field dF = gradient(dg.F);  // (c,a,b,i)
    dg.DF = dF - ein("eca,ebi->cabi", dg.lc.Gamma, dg.F) - ein("ecb,aei->cabi", dg.lc.Gamma, dg.F) +
            ein("cim,abm->cabi", dg.M, dg.F);
    dg.q = ein("ab,b->a", dg.gi, dg.trDG);
    dg.q *= -0.5;
    return dg;
}

CurvatureSet curvature_closed_form(const GeometryState& s, const DerivedGeometry& dg) {
    require_nilpotent(s.alg);
    const ConstTensor b = s.alg.beta_tensor();
    const Field &G = s.G, &Gi = dg.Gi, &gi = dg.gi, &DG = dg.DG, &DDG = dg.DDG, &F = dg.F, &DF = dg.DF;
    const Field GF = ein("abm,mi->abi", F, G);
    CurvatureSet out;

    {  // (eta eta eta eta)
        Field t1 = ein("ab,aAD,bBC->ABCD", gi, DG, DG);
        t1 *= -0.25;
        Field GBB = ein("pD,pAm,mBC->ABCD", G, b, b);
        Field last = ein("ADCB->ABCD", GBB) + ein("pq,pAC,qDB->ABCD", G, b, b);
        Field Gb = ein("rD,rAp->ApD", G, b);  // G([e_A, e_p], e_D)
        last += ein("pq,ApD,BqC->ABCD", Gi, Gb, Gb);  // tr_G G([1,.],4) G([2,.],3)
        last += ein("pq,DpA,BqC->ABCD", Gi, Gb, Gb);  // tr_G G([4,.],1) G([2,.],3)
        last *= -0.25;
        GBB *= -0.25;
        Field S = t1 + GBB + last + ein("ACBD->ABCD", last);
        out.R1 = S - ein("BACD->ABCD", S);
    }
    {  // (eta eta v eta)
        Field S = ein("ab,aAD,cbB->ABcD", gi, DG, GF);
        Field Gb = ein("rD,rAq->AqD", G, b);
        S += ein("pq,cBp,AqD->ABcD", Gi, DG, Gb);
        S += ein("pq,cBp,DqA->ABcD", Gi, DG, Gb);
        S -= ein("crD,rAB->ABcD", DG, b);
        S -= ein("crB,rAD->ABcD", DG, b);
        S *= 0.25;
        out.R2 = S - ein("BAcD->ABcD", S);
    }
    {  // (eta v v eta)
        Field R3 = ein("bcAD->AbcD", DDG);
        R3 *= -0.5;
        Field q1 = ein("pq,cAp,bDq->AbcD", Gi, DG, DG) + ein("ef,ceA,bfD->AbcD", gi, GF, GF) -
                   ein("pD,pAm,bcm->AbcD", G, b, F) - ein("pA,pDm,bcm->AbcD", G, b, F) +
                   ein("pq,pAD,bcq->AbcD", G, b, F);
        R3.axpy(0.25, q1);
        out.R3 = R3;
    }
    {  // (eta v v v)
        Field R4 = ein("eAm,bcm->Abce", DG, F) - ein("cAm,bem->Abce", DG, F);
        R4 *= 0.25;
        R4.axpy(-0.5, ein("bAm,cem->Abce", DG, F));
        R4.axpy(-0.5, ein("Am,bcem->Abce", G, DF));
        out.R4 = R4;
    }
    {  // (v v v v)
        Field GFF = ein("abm,cem->abce", GF, F);
        Field R5 = dg.lc.Rm;
        R5.axpy(0.5, GFF);
        R5.axpy(-0.25, ein("aebc->abce", GFF));
        R5.axpy(0.25, ein("acbe->abce", GFF));
        out.R5 = R5;
    }
    const Field& trDG = dg.trDG;
    {
        Field ric = ein("ab,abij->ij", gi, DDG);
        ric *= -0.5;
        ric.axpy(-0.25, ein("ab,a,bij->ij", gi, trDG, DG));
        ric.axpy(0.5, ein("ab,pq,aip,bqj->ij", gi, Gi, DG, DG));
        ric.axpy(0.25, ein("ac,be,abi,cej->ij", gi, gi, GF, GF));
        // tr_G G([.,eta1],[.,eta2])
        ric.axpy(-0.5, ein("pq,rs,rpi,sqj->ij", Gi, G, b, b));
        // tr_G G([.1,.2],eta1) G([.1,.2],eta2)
        Field Gbl = ein("mi,mpr->ipr", G, b);
        ric.axpy(0.25, ein("pq,rs,ipr,jqs->ij", Gi, Gi, Gbl, Gbl));
        ric.declare({{0, 1, false}});
        out.Ricff = ric;
    }
    {
        Field ric = ein("ab,im,avbm->iv", gi, G, DF) + ein("ab,aim,vbm->iv", gi, DG, F);
        ric *= 0.5;
        ric.axpy(0.25, ein("vbi,ba,a->iv", GF, gi, trDG));
        ric.axpy(-0.5, ein("pq,vrq,rpi->iv", Gi, DG, b));
        out.Ricfb = ric;
    }
    {
        Field ric = dg.lc.Ric;
        ric.axpy(-0.5, ein("pq,abpq->ab", Gi, DDG));
        ric.axpy(0.25, ein("pq,rs,apr,bqs->ab", Gi, Gi, DG, DG));
        ric.axpy(-0.5, ein("ef,aem,bfm->ab", gi, GF, F));
        ric.declare({{0, 1, false}});
        out.Ricbb = ric;
    }
    {
        Field FF = ein("ac,be,abm,cem->", gi, gi, GF, F);
        Field BB = ein("ij,kl,mn,mik,njl->", Gi, Gi, G, b, b);
        Field R = dg.lc.R - ein("ab,pq,abpq->", gi, Gi, DDG);
        R.axpy(-0.25, ein("ab,a,b->", gi, trDG, trDG));
        R.axpy(0.75, ein("ab,pq,rs,apr,bqs->", gi, Gi, Gi, DG, DG));
        R.axpy(-0.25, FF);
        R.axpy(-0.25, BB);
        out.R = R;
    }
    return out;
}

Field frame_brackets(const GeometryState& s, const Field& M, const Field& F) {
    const int k = s.k(), d = s.d();
    Field C(s.mesh, {Tt, Tt, Tt}, k);
    const int n = k + d, np = s.mesh->npts();
    auto put = [&](int S, int P, int Q, const double* src, double sign) {
        double* dst = C.data(C.comp({S, P, Q}));
        for (int p = 0; p < np; ++p) dst[p] += sign * src[p];
    };
    for (int m = 0; m < k; ++m)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                double v = s.alg.beta(m, i, j);
                if (v == 0) continue;
                double* dst = C.data(C.comp({m, i, j}));
                for (int p = 0; p < np; ++p) dst[p] = v;
            }
    for (int a = 0; a < d; ++a)
        for (int m = 0; m < k; ++m)
            for (int i = 0; i < k; ++i) {
                const double* src = M.data(M.comp({a, m, i}));
                put(m, k + a, i, src, 1.0);
                put(m, i, k + a, src, -1.0);
            }
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int m = 0; m < k; ++m) put(m, k + a, k + b, F.data(F.comp({a, b, m})), -1.0);
    (void)n;
    return C;
}

OracleGeometry oracle_connection(const GeometryState& s) {
    OracleGeometry o;
    o.gE = total_metric(s.G, s.g);
    o.gEi = inverse_spd(o.gE, "total metric g_E");
    Field M = connection_matrix(s.A, s.alg);
    Field F = compute_F(s.A, s.alg);
    o.C = frame_brackets(s, M, F);
    Field dgE = anchor_derivative(o.gE);       // (P,Q,R) = tau_P g_QR
    Field CL = ein("SPQ,SR->PQR", o.C, o.gE);  // g([P,Q],R)
    Field low = dgE + ein("QPR->PQR", dgE) - ein("RPQ->PQR", dgE) + CL + ein("RPQ->PQR", CL) + ein("RQP->PQR", CL);
    low *= 0.5;
    o.Gamma = ein("PQR,RS->PQS", low, o.gEi);
    return o;
}

OracleGeometry curvature_oracle(const GeometryState& s) {
    OracleGeometry o = oracle_connection(s);
    Field tG = anchor_derivative(o.Gamma);  // (A,B,C,T) = tau_A Gamma^T_BC
    Field Rup = tG - ein("BACT->ABCT", tG) + ein("BCS,AST->ABCT", o.Gamma, o.Gamma) -
                ein("ACS,BST->ABCT", o.Gamma, o.Gamma) - ein("SAB,SCT->ABCT", o.C, o.Gamma);
    o.Rm = ein("ABCT,TD->ABCD", Rup, o.gE);
    o.Ric = ein("ABCD,AD->BC", o.Rm, o.gEi);
    o.R = ein("BC,BC->", o.Ric, o.gEi);
    return o;
}

CurvatureSet oracle_blocks(const OracleGeometry& o, int k) {
    (void)k;
    CurvatureSet c;
    c.R1 = extract_block(o.Rm, {Fb, Fb, Fb, Fb});
    c.R2 = extract_block(o.Rm, {Fb, Fb, Bs, Fb});
    c.R3 = extract_block(o.Rm, {Fb, Bs, Bs, Fb});
    c.R4 = extract_block(o.Rm, {Fb, Bs, Bs, Bs});
    c.R5 = extract_block(o.Rm, {Bs, Bs, Bs, Bs});
    c.Ricff = extract_block(o.Ric, {Fb, Fb});
    c.Ricfb = extract_block(o.Ric, {Fb, Bs});
    c.Ricbb = extract_block(o.Ric, {Bs, Bs});
    c.R = o.R;
    return c;
}

}  // namespace grf
