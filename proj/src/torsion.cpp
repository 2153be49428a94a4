#include "torsion.hpp"

namespace grf {

namespace {
constexpr Slot Fb = Slot::Fiber;
constexpr Slot Bs = Slot::Base;
constexpr Slot Tt = Slot::Total;
const std::string kLetters = "XYZW";

std::vector<SymPair> antisym_all(int r) {
    std::vector<SymPair> s;
    for (int i = 0; i + 1 < r; ++i) s.push_back({i, i + 1, true});
    return s;
}

void require_total(const Field& T, const char* what) {
    for (Slot s : T.slots()) require(s == Tt, ErrorKind::Structural, std::string(what) + ": Total slots expected");
}

Field transpose2(const Field& X) { return ein("ab->ba", X); }
}  // namespace

Field zero_three_form(MeshPtr mesh, int k) { return Field(mesh, {Tt, Tt, Tt}, k, antisym_all(3)); }
Field zero_two_form(MeshPtr mesh, int k) { return Field(mesh, {Tt, Tt}, k, antisym_all(2)); }

TorsionBlocks torsion_blocks(const Field& H) {
    require_total(H, "torsion_blocks");
    require(H.rank() == 3, ErrorKind::Structural, "torsion_blocks: three-form expected");
    TorsionBlocks b;
    b.H3 = extract_block(H, {Fb, Fb, Fb});
    b.H21 = extract_block(H, {Fb, Fb, Bs});
    b.H12 = extract_block(H, {Fb, Bs, Bs});
    b.H03 = extract_block(H, {Bs, Bs, Bs});
    return b;
}

Field torsion_from_blocks(const TorsionBlocks& b) {
    // Each block fixes one ordering; antisymmetrizing over all slots restores the others.
    Field H = embed_block(b.H3, {Tt, Tt, Tt});
    H.axpy(3.0, embed_block(b.H21, {Tt, Tt, Tt}));
    H.axpy(3.0, embed_block(b.H12, {Tt, Tt, Tt}));
    H += embed_block(b.H03, {Tt, Tt, Tt});
    H.declare(antisym_all(3));
    return H;
}

HContractions h_contractions(const Field& H, const Field& G, const Field& g) {
    require_total(H, "h_contractions");
    HContractions out;
    Field Gi = inverse_spd(G, "fiber metric G");
    Field gi = inverse_spd(g, "base metric g");
    Field gEi = inverse_spd(total_metric(G, g), "total metric g_E");
    Field up = ein("QA,PQR->PAR", gEi, H);
    Field hh = ein("RB,PAR,SAB->PS", gEi, up, H);
    out.Hff = extract_block(hh, {Fb, Fb});
    out.Hfb = extract_block(hh, {Fb, Bs});
    out.Hbb = extract_block(hh, {Bs, Bs});
    out.trG = ein("ij,ij->", Gi, out.Hff);
    out.trg = ein("ab,ab->", gi, out.Hbb);
    out.norm2 = ein("PS,PS->", gEi, hh);
    TorsionBlocks b = torsion_blocks(H);
    out.n3 = ein("kn,ijk,ijn->", Gi, ein("il,jm,lmn->ijn", Gi, Gi, b.H3), b.H3);
    out.n21 = ein("ac,ija,ijc->", gi, ein("il,jm,lmc->ijc", Gi, Gi, b.H21), b.H21);
    out.n12 = ein("im,iab,mab->", Gi, ein("ac,be,ice->iab", gi, gi, b.H12), b.H12);
    out.n03 = ein("cf,abc,abf->", gi, ein("ad,be,def->abf", gi, gi, b.H03), b.H03);
    return out;
}

Field extended_connection(const DerivedGeometry& dg, int k) {
    Field Om = embed_block(dg.M, {Bs, Tt, Tt});
    // base block: D_a d_b = Gamma^c_{ab} d_c
    Om += embed_block(ein("cab->acb", dg.lc.Gamma), {Bs, Tt, Tt});
    (void)k;
    return Om;
}

Field covariant_D(const Field& T, const Field& Omega) {
    require_total(T, "covariant_D");
    const int r = T.rank();
    require(r <= static_cast<int>(kLetters.size()), ErrorKind::Structural, "covariant_D: rank too large");
    Field out = gradient(T);
    const std::string idx = kLetters.substr(0, r);
    for (int s = 0; s < r; ++s) {
        std::string in = idx;
        in[s] = 'S';
        std::string spec = std::string("aS") + idx[s] + "," + in + "->a" + idx;
        out -= ein(spec, Omega, T);
    }
    return out;
}

Field dstar_H(const Field& H, const GeometryState& s, const DerivedGeometry& dg) {
    const Field &G = s.G, &Gi = dg.Gi, &gi = dg.gi;
    const ConstTensor b = s.alg.beta_tensor();
    Field DH = covariant_D(H, extended_connection(dg, s.k()));
    Field out = ein("ab,abYZ->YZ", gi, extract_block(DH, {Bs, Bs, Tt, Tt}));
    out.axpy(0.5, ein("a,ab,bYZ->YZ", dg.trDG, gi, extract_block(H, {Bs, Tt, Tt})));

    auto wedge = [](const Field& X) {
        Field e = embed_block(X, {Tt, Tt});
        return e - transpose2(e);
    };
    Field X3 = ein("ab,jl,ajY,blZ->YZ", gi, Gi, dg.DG, extract_block(H, {Bs, Fb, Tt}));
    Field GF = ein("abm,mY->abY", dg.F, G);
    Field X4 = ein("ac,be,abY,ceZ->YZ", gi, gi, GF, extract_block(H, {Bs, Bs, Tt}));
    Field X5 = ein("ip,jq,mij,mY,pqZ->YZ", Gi, Gi, b, G, extract_block(H, {Fb, Fb, Tt}));
    out -= wedge(X3);
    out.axpy(-0.5, wedge(X4));
    out.axpy(0.5, wedge(X5));
    out.declare(antisym_all(2));
    return out;
}

Field codifferential_oracle(const Field& H, const OracleGeometry& o) {
    Field nabH = anchor_derivative(H) - ein("PXS,SYZ->PXYZ", o.Gamma, H) - ein("PYS,XSZ->PXYZ", o.Gamma, H) -
                 ein("PZS,XYS->PXYZ", o.Gamma, H);
    Field out = ein("PQ,PQYZ->YZ", o.gEi, nabH);
    out.declare(antisym_all(2));
    return out;
}

Field algebroid_d(const Field& form, const Field& C) {
    require_total(form, "algebroid_d");
    const int p = form.rank();
    require(p <= 3, ErrorKind::Structural, "algebroid_d: form degree must be 0..3");
    const int n = C.dim(0);
    Field tf = anchor_derivative(form);
    switch (p) {
        case 0:
            return tf;
        case 1: {
            Field out = tf - transpose2(tf) - ein("SPQ,S->PQ", C, form);
            out.declare(antisym_all(2));
            return out;
        }
        case 2: {
            Field CB = ein("SPQ,SR->PQR", C, form);
            Field out = tf - ein("QPR->PQR", tf) + ein("RPQ->PQR", tf) - CB + ein("PRQ->PQR", CB) -
                        ein("QRP->PQR", CB);
            out.declare(antisym_all(3));
            return out;
        }
        default: {
            if (n < 4) return Field(form.mesh_ptr(), {Tt, Tt, Tt, Tt}, form.k(), antisym_all(4));
            Field out = tf - ein("QPRS->PQRS", tf) + ein("RPQS->PQRS", tf) - ein("SPQR->PQRS", tf);
            Field CH = ein("TPQ,TRS->PQRS", C, form);
            out -= CH;
            out += ein("PRQS->PQRS", CH);
            out -= ein("PSQR->PQRS", CH);
            out -= ein("QRPS->PQRS", CH);
            out += ein("QSPR->PQRS", CH);
            out -= ein("RSPQ->PQRS", CH);
            out.declare(antisym_all(4));
            return out;
        }
    }
}

Field algebroid_d(const Field& form, const GeometryState& s) {
    Field M = connection_matrix(s.A, s.alg);
    Field F = compute_F(s.A, s.alg);
    return algebroid_d(form, frame_brackets(s, M, F));
}

Field algebroid_d2_expanded(const Field& B, const GeometryState& s, const DerivedGeometry& dg) {
    require_total(B, "algebroid_d2_expanded");
    require(B.rank() == 2, ErrorKind::Structural, "algebroid_d2_expanded: two-form expected");
    Field Bf = extract_block(B, {Fb, Tt});
    Field X = embed_block(covariant_D(B, extended_connection(dg, s.k())), {Tt, Tt, Tt});
    X += embed_block(ein("abm,mR->abR", dg.F, Bf), {Tt, Tt, Tt});
    X -= embed_block(ein("mij,mR->ijR", s.alg.beta_tensor(), Bf), {Tt, Tt, Tt});
    Field out = X + ein("QRP->PQR", X) + ein("RPQ->PQR", X);
    out.declare(antisym_all(3));
    return out;
}

Field interior_base(const Field& v, const Field& form) {
    require_total(form, "interior_base");
    const int r = form.rank();
    require(r >= 1 && r <= 4, ErrorKind::Structural, "interior_base: form degree must be 1..4");
    std::vector<Slot> kinds(r, Tt);
    kinds[0] = Bs;
    const std::string rest = kLetters.substr(0, r - 1);
    Field out = ein("a,a" + rest + "->" + rest, v, extract_block(form, kinds));
    if (r > 1) out.declare(antisym_all(r - 1));
    return out;
}

const char* gauge_name(Gauge g) {
    switch (g) {
        case Gauge::Ungauged: return "ungauged";
        case Gauge::Canonical: return "canonical";
        case Gauge::General: return "general";
    }
    return "?";
}

Gauge parse_gauge(const std::string& s) {
    if (s == "ungauged") return Gauge::Ungauged;
    if (s == "canonical") return Gauge::Canonical;
    if (s == "general") return Gauge::General;
    fail(ErrorKind::Config, "unknown flow variant '" + s + "' (expected ungauged, canonical or general)");
}

Field b_dot(const Field& H, const GeometryState& s, const DerivedGeometry& dg, Gauge gauge, const Field* f) {
    Field out = dstar_H(H, s, dg);
    if (gauge == Gauge::Ungauged) return out;
    out += interior_base(dg.q, H);
    if (gauge == Gauge::General) {
        require(f != nullptr, ErrorKind::Structural, "b_dot: general gauge needs f");
        Field gradf = ein("ab,b->a", dg.gi, gradient(*f));
        out -= interior_base(gradf, H);
    }
    return out;
}

SplittingTerms splitting_identity(const Field& H, const Field& G, const Field& g) {
    HContractions hc = h_contractions(H, G, g);
    SplittingTerms t;
    t.lhs = hc.norm2;
    t.lhs *= 1.0 / 6.0;
    t.lhs.axpy(-0.25, hc.trG);
    t.fiber = hc.n3;
    t.fiber *= -1.0 / 12.0;
    t.mixed = hc.n12;
    t.mixed *= 0.25;
    t.base = hc.n03;
    t.base *= 1.0 / 6.0;
    t.residual = t.lhs - t.fiber - t.mixed - t.base;
    return t;
}

Field splitting_correction(const Field& T, const Field& alpha) {
    require_total(T, "splitting_correction");
    const int r = T.rank();
    require(r <= static_cast<int>(kLetters.size()), ErrorKind::Structural, "splitting_correction: rank too large");
    Field K = embed_block(alpha, {Tt, Tt});  // K[k+a, m] = alpha^m_a
    Field out = T.zeros_like();
    const std::string idx = kLetters.substr(0, r);
    for (int s = 0; s < r; ++s) {
        std::string in = idx;
        in[s] = 'S';
        out += ein(std::string(1, idx[s]) + "S," + in + "->" + idx, K, T);
    }
    out.enforce_symmetry();
    return out;
}

}  // namespace grf
