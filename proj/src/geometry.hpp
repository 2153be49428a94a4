#pragma once

#include "algebra.hpp"
#include "grid.hpp"

namespace grf {

// Reduced field content of an invariant metric and three-form on the bundle.
// Frame convention: fiber slots 0..k-1, base slots k..k+d-1 in every Total slot.
struct GeometryState {
    double t = 0.0;
    LieAlgebra alg;
    MeshPtr mesh;
    Field G;  // (i,j) fiber metric
    Field g;  // (a,b) base metric
    Field A;  // (a,i) connection form, A^i_a
    Field H;  // (P,Q,R) fully antisymmetric three-form on E

    int k() const { return alg.k; }
    int d() const { return mesh->d; }
    int n() const { return alg.k + mesh->d; }

    // Identity metrics, zero connection and torsion.
    static GeometryState trivial(const LieAlgebra& alg, MeshPtr mesh);
};

struct LeviCivita {
    Field Gamma;  // (c,a,b) = Gamma^c_{ab}
    Field Rm;     // (a,b,c,d) = g(R(d_a,d_b)d_c, d_d)
    Field Ric;    // (a,b)
    Field R;      // scalar
};

struct DerivedGeometry {
    Field Gi, gi;  // pointwise inverses
    Field vol;     // sqrt det g
    Field M;       // (a,m,i): D_a e_i = M^m_{ai} e_m
    Field F;       // (a,b,i)
    Field DG;      // (a,i,j)
    Field trDG;    // (a): G^{pq} DG_{a,pq}
    LeviCivita lc;
    Field DDG;     // (a,b,i,j) = (D_a DG)_b
    Field DF;      // (c,a,b,i) = (D_c F)(a,b)
    Field q;       // (a)
};

LeviCivita levi_civita(const Field& g);
Field connection_matrix(const Field& A, const LieAlgebra& alg);
Field compute_F(const Field& A, const LieAlgebra& alg);
Field compute_DG(const Field& G, const Field& A, const LieAlgebra& alg);
Field compute_DDG(const Field& DG, const Field& M, const Field& Gamma);
Field compute_q(const Field& G, const Field& g, const Field& DG);

// Checks SPD of both metrics against the floor and antisymmetry of H.
void validate_state(const GeometryState& s, double spd_floor = 1e-10);
DerivedGeometry derive(const GeometryState& s);

struct CurvatureSet {
    Field R1;     // (i,j,k,l)      R(eta1,eta2,eta3,eta4)
    Field R2;     // (i,j,a,l)      R(eta1,eta2,v3,eta4)
    Field R3;     // (i,a,b,l)      R(eta1,v2,v3,eta4)
    Field R4;     // (i,a,b,c)      R(eta1,v2,v3,v4)
    Field R5;     // (a,b,c,e)      R(v1,v2,v3,v4)
    Field Ricff;  // (i,j)
    Field Ricfb;  // (i,a)          Ric(eta, v)
    Field Ricbb;  // (a,b)
    Field R;      // scalar
};

CurvatureSet curvature_closed_form(const GeometryState& s, const DerivedGeometry& dg);

// Koszul connection on E built only from metric components, frame brackets and
// finite differences. Used to cross-check every closed-form expression.
struct OracleGeometry {
    Field gE, gEi;  // (P,Q)
    Field C;        // (S,P,Q): [e_P, e_Q] = C^S_{PQ} e_S
    Field Gamma;    // (P,Q,S): nabla_{e_P} e_Q = Gamma^S_{PQ} e_S
    Field Rm;       // (A,B,C,D) = g_E(R(e_A,e_B)e_C, e_D)
    Field Ric;      // (B,C)
    Field R;
};

OracleGeometry oracle_connection(const GeometryState& s);  // gE, gEi, C, Gamma only
OracleGeometry curvature_oracle(const GeometryState& s);
CurvatureSet oracle_blocks(const OracleGeometry& o, int k);

// Block helpers between Total slots and Fiber/Base slots. A slot either keeps
// its kind or is restricted from / widened to Total.
Field extract_block(const Field& T, const std::vector<Slot>& kinds);
Field embed_block(const Field& B, const std::vector<Slot>& out_slots);
// tau(e_P) applied to a field: new leading Total slot, base rows are partial derivatives.
Field anchor_derivative(const Field& X);
// g_E = G (+) g as a Total-slot field.
Field total_metric(const Field& G, const Field& g);
// Frame bracket structure functions from state data.
Field frame_brackets(const GeometryState& s, const Field& M, const Field& F);

}  // namespace grf
