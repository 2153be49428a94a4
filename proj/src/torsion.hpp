#pragma once

#include "geometry.hpp"

namespace grf {

// H is stored as one fully antisymmetric (Total,Total,Total) field. The blocks
// below are views for reporting and for the block-norm identities.
struct TorsionBlocks {
    Field H3;   // (i,j,k)
    Field H21;  // (i,j,a)
    Field H12;  // (i,a,b)
    Field H03;  // (a,b,c), zero for d <= 2
};
TorsionBlocks torsion_blocks(const Field& H);
Field torsion_from_blocks(const TorsionBlocks& b);
Field zero_three_form(MeshPtr mesh, int k);
Field zero_two_form(MeshPtr mesh, int k);

struct HContractions {
    Field Hff, Hfb, Hbb;  // script-H blocks (i,j), (i,a), (a,b)
    Field trG, trg;       // G^{ij} Hff_ij, g^{ab} Hbb_ab
    Field norm2;          // |H|^2 with g_E
    Field n3, n21, n12, n03;  // per-block squared norms
};
HContractions h_contractions(const Field& H, const Field& G, const Field& g);

// Connection D (+) Levi-Civita on E as (a, S, X): D_a e_X = Omega^S_{aX} e_S.
Field extended_connection(const DerivedGeometry& dg, int k);
// Covariant derivative of an all-Total tensor; new leading base slot.
Field covariant_D(const Field& T, const Field& Omega);

// -d*H in closed form.
Field dstar_H(const Field& H, const GeometryState& s, const DerivedGeometry& dg);
// g_E^{PQ} (nabla_P H)(Q,.,.) with the Koszul connection of the oracle.
Field codifferential_oracle(const Field& H, const OracleGeometry& o);

// Exterior derivative on E for p = 0..3, built from frame brackets.
Field algebroid_d(const Field& form, const Field& C);
Field algebroid_d(const Field& form, const GeometryState& s);
// p = 2 only, expanded as D_{v1}B(e2,e3) + B(F(v1,v2),e3) - B([eta1,eta2],e3) + cyclic.
Field algebroid_d2_expanded(const Field& B, const GeometryState& s, const DerivedGeometry& dg);

// i_v H for a base vector field v (a).
Field interior_base(const Field& v, const Field& form);

enum class Gauge { Ungauged, Canonical, General };
const char* gauge_name(Gauge g);
Gauge parse_gauge(const std::string& s);

// Ungauged: -d*H. Canonical: -d*H + i_q H. General: canonical - i_{grad f} H.
Field b_dot(const Field& H, const GeometryState& s, const DerivedGeometry& dg, Gauge gauge, const Field* f = nullptr);

struct SplittingTerms {
    Field lhs;        // |H|^2/6 - tr_G script-H / 4
    Field fiber;      // -|H3|^2 / 12
    Field mixed;      // |H12|^2 / 4
    Field base;       // |H03|^2 / 6
    Field residual;   // lhs - (fiber + mixed + base)
};
SplittingTerms splitting_identity(const Field& H, const Field& G, const Field& g);

// Stored-component derivative of an all-Total form T when the splitting moves
// with dA/dt = alpha (a,i): subtract T(.., alpha v, ..) on each slot.
Field splitting_correction(const Field& T, const Field& alpha);

}  // namespace grf
