#pragma once

#include <array>
#include <vector>

#include "flow.hpp"

namespace grf {

// Pointwise integrand pieces shared by the energy and entropy.
struct EnergyTerms {
    Field grad_f2;  // |grad f|^2_g
    Field R;        // scalar curvature of g
    Field DG2;      // |DG|^2
    Field F2;       // |F|^2
    Field H2;       // |H|^2_{g_E}
    Field BB;       // |[,]|^2_G
    Field lap_f;    // Laplace-Beltrami of f
};
EnergyTerms energy_terms(const GeometryState& s, const DerivedGeometry& dg, const Field& f);

// Integrand of the energy without the weight: |grad f|^2 + R - DG2/4 - F2/4 - H2/12 - BB/4.
Field energy_density(const EnergyTerms& e);

double eval_F(const GeometryState& s, const Field& f);
// (4 pi t)^{-n/2} { t F + int (n - f) e^{-f} dV }.
double eval_Wplus(const GeometryState& s, const Field& f, double t, double n);

struct FResiduals {
    double R1 = 0, R2 = 0, R3 = 0, R4 = 0;
    double sum() const { return R1 + R2 + R3 + R4; }
};
// Residual integrals against e^{-f} dV, f the steady potential.
FResiduals residuals_F(const GeometryState& s, const Field& f);

struct WResiduals {
    double R1 = 0, R2 = 0, R3 = 0, R4 = 0;
    double W_extra = 0;
    double sum() const { return R1 + R2 + R3 + R4 + W_extra; }
};
// f is the expander potential; all integrals use u dV with u = e^{-f}(4 pi t)^{-n/2}.
WResiduals residuals_W(const GeometryState& s, const Field& f, double t, double n);

// Direction of a one-parameter family: H moves by d(Bdot) minus the splitting correction for dA.
struct VariationDirection {
    Field dG, dA, dg, Bdot, df;
};
struct VariationGap {
    double fd = 0;       // centered difference of eval_F
    double formula = 0;  // T1 + ... + T5
    std::array<double, 5> terms{};
    double abs_gap = 0;
    double rel_gap = 0;  // abs_gap / max(|fd|, |formula|); 0 when both vanish
};
VariationGap variation_check_F(const GeometryState& s, const Field& f, const VariationDirection& dir, double eps = 1e-4);

// Pointwise sup norms used by rigidity detection.
struct RigidityMetrics {
    double H_sup = 0;
    double F_sup = 0;
    double logdetG_rate = 0;  // sup |tr_G dG/dt| along the ungauged flow
    double Ric_sup = 0;       // sup |Ric_g|_g
    double expander_fiber = 0;  // sup |tr_g DDG - DG.DG|_G
    double expander_base = 0;   // sup |Ric_g - DG*DG/4 + g/(2t)|_g; nan at t = 0
};
RigidityMetrics rigidity_metrics(const GeometryState& s, double t);

struct FunctionalReport {
    double t = 0;
    double F = 0, W = 0;
    FResiduals RF;
    WResiduals RW;
    double dF_dt_fd = 0, dW_dt_fd = 0;  // nan at the endpoints
    double identity_gap_F = 0, identity_gap_W = 0;
    double min_eig_G = 0, min_eig_g = 0;
    double mass_u = 0;
    RigidityMetrics rigidity;
};

// Fills dF_dt_fd, dW_dt_fd and the identity gaps by centered differences,
// skipping the endpoints. Gaps are relative: |fd - sum| / max(|sum|, floor).
void fill_time_derivatives(std::vector<FunctionalReport>& series, double floor = 1e-12);

struct SolitonThresholds {
    double residual = 1e-8;
    double field = 1e-8;
};
struct SolitonFlags {
    bool steady = false;
    bool expander = false;
    double max_residual_F = 0;   // max over the series of R1 + ... + R4
    double max_field = 0;        // max of H, F, log det G rate, Ric sup norms
    double final_expander = 0;   // expander residual at the last report time
};
SolitonFlags soliton_detect(const std::vector<FunctionalReport>& series, const SolitonThresholds& th = {});

}  // namespace grf
