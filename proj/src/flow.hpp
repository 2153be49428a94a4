#pragma once

#include <functional>
#include <string>
#include <vector>

#include "torsion.hpp"

namespace grf {

struct FlowRHS {
    Field dG;    // (i,j)
    Field dg;    // (a,b)
    Field dA;    // (a,i) = (dA/dt)^i_a
    Field GdA;   // (a,i) = G(dA/dt v_a, eta_i)
    Field Bdot;  // (P,Q) two-form whose d drives H
    Field dH;    // stored-component derivative of H, splitting correction included
};

// Ungauged, canonical (q-shift) and general (canonical plus grad f terms) systems.
FlowRHS flow_rhs(const GeometryState& s, Gauge gauge, const Field* f = nullptr);
FlowRHS flow_rhs(const GeometryState& s, const DerivedGeometry& dg, Gauge gauge, const Field* f = nullptr);
inline FlowRHS rhs_ungauged(const GeometryState& s) { return flow_rhs(s, Gauge::Ungauged); }
inline FlowRHS rhs_canonical(const GeometryState& s) { return flow_rhs(s, Gauge::Canonical); }
inline FlowRHS rhs_general(const GeometryState& s, const Field& f) { return flow_rhs(s, Gauge::General, &f); }

// Hessian of a scalar with the Levi-Civita connection of g: (a,b).
Field hessian(const Field& f, const LeviCivita& lc);

using RhsFn = std::function<FlowRHS(const GeometryState&)>;

GeometryState add_scaled(const GeometryState& s, double h, const FlowRHS& r);
// Largest stable explicit step: sigma * min h^2 / max eig(g^{-1}).
double stable_dt(const GeometryState& s, double sigma);
// Classical RK4; symmetries re-enforced, then finiteness and SPD checked.
GeometryState rk4_step(const GeometryState& s, const RhsFn& rhs, double dt, double spd_floor = 1e-10);

struct IntegratorConfig {
    double sigma = 0.1;
    double t_end = 0.1;
    double report_dt = 0.0;  // <= 0 selects t_end / 40
    int fixed_steps = 0;     // > 0: take exactly this many stable steps, ignore t_end
    double spd_floor = 1e-10;
    double blowup = 1e8;     // abort once any component exceeds this magnitude
    long max_steps = 50'000'000;
    bool track_closedness = true;
};

struct FlowRun {
    std::vector<GeometryState> reports;  // states at report times (t = 0 first)
    std::vector<double> node_times;       // every accepted step time
    long steps = 0;
    bool aborted = false;
    std::string abort_reason;
    double max_dH = 0.0;  // max over report times of ||dH||_inf
};

// Called at every node (t = 0 and after every accepted step).
using NodeObserver = std::function<void(const GeometryState&)>;

FlowRun integrate(const GeometryState& s0, const RhsFn& rhs, const IntegratorConfig& cfg,
                  const NodeObserver& on_node = nullptr);

double closedness_defect(const GeometryState& s);

// State at time s*t from report snapshots with linear interpolation, then
// G, g, H divided by s (A unchanged); the result carries time t.
GeometryState blowdown_rescale(const std::vector<GeometryState>& history, double s, double t);

struct GaugeCheckReport {
    std::vector<double> times;
    std::vector<double> err_G, err_g, err_A, err_H;
    double max_error() const;
};

// d = 1 only. Runs the ungauged flow together with the base flow of q, pulls
// the ungauged fields back and compares with an independent canonical run.
GaugeCheckReport gauge_flow_check(const GeometryState& s0, const IntegratorConfig& cfg);

// Periodic 8-point Lagrange interpolation of every component of f at positions xq (one per grid point, d = 1).
Field periodic_interpolate(const Field& f, const std::vector<double>& xq);

}  // namespace grf
