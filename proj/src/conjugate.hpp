#pragma once

#include <vector>

#include "flow.hpp"

namespace grf {

// The part of a forward state the backward equation needs.
struct ConjugateBackground {
    double t = 0;
    Field g;  // (a,b)
    Field q;  // (a)
    Field c;  // R_g - |DG|^2/4 - |F|^2/2 - tr_g script-H / 4
};
ConjugateBackground conjugate_background(const GeometryState& s);
ConjugateBackground conjugate_background(const GeometryState& s, const DerivedGeometry& dg);

// Laplace-Beltrami in divergence form: (1/sqrt g) d_a(sqrt g g^{ab} d_b u).
Field laplacian(const Field& u, const Field& g);

// du/dt = -Lap u + (c + kappa <q, grad log u>) u.
Field conj_rhs(const Field& u, const ConjugateBackground& bg, double kappa);

struct ConjugateOptions {
    double q_coefficient = -1.0;  // kappa
};

struct ConjugateTrajectory {
    std::vector<double> t;  // ascending, one entry per background node
    std::vector<Field> u;
    std::vector<double> mass;
    double max_mass_drift = 0;  // max_t |mass(t) - mass(T)| / mass(T)
    bool aborted = false;
    std::string abort_reason;
};

// u(T) = 1/Vol(g(T)) at the last node, integrated back to the first node with
// RK4 on the reversed node grid; midpoint backgrounds by cubic Lagrange in time.
ConjugateTrajectory solve_backward(const std::vector<ConjugateBackground>& history, const ConjugateOptions& opt = {});

// Background at time t by Lagrange interpolation over the 4 nearest nodes.
ConjugateBackground interpolate_background(const std::vector<ConjugateBackground>& history, double t);

enum class PotentialMode { Steady, Expander };
// steady: f = -log u; expander: f = -log u - (n/2) log(4 pi t).
Field potential(const Field& u, double t, PotentialMode mode, double n);

}  // namespace grf
