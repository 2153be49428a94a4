#include "random_fields.hpp"

#include <cmath>

namespace grf {

Field smooth_field(MeshPtr mesh, std::vector<Slot> slots, int k, double amp, Rng& rng, std::vector<SymPair> syms) {
    Field f(mesh, std::move(slots), k);
    std::normal_distribution<double> nd;
    const int modes[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    const int modes1d[2][2] = {{1, 0}, {2, 0}};
    const bool one_d = mesh->d == 1;
    const int nmodes = one_d ? 2 : 4;
    for (int c = 0; c < f.ncomp(); ++c)
        for (int m = 0; m < nmodes; ++m) {
            const double a = nd(rng), b = nd(rng);
            double* v = f.data(c);
            for (int p = 0; p < f.npts(); ++p) {
                const int* md = one_d ? modes1d[m] : modes[m];
                double arg = md[0] * mesh->x(0, p) / mesh->L[0];
                if (!one_d) arg += md[1] * mesh->x(1, p) / mesh->L[1];
                const double ph = 2 * M_PI * arg;
                v[p] += amp * (a * std::cos(ph) + b * std::sin(ph));
            }
        }
    if (!syms.empty()) f.declare(std::move(syms));
    return f;
}

GeometryState random_state(const LieAlgebra& alg, MeshPtr mesh, double amp, Rng& rng) {
    GeometryState s = GeometryState::trivial(alg, mesh);
    const int k = alg.k;
    s.G += smooth_field(mesh, {Slot::Fiber, Slot::Fiber}, k, amp, rng, {{0, 1, false}});
    s.g += smooth_field(mesh, {Slot::Base, Slot::Base}, k, amp, rng, {{0, 1, false}});
    s.A = smooth_field(mesh, {Slot::Base, Slot::Fiber}, k, amp, rng);
    return s;
}

Field random_two_form(MeshPtr mesh, int k, double amp, Rng& rng) {
    return smooth_field(mesh, {Slot::Total, Slot::Total}, k, amp, rng, {{0, 1, true}});
}

}  // namespace grf
