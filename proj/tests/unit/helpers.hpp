#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "flow.hpp"
#include "random_fields.hpp"

namespace grf::test {

inline MeshPtr line(int N, double L = 1.0) { return Mesh::make(1, {N, 1}, {L, 1.0}); }
inline MeshPtr torus(int N, double L = 1.0) { return Mesh::make(2, {N, N}, {L, L}); }

// Field whose component c at point (x, y) is fn(c, x, y).
inline Field fill(MeshPtr m, std::vector<Slot> slots, int k, const std::function<double(int, double, double)>& fn,
                  std::vector<SymPair> syms = {}) {
    Field f(m, std::move(slots), k);
    for (int c = 0; c < f.ncomp(); ++c)
        for (int p = 0; p < f.npts(); ++p) f.at(c, p) = fn(c, m->x(0, p), m->d > 1 ? m->x(1, p) : 0.0);
    if (!syms.empty()) f.declare(std::move(syms));
    return f;
}

inline Field scalar_fn(MeshPtr m, int k, const std::function<double(double, double)>& fn) {
    return fill(m, {}, k, [&](int, double x, double y) { return fn(x, y); });
}

inline double max_diff(const Field& a, const Field& b) { return (a - b).max_abs(); }

inline GeometryState perturbed(const LieAlgebra& alg, MeshPtr m, double amp, std::uint64_t seed) {
    Rng rng(seed);
    return random_state(alg, m, amp, rng);
}

constexpr double kTwoPi = 2.0 * M_PI;

}  // namespace grf::test
