#pragma once

#include <cstdint>
#include <random>

#include "geometry.hpp"

namespace grf {

using Rng = std::mt19937_64;

// Sum of low Fourier modes ((1,0), (0,1), (1,1), (1,-1) in 2-D; 1 and 2 in 1-D) with normal coefficients
// scaled by amp, then symmetrized according to syms.
Field smooth_field(MeshPtr mesh, std::vector<Slot> slots, int k, double amp, Rng& rng,
                   std::vector<SymPair> syms = {});

// Identity metrics plus smooth perturbations of size amp, random A of size amp, H = 0.
GeometryState random_state(const LieAlgebra& alg, MeshPtr mesh, double amp, Rng& rng);

// Smooth random two-form of size amp.
Field random_two_form(MeshPtr mesh, int k, double amp, Rng& rng);

}  // namespace grf
