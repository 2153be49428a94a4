#pragma once

#include <string>
#include <vector>

#include "grid.hpp"

namespace grf {

// Structure constants c^m_{ij} with [x_i, x_j] = c^m_{ij} x_m, stored c[(m*k + i)*k + j].
struct LieAlgebra {
    int k = 0;
    std::vector<double> c;

    double operator()(int m, int i, int j) const { return c[(m * k + i) * k + j]; }
    double& operator()(int m, int i, int j) { return c[(m * k + i) * k + j]; }
    // Fiber bracket on the adjoint bundle in the trivialized frame: beta = -c.
    double beta(int m, int i, int j) const { return -(*this)(m, i, j); }
    bool abelian() const;

    ConstTensor c_tensor() const;     // slots (m,i,j)
    ConstTensor beta_tensor() const;  // slots (m,i,j)

    static LieAlgebra abelian_algebra(int k);
    static LieAlgebra heisenberg3();
    // "abelian:k", "heisenberg3", "filiform4"
    static LieAlgebra preset(const std::string& name);
    static LieAlgebra from_constants(int k, const std::vector<double>& c);
};

struct AlgebraReport {
    bool antisymmetric = false;
    bool jacobi = false;
    bool nilpotent = false;
    int nilpotency_step = -1;
    double antisymmetry_defect = 0;
    double jacobi_defect = 0;
    bool ok() const { return antisymmetric && jacobi && nilpotent; }
    std::string describe() const;
};

AlgebraReport validate_algebra(const LieAlgebra& alg);
// Throws Validation with the failing checks named.
void require_nilpotent(const LieAlgebra& alg);

struct AdTraces {
    std::vector<double> single;  // tr_G G([eta,.],.), indexed by eta
    std::vector<double> nested;  // tr_G G([eta1,[eta2,.]],.), k*k
};
// G is a dense k*k SPD matrix at a point.
AdTraces ad_traces(const LieAlgebra& alg, const std::vector<double>& G);
double bracket_norm_sq(const LieAlgebra& alg, const std::vector<double>& G);

}  // namespace grf
