#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace grf {

// Flat periodic box of dimension 1 or 2. Points are stored with axis 0 slowest.
struct Mesh {
    int d = 1;
    std::array<int, 2> n{8, 1};
    std::array<double, 2> L{1.0, 1.0};

    static std::shared_ptr<const Mesh> make(int d, std::array<int, 2> n, std::array<double, 2> L);

    int npts() const { return d == 1 ? n[0] : n[0] * n[1]; }
    double h(int a) const { return L[a] / n[a]; }
    double cell() const { return d == 1 ? h(0) : h(0) * h(1); }
    double volume() const { return d == 1 ? L[0] : L[0] * L[1]; }
    int index(int i0, int i1 = 0) const { return d == 1 ? i0 : i0 * n[1] + i1; }
    // coordinate of axis a at point p
    double x(int a, int p) const;
    double min_h() const;
};
using MeshPtr = std::shared_ptr<const Mesh>;

enum class Slot : unsigned char { Fiber, Base, Total };

struct SymPair {
    int a, b;
    bool anti;
};

// A pointwise tensor field: every grid point carries a dense array indexed by
// the slot signature. Storage is component-major (all points of component 0,
// then component 1, ...), which keeps stencils and pointwise kernels contiguous.
class Field {
public:
    Field() = default;
    Field(MeshPtr mesh, std::vector<Slot> slots, int k, std::vector<SymPair> syms = {});

    static Field scalar(MeshPtr mesh, int k, double value = 0.0);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    bool empty() const { return !mesh_; }
    int k() const { return k_; }
    int rank() const { return static_cast<int>(slots_.size()); }
    const std::vector<Slot>& slots() const { return slots_; }
    const std::vector<int>& dims() const { return dims_; }
    const std::vector<SymPair>& symmetries() const { return syms_; }
    int dim(int s) const { return dims_[s]; }
    int ncomp() const { return ncomp_; }
    int npts() const { return npts_; }

    int comp(std::initializer_list<int> idx) const;
    int comp(const int* idx) const;
    void unflatten(int c, int* idx) const;

    double* data(int c = 0) { return v_.data() + static_cast<size_t>(c) * npts_; }
    const double* data(int c = 0) const { return v_.data() + static_cast<size_t>(c) * npts_; }
    double& at(int c, int p) { return v_[static_cast<size_t>(c) * npts_ + p]; }
    double at(int c, int p) const { return v_[static_cast<size_t>(c) * npts_ + p]; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    void declare(std::vector<SymPair> syms);
    void enforce_symmetry();
    bool finite() const;
    double max_abs() const;
    bool same_shape(const Field& o) const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double s);
    Field& axpy(double a, const Field& x);  // this += a*x
    Field zeros_like() const;

private:
    MeshPtr mesh_;
    std::vector<Slot> slots_;
    std::vector<int> dims_;
    std::vector<SymPair> syms_;
    int k_ = 0;
    int ncomp_ = 1;
    int npts_ = 0;
    std::vector<double> v_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

// Point-independent tensor (structure constants, Kronecker deltas).
struct ConstTensor {
    std::vector<Slot> slots;
    std::vector<int> dims;
    std::vector<double> v;
};

int slot_range(Slot s, int k, int d);

// 4th-order central difference, periodic.
Field partial_derivative(const Field& f, int axis);
// Stacks all partial derivatives into a new leading base slot.
Field gradient(const Field& f);
// Sum of scalar * sqrt(det g) * cell volume.
double integrate(const Field& scalar, const Field& g);
// Same quadrature with a precomputed density (sqrt det g).
double integrate_density(const Field& scalar, const Field& density);

// Pointwise Einstein summation. The subscript string reads like "ab,abij->ij". Every paired
// letter must join slots of the same kind. No combinatorial prefactors.
struct Operand {
    const double* data = nullptr;
    int pt_stride = 0;  // npts for fields, 0 for constants
    std::vector<Slot> slots;
    std::vector<int> dims;
    MeshPtr mesh;
    int k = 0;
};
Operand operand(const Field& f);
Operand operand(const ConstTensor& t);
Field contract(std::string_view spec, const std::vector<Operand>& ops);

template <class... Args>
Field ein(std::string_view spec, const Args&... args) {
    return contract(spec, std::vector<Operand>{operand(args)...});
}

// Pointwise linear algebra on rank-2 symmetric fields.
Field inverse_spd(const Field& m, const char* name = "metric");
Field sqrt_det(const Field& m);
double min_eigenvalue(const Field& m, int* where = nullptr);
double max_eigenvalue(const Field& m);
// Swap two slots (e.g. transpose a rank-2 field).
Field permute(const Field& f, const std::vector<int>& order);

}  // namespace grf
