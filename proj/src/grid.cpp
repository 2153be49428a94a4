#include "grid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace grf {

namespace {
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

std::string point_desc(const Mesh& m, int p) {
    std::ostringstream s;
    if (m.d == 1)
        s << "point " << p << " (x=" << m.x(0, p) << ")";
    else
        s << "point (" << p / m.n[1] << "," << p % m.n[1] << ")";
    return s.str();
}
}  // namespace

MeshPtr Mesh::make(int d, std::array<int, 2> n, std::array<double, 2> L) {
    require(d == 1 || d == 2, ErrorKind::Structural, "mesh: base dimension must be 1 or 2");
    auto m = std::make_shared<Mesh>();
    m->d = d;
    m->n = n;
    m->L = L;
    if (d == 1) {
        m->n[1] = 1;
        m->L[1] = 1.0;
    }
    for (int a = 0; a < d; ++a) {
        require(n[a] >= 8, ErrorKind::Structural, "mesh: at least 8 points per axis are required");
        require(L[a] > 0, ErrorKind::Structural, "mesh: box lengths must be positive");
    }
    return m;
}

double Mesh::x(int a, int p) const {
    int i = (d == 1) ? p : (a == 0 ? p / n[1] : p % n[1]);
    return i * h(a);
}

double Mesh::min_h() const { return d == 1 ? h(0) : std::min(h(0), h(1)); }

int slot_range(Slot s, int k, int d) {
    switch (s) {
        case Slot::Fiber: return k;
        case Slot::Base: return d;
        case Slot::Total: return k + d;
    }
    return 0;
}

Field::Field(MeshPtr mesh, std::vector<Slot> slots, int k, std::vector<SymPair> syms)
    : mesh_(std::move(mesh)), slots_(std::move(slots)), syms_(std::move(syms)), k_(k) {
    require(mesh_ != nullptr, ErrorKind::Structural, "field: null mesh");
    ncomp_ = 1;
    for (Slot s : slots_) {
        dims_.push_back(slot_range(s, k_, mesh_->d));
        ncomp_ *= dims_.back();
    }
    npts_ = mesh_->npts();
    v_.assign(static_cast<size_t>(ncomp_) * npts_, 0.0);
    for (auto& sp : syms_)
        require(sp.a < rank() && sp.b < rank() && slots_[sp.a] == slots_[sp.b], ErrorKind::Structural,
                "field: symmetry pairs must join slots of the same kind");
}

Field Field::scalar(MeshPtr mesh, int k, double value) {
    Field f(std::move(mesh), {}, k);
    std::fill(f.v_.begin(), f.v_.end(), value);
    return f;
}

int Field::comp(std::initializer_list<int> idx) const { return comp(idx.begin()); }

int Field::comp(const int* idx) const {
    int c = 0;
    for (int s = 0; s < rank(); ++s) c = c * dims_[s] + idx[s];
    return c;
}

void Field::unflatten(int c, int* idx) const {
    for (int s = rank() - 1; s >= 0; --s) {
        idx[s] = c % dims_[s];
        c /= dims_[s];
    }
}

void Field::declare(std::vector<SymPair> syms) {
    syms_ = std::move(syms);
    enforce_symmetry();
}

void Field::enforce_symmetry() {
    if (syms_.empty()) return;
    // Group slots linked by declared pairs and project onto the (anti)symmetric
    // part over each group: average over all permutations with signs.
    const int r = rank();
    std::vector<int> group(r);
    std::iota(group.begin(), group.end(), 0);
    std::vector<bool> anti(r, false);
    auto root = [&](int s) {
        while (group[s] != s) s = group[s];
        return s;
    };
    for (auto& sp : syms_) {
        int ra = root(sp.a), rb = root(sp.b);
        if (ra != rb) group[std::max(ra, rb)] = std::min(ra, rb);
    }
    for (auto& sp : syms_) anti[root(sp.a)] = sp.anti;
    std::map<int, std::vector<int>> groups;
    for (int s = 0; s < r; ++s) groups[root(s)].push_back(s);

    std::vector<double> out(v_.size());
    std::vector<int> idx(r), src(r);
    for (auto& [g, members] : groups) {
        if (members.size() < 2) continue;
        const bool is_anti = anti[g];
        std::vector<int> perm(members.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::vector<std::pair<std::vector<int>, double>> perms;
        do {
            int inv = 0;
            for (size_t i = 0; i < perm.size(); ++i)
                for (size_t j = i + 1; j < perm.size(); ++j)
                    if (perm[i] > perm[j]) ++inv;
            perms.push_back({perm, (is_anti && (inv % 2)) ? -1.0 : 1.0});
        } while (std::next_permutation(perm.begin(), perm.end()));
        const double w = 1.0 / static_cast<double>(perms.size());
        std::fill(out.begin(), out.end(), 0.0);
        for (int c = 0; c < ncomp_; ++c) {
            unflatten(c, idx.data());
            double* dst = out.data() + static_cast<size_t>(c) * npts_;
            for (auto& [pm, sgn] : perms) {
                src = idx;
                for (size_t i = 0; i < members.size(); ++i) src[members[i]] = idx[members[pm[i]]];
                const double* s = data(comp(src.data()));
                const double f = sgn * w;
                for (int p = 0; p < npts_; ++p) dst[p] += f * s[p];
            }
        }
        v_.swap(out);
    }
}

bool Field::finite() const {
    return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

double Field::max_abs() const {
    double m = 0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
}

bool Field::same_shape(const Field& o) const {
    return mesh_ == o.mesh_ && slots_ == o.slots_ && k_ == o.k_;
}

Field& Field::operator+=(const Field& o) { return axpy(1.0, o); }
Field& Field::operator-=(const Field& o) { return axpy(-1.0, o); }

Field& Field::operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
}

Field& Field::axpy(double a, const Field& x) {
    require(v_.size() == x.v_.size() && dims_ == x.dims_, ErrorKind::Structural, "field: shape mismatch in axpy");
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
    return *this;
}

Field Field::zeros_like() const {
    Field z = *this;
    std::fill(z.v_.begin(), z.v_.end(), 0.0);
    return z;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field partial_derivative(const Field& f, int axis) {
    const Mesh& m = f.mesh();
    require(axis >= 0 && axis < m.d, ErrorKind::Structural, "partial_derivative: axis out of range");
    Field out = f;  // the stencil is linear, so declared symmetries carry over exactly
    const double inv = 1.0 / (12.0 * m.h(axis));
    const int n0 = m.n[0], n1 = m.d == 2 ? m.n[1] : 1;
    for (int c = 0; c < f.ncomp(); ++c) {
        const double* s = f.data(c);
        double* o = out.data(c);
        if (axis == 0) {
            for (int i = 0; i < n0; ++i) {
                const double* p2 = s + ((i + 2) % n0) * n1;
                const double* p1 = s + ((i + 1) % n0) * n1;
                const double* m1 = s + ((i + n0 - 1) % n0) * n1;
                const double* m2 = s + ((i + n0 - 2) % n0) * n1;
                double* oo = o + i * n1;
                for (int j = 0; j < n1; ++j) oo[j] = (8.0 * (p1[j] - m1[j]) - (p2[j] - m2[j])) * inv;
            }
        } else {
            for (int i = 0; i < n0; ++i) {
                const double* row = s + i * n1;
                double* oo = o + i * n1;
                for (int j = 0; j < n1; ++j) {
                    const double p1 = row[(j + 1) % n1], p2 = row[(j + 2) % n1];
                    const double m1 = row[(j + n1 - 1) % n1], m2 = row[(j + n1 - 2) % n1];
                    oo[j] = (8.0 * (p1 - m1) - (p2 - m2)) * inv;
                }
            }
        }
    }
    return out;
}

Field gradient(const Field& f) {
    std::vector<Slot> slots{Slot::Base};
    slots.insert(slots.end(), f.slots().begin(), f.slots().end());
    Field out(f.mesh_ptr(), slots, f.k());
    const size_t block = static_cast<size_t>(f.ncomp()) * f.npts();
    for (int a = 0; a < f.mesh().d; ++a) {
        Field da = partial_derivative(f, a);
        std::copy(da.values().begin(), da.values().end(), out.values().begin() + a * block);
    }
    return out;
}

double integrate_density(const Field& scalar, const Field& density) {
    require(scalar.rank() == 0 && density.rank() == 0, ErrorKind::Structural, "integrate: scalar fields expected");
    // Fixed-order summation keeps results bit-reproducible.
    double s = 0.0;
    const double* a = scalar.data();
    const double* w = density.data();
    for (int p = 0; p < scalar.npts(); ++p) s += a[p] * w[p];
    return s * scalar.mesh().cell();
}

double integrate(const Field& scalar, const Field& g) {
    require(scalar.rank() == 0, ErrorKind::Structural, "integrate: scalar field expected");
    return integrate_density(scalar, sqrt_det(g));
}

Operand operand(const Field& f) {
    return Operand{f.data(), f.npts(), f.slots(), f.dims(), f.mesh_ptr(), f.k()};
}

Operand operand(const ConstTensor& t) { return Operand{t.v.data(), 0, t.slots, t.dims, nullptr, 0}; }

namespace {

struct LetterInfo {
    Slot kind;
    int dim;
};

template <int NP>
void accumulate(double* out, const double* const* ptr, double coef, int npts) {
    if constexpr (NP == 0) {
        for (int p = 0; p < npts; ++p) out[p] += coef;
    } else if constexpr (NP == 1) {
        const double* a = ptr[0];
        for (int p = 0; p < npts; ++p) out[p] += coef * a[p];
    } else if constexpr (NP == 2) {
        const double *a = ptr[0], *b = ptr[1];
        for (int p = 0; p < npts; ++p) out[p] += coef * a[p] * b[p];
    } else if constexpr (NP == 3) {
        const double *a = ptr[0], *b = ptr[1], *c = ptr[2];
        for (int p = 0; p < npts; ++p) out[p] += coef * a[p] * b[p] * c[p];
    } else if constexpr (NP == 4) {
        const double *a = ptr[0], *b = ptr[1], *c = ptr[2], *d = ptr[3];
        for (int p = 0; p < npts; ++p) out[p] += coef * a[p] * b[p] * c[p] * d[p];
    }
}

void accumulate_n(double* out, const double* const* ptr, int np, double coef, int npts) {
    switch (np) {
        case 0: return accumulate<0>(out, ptr, coef, npts);
        case 1: return accumulate<1>(out, ptr, coef, npts);
        case 2: return accumulate<2>(out, ptr, coef, npts);
        case 3: return accumulate<3>(out, ptr, coef, npts);
        case 4: return accumulate<4>(out, ptr, coef, npts);
        default:
            for (int p = 0; p < npts; ++p) {
                double v = coef;
                for (int o = 0; o < np; ++o) v *= ptr[o][p];
                out[p] += v;
            }
    }
}

}  // namespace

Field contract(std::string_view spec, const std::vector<Operand>& ops) {
    const auto arrow = spec.find("->");
    require(arrow != std::string_view::npos, ErrorKind::Structural, "contract: missing '->' in index plan");
    std::vector<std::string> terms;
    {
        std::string cur;
        for (char ch : spec.substr(0, arrow)) {
            if (ch == ',') {
                terms.push_back(cur);
                cur.clear();
            } else if (ch != ' ') {
                cur.push_back(ch);
            }
        }
        terms.push_back(cur);
    }
    std::string out_letters(spec.substr(arrow + 2));
    require(terms.size() == ops.size(), ErrorKind::Structural, "contract: operand count does not match index plan");

    MeshPtr mesh;
    int k = 0;
    for (auto& op : ops)
        if (op.mesh) {
            mesh = op.mesh;
            k = op.k;
            break;
        }
    require(mesh != nullptr, ErrorKind::Structural, "contract: at least one field operand is required");

    std::map<char, LetterInfo> letters;
    for (size_t o = 0; o < ops.size(); ++o) {
        require(terms[o].size() == ops[o].slots.size(), ErrorKind::Structural,
                "contract: operand " + std::to_string(o) + " rank does not match '" + terms[o] + "'");
        for (size_t s = 0; s < terms[o].size(); ++s) {
            char ch = terms[o][s];
            auto it = letters.find(ch);
            if (it == letters.end()) {
                letters[ch] = {ops[o].slots[s], ops[o].dims[s]};
            } else {
                require(it->second.kind == ops[o].slots[s] && it->second.dim == ops[o].dims[s], ErrorKind::Structural,
                        std::string("contract: range mismatch on index '") + ch + "'");
            }
        }
    }
    std::vector<Slot> out_slots;
    for (char ch : out_letters) {
        auto it = letters.find(ch);
        require(it != letters.end(), ErrorKind::Structural, std::string("contract: output index '") + ch + "' unused");
        out_slots.push_back(it->second.kind);
    }
    Field out(mesh, out_slots, k);

    // Enumerate all index assignments once; record per-operand component offsets.
    std::vector<char> all(out_letters.begin(), out_letters.end());
    for (auto& [ch, info] : letters)
        if (out_letters.find(ch) == std::string::npos) all.push_back(ch);
    std::map<char, int> pos;
    for (size_t i = 0; i < all.size(); ++i) pos[all[i]] = static_cast<int>(i);
    std::vector<int> dims(all.size());
    for (size_t i = 0; i < all.size(); ++i) dims[i] = letters[all[i]].dim;

    // stride of each letter in each operand and in the output
    const size_t no = ops.size();
    std::vector<std::vector<int>> stride(no + 1, std::vector<int>(all.size(), 0));
    auto fill_strides = [&](const std::string& term, const std::vector<int>& tdims, std::vector<int>& st) {
        int s = 1;
        for (int i = static_cast<int>(term.size()) - 1; i >= 0; --i) {
            st[pos[term[i]]] += s;
            s *= tdims[i];
        }
    };
    for (size_t o = 0; o < no; ++o) fill_strides(terms[o], ops[o].dims, stride[o]);
    fill_strides(out_letters, out.dims(), stride[no]);

    std::vector<int> idx(all.size(), 0);
    std::vector<int> off(no + 1, 0);
    std::vector<const double*> ptr(no);
    std::vector<int> pw;
    for (size_t o = 0; o < no; ++o)
        if (ops[o].pt_stride != 0) pw.push_back(static_cast<int>(o));
    const int npts = out.npts();

    for (;;) {
        std::fill(off.begin(), off.end(), 0);
        for (size_t i = 0; i < all.size(); ++i)
            for (size_t o = 0; o <= no; ++o) off[o] += stride[o][i] * idx[i];
        double coef = 1.0;
        for (size_t o = 0; o < no; ++o)
            if (ops[o].pt_stride == 0) coef *= ops[o].data[off[o]];
        if (coef != 0.0) {
            for (size_t j = 0; j < pw.size(); ++j) {
                int o = pw[j];
                ptr[j] = ops[o].data + static_cast<size_t>(off[o]) * ops[o].pt_stride;
            }
            accumulate_n(out.data(off[no]), ptr.data(), static_cast<int>(pw.size()), coef, npts);
        }
        // odometer
        int i = static_cast<int>(all.size()) - 1;
        for (; i >= 0; --i) {
            if (++idx[i] < dims[i]) break;
            idx[i] = 0;
        }
        if (i < 0) break;
    }
    return out;
}

Field inverse_spd(const Field& m, const char* name) {
    require(m.rank() == 2 && m.dim(0) == m.dim(1), ErrorKind::Structural, "inverse: square rank-2 field expected");
    const int r = m.dim(0);
    Field out = m;
    SmallMat a(r, r);
    for (int p = 0; p < m.npts(); ++p) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) a(i, j) = m.at(i * r + j, p);
        Eigen::LLT<SmallMat> llt(a);
        if (llt.info() != Eigen::Success)
            fail(ErrorKind::Domain, std::string(name) + " is not positive definite at " + point_desc(m.mesh(), p));
        SmallMat inv = llt.solve(SmallMat::Identity(r, r));
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) out.at(i * r + j, p) = 0.5 * (inv(i, j) + inv(j, i));
    }
    return out;
}

Field sqrt_det(const Field& m) {
    require(m.rank() == 2 && m.dim(0) == m.dim(1), ErrorKind::Structural, "sqrt_det: square rank-2 field expected");
    const int r = m.dim(0);
    Field out(m.mesh_ptr(), {}, m.k());
    SmallMat a(r, r);
    for (int p = 0; p < m.npts(); ++p) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) a(i, j) = m.at(i * r + j, p);
        const double det = a.determinant();
        if (!(det > 0)) fail(ErrorKind::Domain, "metric determinant is not positive at " + point_desc(m.mesh(), p));
        out.at(0, p) = std::sqrt(det);
    }
    return out;
}

namespace {
double extreme_eig(const Field& m, bool want_min, int* where) {
    require(m.rank() == 2 && m.dim(0) == m.dim(1), ErrorKind::Structural, "eigenvalue: square rank-2 field expected");
    const int r = m.dim(0);
    if (r == 0) return want_min ? INFINITY : -INFINITY;
    SmallMat a(r, r);
    double best = want_min ? INFINITY : -INFINITY;
    for (int p = 0; p < m.npts(); ++p) {
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) a(i, j) = m.at(i * r + j, p);
        Eigen::SelfAdjointEigenSolver<SmallMat> es(a, Eigen::EigenvaluesOnly);
        const double e = want_min ? es.eigenvalues()(0) : es.eigenvalues()(r - 1);
        if (!std::isfinite(e)) {
            if (where) *where = p;
            return NAN;
        }
        if (want_min ? e < best : e > best) {
            best = e;
            if (where) *where = p;
        }
    }
    return best;
}
}  // namespace

double min_eigenvalue(const Field& m, int* where) { return extreme_eig(m, true, where); }
double max_eigenvalue(const Field& m) { return extreme_eig(m, false, nullptr); }

Field permute(const Field& f, const std::vector<int>& order) {
    require(static_cast<int>(order.size()) == f.rank(), ErrorKind::Structural, "permute: order size mismatch");
    std::vector<Slot> slots(f.rank());
    for (int s = 0; s < f.rank(); ++s) slots[s] = f.slots()[order[s]];
    Field out(f.mesh_ptr(), slots, f.k());
    std::vector<int> idx(f.rank()), src(f.rank());
    for (int c = 0; c < out.ncomp(); ++c) {
        out.unflatten(c, idx.data());
        for (int s = 0; s < f.rank(); ++s) src[order[s]] = idx[s];
        std::copy(f.data(f.comp(src.data())), f.data(f.comp(src.data())) + f.npts(), out.data(c));
    }
    return out;
}

}  // namespace grf
