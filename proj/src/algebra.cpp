#include "algebra.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace grf {

namespace {
constexpr double kRankTol = 1e-10;

Eigen::MatrixXd spd_inverse(const std::vector<double>& G, int k) {
    require(static_cast<int>(G.size()) == k * k, ErrorKind::Structural, "fiber metric must be k x k");
    Eigen::MatrixXd m(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) m(i, j) = G[i * k + j];
    require((m - m.transpose()).norm() <= 1e-12 * (1 + m.norm()), ErrorKind::Domain, "fiber metric is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    require(llt.info() == Eigen::Success, ErrorKind::Domain, "fiber metric is not positive definite");
    return llt.solve(Eigen::MatrixXd::Identity(k, k));
}

// Orthonormal basis (columns) of the span of the given vectors, numerical rank tolerance kRankTol.
Eigen::MatrixXd span_basis(const std::vector<Eigen::VectorXd>& vs, int k) {
    if (vs.empty()) return Eigen::MatrixXd(k, 0);
    Eigen::MatrixXd m(k, static_cast<int>(vs.size()));
    for (size_t i = 0; i < vs.size(); ++i) m.col(static_cast<int>(i)) = vs[i];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankTol) ++r;
    return svd.matrixU().leftCols(r);
}
}  // namespace

bool LieAlgebra::abelian() const {
    for (double x : c)
        if (x != 0.0) return false;
    return true;
}

ConstTensor LieAlgebra::c_tensor() const {
    return ConstTensor{{Slot::Fiber, Slot::Fiber, Slot::Fiber}, {k, k, k}, c};
}

ConstTensor LieAlgebra::beta_tensor() const {
    ConstTensor t = c_tensor();
    for (double& x : t.v) x = -x;
    return t;
}

LieAlgebra LieAlgebra::abelian_algebra(int k) {
    require(k >= 0, ErrorKind::Structural, "algebra: k must be non-negative");
    return LieAlgebra{k, std::vector<double>(static_cast<size_t>(k) * k * k, 0.0)};
}

LieAlgebra LieAlgebra::heisenberg3() {
    LieAlgebra a = abelian_algebra(3);
    a(2, 0, 1) = 1.0;
    a(2, 1, 0) = -1.0;
    return a;
}

LieAlgebra LieAlgebra::preset(const std::string& name) {
    if (name.rfind("abelian:", 0) == 0) {
        int k = 0;
        try {
            k = std::stoi(name.substr(8));
        } catch (...) {
            fail(ErrorKind::Config, "algebra preset '" + name + "': bad dimension");
        }
        return abelian_algebra(k);
    }
    if (name == "heisenberg3") return heisenberg3();
    if (name == "filiform4") {
        // [x1,x2] = x3, [x1,x3] = x4
        LieAlgebra a = abelian_algebra(4);
        a(2, 0, 1) = 1;
        a(2, 1, 0) = -1;
        a(3, 0, 2) = 1;
        a(3, 2, 0) = -1;
        return a;
    }
    fail(ErrorKind::Config, "unknown algebra preset '" + name + "'");
}

LieAlgebra LieAlgebra::from_constants(int k, const std::vector<double>& c) {
    require(k >= 0 && c.size() == static_cast<size_t>(k) * k * k, ErrorKind::Structural,
            "algebra: structure constants must be a k x k x k array");
    return LieAlgebra{k, c};
}

std::string AlgebraReport::describe() const {
    std::ostringstream s;
    s << "antisymmetry " << (antisymmetric ? "pass" : "FAIL") << " (defect " << antisymmetry_defect << "), jacobi "
      << (jacobi ? "pass" : "FAIL") << " (defect " << jacobi_defect << "), nilpotency "
      << (nilpotent ? "pass" : "FAIL");
    if (nilpotent) s << " (step " << nilpotency_step << ")";
    return s.str();
}

AlgebraReport validate_algebra(const LieAlgebra& alg) {
    const int k = alg.k;
    require(k >= 0 && alg.c.size() == static_cast<size_t>(k) * k * k, ErrorKind::Structural,
            "algebra: structure constants must be a k x k x k array");
    AlgebraReport r;
    double scale = 1.0;
    for (double x : alg.c) scale = std::max(scale, std::abs(x));

    for (int m = 0; m < k; ++m)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) r.antisymmetry_defect = std::max(r.antisymmetry_defect, std::abs(alg(m, i, j) + alg(m, j, i)));
    r.antisymmetric = r.antisymmetry_defect <= 1e-12 * scale;

    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l)
                for (int n = 0; n < k; ++n) {
                    double s = 0;
                    for (int m = 0; m < k; ++m)
                        s += alg(m, i, j) * alg(n, m, l) + alg(m, j, l) * alg(n, m, i) + alg(m, l, i) * alg(n, m, j);
                    r.jacobi_defect = std::max(r.jacobi_defect, std::abs(s));
                }
    r.jacobi = r.jacobi_defect <= 1e-12 * scale * scale;

    // Lower central series g_1 = [g,g], g_{s+1} = [g, g_s]; nilpotent when it reaches {0} in <= k steps.
    std::vector<Eigen::VectorXd> basis_vecs;
    for (int i = 0; i < k; ++i) basis_vecs.push_back(Eigen::VectorXd::Unit(k, i));
    Eigen::MatrixXd current = span_basis(basis_vecs, k);
    r.nilpotent = (k == 0);
    r.nilpotency_step = (k == 0) ? 0 : -1;
    for (int step = 1; step <= k; ++step) {
        std::vector<Eigen::VectorXd> images;
        for (int i = 0; i < k; ++i)
            for (int col = 0; col < current.cols(); ++col) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
                for (int m = 0; m < k; ++m)
                    for (int j = 0; j < k; ++j) v(m) += alg(m, i, j) * current(j, col);
                images.push_back(v);
            }
        current = span_basis(images, k);
        if (current.cols() == 0) {
            r.nilpotent = true;
            r.nilpotency_step = step;
            break;
        }
    }
    return r;
}

void require_nilpotent(const LieAlgebra& alg) {
    AlgebraReport r = validate_algebra(alg);
    if (!r.ok()) fail(ErrorKind::Validation, "algebra rejected: " + r.describe());
}

AdTraces ad_traces(const LieAlgebra& alg, const std::vector<double>& G) {
    const int k = alg.k;
    Eigen::MatrixXd Gi = spd_inverse(G, k);
    AdTraces out;
    out.single.assign(k, 0.0);
    out.nested.assign(static_cast<size_t>(k) * k, 0.0);
    // G(x, y) with x = beta(eta, e_p) expanded in components
    for (int e = 0; e < k; ++e)
        for (int p = 0; p < k; ++p)
            for (int q = 0; q < k; ++q) {
                double gpq = Gi(p, q);
                if (gpq == 0) continue;
                for (int m = 0; m < k; ++m) out.single[e] += gpq * alg.beta(m, e, p) * G[m * k + q];
            }
    for (int e1 = 0; e1 < k; ++e1)
        for (int e2 = 0; e2 < k; ++e2) {
            double s = 0;
            for (int p = 0; p < k; ++p)
                for (int q = 0; q < k; ++q) {
                    double gpq = Gi(p, q);
                    if (gpq == 0) continue;
                    for (int l = 0; l < k; ++l) {
                        double inner = alg.beta(l, e2, p);
                        if (inner == 0) continue;
                        for (int m = 0; m < k; ++m) s += gpq * alg.beta(m, e1, l) * inner * G[m * k + q];
                    }
                }
            out.nested[e1 * k + e2] = s;
        }
    return out;
}

double bracket_norm_sq(const LieAlgebra& alg, const std::vector<double>& G) {
    const int k = alg.k;
    Eigen::MatrixXd Gi = spd_inverse(G, k);
    double s = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) {
                    double w = Gi(i, j) * Gi(a, b);
                    if (w == 0) continue;
                    for (int m = 0; m < k; ++m) {
                        double bm = alg.beta(m, i, a);
                        if (bm == 0) continue;
                        for (int n = 0; n < k; ++n) s += w * G[m * k + n] * bm * alg.beta(n, j, b);
                    }
                }
    return s;
}

}  // namespace grf
