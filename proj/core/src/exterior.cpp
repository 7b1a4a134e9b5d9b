#include "tame/exterior.hpp"

#include <cmath>
#include <stdexcept>

namespace tame::exterior {

namespace {

double det_small(const Eigen::MatrixXd& a) {
    switch (a.rows()) {
        case 0: return 1.0;
        case 1: return a(0, 0);
        case 2: return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        case 3:
            return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                   a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                   a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        default: return Eigen::PartialPivLU<Eigen::MatrixXd>(a).determinant();
    }
}

Eigen::MatrixXd submatrix_rows(const Eigen::MatrixXd& v, std::span<const int> rows) {
    Eigen::MatrixXd s(static_cast<int>(rows.size()), v.cols());
    for (int i = 0; i < s.rows(); ++i) s.row(i) = v.row(rows[i]);
    return s;
}

// Adjugate via cofactors; fine at the m <= 8 sizes we ever see.
Eigen::MatrixXd adjugate(const Eigen::MatrixXd& a) {
    const int m = static_cast<int>(a.rows());
    Eigen::MatrixXd adj(m, m);
    if (m == 1) {
        adj(0, 0) = 1.0;
        return adj;
    }
    Eigen::MatrixXd minor(m - 1, m - 1);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            for (int r = 0, rr = 0; r < m; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < m; ++c) {
                    if (c == j) continue;
                    minor(rr, cc++) = a(r, c);
                }
                ++rr;
            }
            const double cof = (((i + j) & 1) ? -1.0 : 1.0) * det_small(minor);
            adj(j, i) = cof; // adjugate is the transposed cofactor matrix
        }
    }
    return adj;
}

} // namespace

void PointMetric::validate() const {
    if (gram.rows() != dim || gram.cols() != dim)
        throw std::invalid_argument("point metric: gram shape mismatch");
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("point metric: gram not symmetric to 1e-12");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("point metric: gram not positive definite");
}

MultiCovector MultiCovector::zero(int n, int m) {
    return {n, m, Eigen::VectorXd::Zero(static_cast<int>(binomial(n, m)))};
}

MultiCovector MultiCovector::basis(int n, int m, int rank) {
    MultiCovector phi = zero(n, m);
    phi.coeffs[rank] = 1.0;
    return phi;
}

MultiCovector& MultiCovector::operator+=(const MultiCovector& o) {
    if (dim != o.dim || degree != o.degree)
        throw std::invalid_argument("multicovector sum: dimension/degree mismatch");
    coeffs += o.coeffs;
    return *this;
}

MultiCovector& MultiCovector::operator*=(double c) {
    coeffs *= c;
    return *this;
}

MultiCovector wedge(const MultiCovector& a, const MultiCovector& b) {
    if (a.dim != b.dim) throw std::invalid_argument("wedge: dimension mismatch");
    const int n = a.dim;
    if (a.degree + b.degree > n) throw std::invalid_argument("wedge: degree overflow p+q > n");
    const auto& ta = multi_indices(n, a.degree);
    const auto& tb = multi_indices(n, b.degree);
    const auto& tc = multi_indices(n, a.degree + b.degree);
    MultiCovector out = MultiCovector::zero(n, a.degree + b.degree);
    for (int i = 0; i < ta.count(); ++i) {
        const double ca = a.coeffs[i];
        if (ca == 0.0) continue;
        const std::uint32_t mi = ta.mask(i);
        for (int j = 0; j < tb.count(); ++j) {
            const double cb = b.coeffs[j];
            if (cb == 0.0) continue;
            const std::uint32_t mj = tb.mask(j);
            if (mi & mj) continue;
            out.coeffs[tc.rank_of_mask(mi | mj)] += merge_sign(mi, mj) * ca * cb;
        }
    }
    return out;
}

double evaluate(const MultiCovector& phi, const SimpleFrame& v) {
    if (phi.dim != v.dim || phi.degree != v.degree)
        throw std::invalid_argument("evaluate: dimension/degree mismatch");
    const auto& tab = multi_indices(phi.dim, phi.degree);
    double acc = 0.0;
    for (int r = 0; r < tab.count(); ++r) {
        const double c = phi.coeffs[r];
        if (c == 0.0) continue;
        acc += c * det_small(submatrix_rows(v.vectors, tab.tuple(r)));
    }
    return v.weight * acc;
}

Eigen::MatrixXd evaluate_gradient(const MultiCovector& phi, const SimpleFrame& v) {
    const int n = phi.dim;
    const int m = phi.degree;
    const auto& tab = multi_indices(n, m);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, m);
    for (int r = 0; r < tab.count(); ++r) {
        const double c = phi.coeffs[r];
        if (c == 0.0) continue;
        const auto rows = tab.tuple(r);
        const Eigen::MatrixXd sub = submatrix_rows(v.vectors, rows);
        const Eigen::MatrixXd adj = adjugate(sub); // d det / d sub = adj^T
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) grad(rows[i], j) += c * adj(j, i);
    }
    return v.weight * grad;
}

double simple_norm(const SimpleFrame& v, const PointMetric& g) {
    if (v.dim != g.dim) throw std::invalid_argument("simple_norm: dimension mismatch");
    if (v.degree == 0) return std::abs(v.weight);
    const Eigen::MatrixXd gramv = v.vectors.transpose() * g.gram * v.vectors;
    const double d = det_small(gramv);
    return d <= 0.0 ? 0.0 : std::abs(v.weight) * std::sqrt(d);
}

Eigen::MatrixXd induced_gram(const PointMetric& g, int m) {
    const auto& tab = multi_indices(g.dim, m);
    const int c = tab.count();
    Eigen::MatrixXd out(c, c);
    Eigen::MatrixXd block(m, m);
    for (int i = 0; i < c; ++i) {
        const auto ti = tab.tuple(i);
        for (int j = i; j < c; ++j) {
            const auto tj = tab.tuple(j);
            for (int r = 0; r < m; ++r)
                for (int s = 0; s < m; ++s) block(r, s) = g.gram(ti[r], tj[s]);
            out(i, j) = det_small(block);
            out(j, i) = out(i, j);
        }
    }
    return out;
}

Eigen::RowVectorXd top_pairing_row(const MultiCovector& w) {
    const int n = w.dim;
    if (w.degree != n - 1) throw std::invalid_argument("top_pairing_row: degree must be n-1");
    const auto& t1 = multi_indices(n, 1);
    const auto& tw = multi_indices(n, n - 1);
    Eigen::RowVectorXd row(n);
    const std::uint32_t full = (1u << n) - 1u;
    for (int i = 0; i < n; ++i) {
        const std::uint32_t mi = t1.mask(i);
        const std::uint32_t mc = full & ~mi;
        row[i] = merge_sign(mi, mc) * w.coeffs[tw.rank_of_mask(mc)];
    }
    return row;
}

} // namespace tame::exterior
