#pragma once

#include <Eigen/Dense>

#include "tame/multiindex.hpp"

namespace tame::exterior {

/// Pointwise value g_x of a metric: a symmetric positive definite Gram matrix.
struct PointMetric {
    int dim = 0;
    Eigen::MatrixXd gram;

    static PointMetric identity(int n) { return {n, Eigen::MatrixXd::Identity(n, n)}; }
    static PointMetric scaled(int n, double f) { return {n, f * Eigen::MatrixXd::Identity(n, n)}; }

    /// Throws unless gram is symmetric to 1e-12 and positive definite.
    void validate() const;
};

/// Pointwise value of an m-form: coefficients over increasing multi-indices,
/// lexicographic order, length C(n, m).
struct MultiCovector {
    int dim = 0;
    int degree = 0;
    Eigen::VectorXd coeffs;

    static MultiCovector zero(int n, int m);
    /// dx^{I} for the increasing tuple with the given rank.
    static MultiCovector basis(int n, int m, int rank);

    MultiCovector& operator+=(const MultiCovector& o);
    MultiCovector& operator*=(double c);
    friend MultiCovector operator+(MultiCovector a, const MultiCovector& b) { return a += b; }
    friend MultiCovector operator*(double c, MultiCovector a) { return a *= c; }
};

/// Weighted spanning frame of an oriented m-plane: t * v_1 ^ ... ^ v_m.
struct SimpleFrame {
    int dim = 0;
    int degree = 0;
    Eigen::MatrixXd vectors; // n x m, columns span the plane
    double weight = 1.0;
};

/// Wedge product; rejects degree overflow p + q > n.
MultiCovector wedge(const MultiCovector& a, const MultiCovector& b);

/// phi(V) = weight * sum_I phi_I * det(V[I, :]).
double evaluate(const MultiCovector& phi, const SimpleFrame& v);

/// d evaluate / d V.vectors at fixed weight (n x m). Used by the comass ascent.
Eigen::MatrixXd evaluate_gradient(const MultiCovector& phi, const SimpleFrame& v);

/// |weight| * sqrt(det(V^T g V)); 0 for degenerate frames.
double simple_norm(const SimpleFrame& v, const PointMetric& g);

/// Gram matrix induced by g on degree-m multivectors: entries det(g[I, J]).
Eigen::MatrixXd induced_gram(const PointMetric& g, int m);

/// Pairing coefficients of the 1-covector (x -> x wedge w) for w of degree n-1,
/// i.e. the row r with r . x = coefficient of x ^ w in Lambda^n.
Eigen::RowVectorXd top_pairing_row(const MultiCovector& w);

} // namespace tame::exterior
