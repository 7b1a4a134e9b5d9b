#pragma once

#include <Eigen/Dense>

#include "tame/fields.hpp"
#include "tame/submanifold.hpp"

namespace tame::verify {

/// Mean curvature vector of M at parameter t: trace of the second fundamental
/// form, computed with 4th-order finite differences of the parametrization
/// and of the metric.
Eigen::VectorXd mean_curvature_at(const tubular::Submanifold& m, const fields::MetricField& g,
                                  const double* t);

/// Mean curvature at every parameter node (param_count x n).
Eigen::MatrixXd mean_curvature(const tubular::Submanifold& m, const fields::MetricField& g);

/// sup over M of | f Htilde - H + (m / 2f) grad_perp f |_g for gtilde = f g,
/// both sides from independent finite-difference stacks.
double check_conformal_mc(const tubular::Submanifold& m, const fields::MetricField& g,
                          const fields::ScalarField& f);

struct GeodesicPath {
    Eigen::MatrixXd points;     // steps+1 x n
    Eigen::MatrixXd velocities; // steps+1 x n
    double energy_drift = 0.0;  // max relative |g(v,v)| deviation
};

/// 4th-order integration of the geodesic equation with Christoffel symbols
/// from centered differences of the metric. Throws if the energy drifts by
/// more than 1e-4 over the run.
GeodesicPath geodesic_shoot(const fields::MetricField& g, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& v0, double time, double step);

/// Shortest-path distance between two disjoint submanifolds on the grid graph
/// (full box stencil) with one local smoothing pass; O(h) accurate.
double geodesic_distance(const fields::MetricField& g, const tubular::Submanifold& a,
                         const tubular::Submanifold& b);

} // namespace tame::verify
