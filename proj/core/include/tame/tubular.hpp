#pragma once

#include <memory>
#include <string>

#include "tame/bump.hpp"
#include "tame/fields.hpp"
#include "tame/submanifold.hpp"

namespace tame::tubular {

struct AtlasOptions {
    /// Angle between fibers and the tangent space of M. pi/2 is the honest
    /// perpendicular disc bundle; anything else is a deliberately broken
    /// bundle used as a negative control (only supported for curves under
    /// flat metrics).
    double shear_theta = 1.5707963267948966;
    /// Dense parameter samples for the nearest-point search; 0 picks a default.
    int search_samples = 0;
    /// Use the grid fast-marching path even on flat charts.
    bool force_fast_marching = false;
};

/// Epsilon disc-bundle data around a submanifold: distance to M, nearest
/// parameter, and the fiber/horizontal splitting, as grid fields plus a
/// pointwise evaluator. On flat charts the evaluator resolves the nearest
/// point with a Newton solve on the analytic parametrization; under non-flat
/// reference metrics the grid data comes from fast marching with projection
/// tracking and the pointwise evaluator degrades to O(dist) accuracy.
class TubularAtlas {
  public:
    Submanifold base;
    fields::MetricField metric;
    double epsilon = 0.0;
    double shear_theta = 1.5707963267948966;
    bool flat = false;
    bool fast_marched = false;
    std::string splitting_note;

    fields::ScalarField dist;
    Eigen::MatrixXd proj;       // node_count x m, valid where dist < epsilon
    Eigen::MatrixXd fiber_proj; // node_count x n*n, valid where dist < epsilon

    struct Local {
        bool inside = false;   // dist < epsilon
        double dist = 0.0;
        Eigen::VectorXd t;     // nearest parameter
        Eigen::VectorXd foot;  // base point
        Eigen::VectorXd y;     // minimal displacement foot -> p
        Eigen::MatrixXd dtdp;  // m x n differential of the nearest-parameter map
        Eigen::MatrixXd tangent;          // n x m frame at the foot
        Eigen::MatrixXd fiber_projector;  // n x n projector onto fiber directions
        double focal_det = 1.0;
    };

    Local locate(const Eigen::VectorXd& p) const;

    /// Distance at the nearest grid node; cheap reject for evaluators.
    double grid_dist_hint(const Eigen::VectorXd& p) const;
    bool well_outside(const Eigen::VectorXd& p) const {
        return grid_dist_hint(p) > epsilon + 2.0 * chart().max_spacing();
    }

    const fields::Chart& chart() const { return metric.chart; }

    // construction internals, exposed for the builder and diagnostics
    Local locate_newton(const Eigen::VectorXd& p, const double* t_start) const;
    Local locate_gridded(const Eigen::VectorXd& p) const;
    void fill_local_frames(Local& loc) const;
    int nearest_sample(const Eigen::VectorXd& p) const;

    Eigen::MatrixXd sample_pts; // search samples, image points (rows)
    Eigen::MatrixXd sample_ts;  // search samples, parameters (rows)
    int search_per_axis = 0;
};

std::shared_ptr<TubularAtlas> build_tubular(const Submanifold& m, const fields::MetricField& g,
                                            double eps, const AtlasOptions& options = {});

/// omega* = s * (pullback of M's volume form through the projection) / Vol_g(M)
/// on the tube, zero outside. Throws if s <= 0.
fields::FormField pullback_volume_form(const std::shared_ptr<const TubularAtlas>& atlas, double s);

/// Primitive of a closed form on the tube with vanishing period over M:
/// psi with d psi = eta from the fiberwise radial homotopy operator plus a
/// spectral base correction. Throws "class obstruction" on a nonzero period.
fields::FormField homotopy_solve(const std::shared_ptr<const TubularAtlas>& atlas,
                                 const fields::FormField& eta);

/// 4th-order finite-difference exterior derivative of a pointwise form
/// evaluator; the closedness oracle for constructed fields.
exterior::MultiCovector pointwise_d(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& form,
                                    int dim, int degree, const Eigen::VectorXd& x, double step);

} // namespace tame::tubular
