#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tame/comass.hpp"
#include "tame/fields.hpp"
#include "tame/tubular.hpp"

namespace tame::forge {

struct ConstructionParams {
    double margin = 0.1; // strict comass gap enforced off the calibrated set
    comass::OptimizerBudget budget;
    /// Multiplies the final form; 1 for honest constructions. Values != 1 are
    /// negative controls that verification must catch.
    double form_scale = 1.0;
};

struct CalibrationPair {
    enum class Kind { glue, horizontal, conformal, multi };

    fields::FormField phi_hat;
    fields::MetricField g_hat;
    std::vector<tubular::Submanifold> calibrated;
    std::vector<std::shared_ptr<const tubular::TubularAtlas>> atlases;
    Kind construction = Kind::conformal;
    double epsilon = 0.0;
    double alpha = 1.0;
    double margin = 0.1;
    bool idempotent_path = false;
};

/// Phi = phi - d(rho(dist) psi): equals omega* on { dist <= 3 eps / 5 }, phi on
/// { dist >= 4 eps / 5 }, closed, with the period of phi over M preserved.
fields::FormField glue_form(const fields::FormField& phi,
                            const std::shared_ptr<const tubular::TubularAtlas>& atlas);

struct AlphaReport {
    double alpha = 1.0;
    double sup_comass = 0.0;
    double rechecked_sup = 0.0; // sup comass under alpha * g
    double local_bound_min = 0.0; // min over the inner tube of alpha^m |Wbar|_g^2
};

/// alpha = (factor * sup_X |Phi|* / (1 - margin))^{2/m}, rechecked, and when an
/// atlas is supplied the localized bound alpha^m |Wbar|_g^2 > 1 on the inner
/// tube is verified as well.
AlphaReport select_alpha(const fields::FormField& phi, const fields::MetricField& g, double margin,
                         const comass::OptimizerBudget& budget = {}, double factor = 1.0,
                         const std::shared_ptr<const tubular::TubularAtlas>& atlas = nullptr);

/// Horizontal change: metric glued along horizontal and fiber directions so
/// that M is strongly calibrated; g_hat equals the ambient metric outside the
/// tube bit-for-bit.
CalibrationPair horizontal_change(const std::shared_ptr<const tubular::TubularAtlas>& atlas,
                                  const fields::FormField& phi, const ConstructionParams& = {});

/// Conformal change supported in the tube with the same contract.
CalibrationPair conformal_change(const std::shared_ptr<const tubular::TubularAtlas>& atlas,
                                 const fields::FormField& phi, const ConstructionParams& = {});
CalibrationPair conformal_change(const std::shared_ptr<const tubular::TubularAtlas>& atlas,
                                 const fields::MetricField& ambient, const fields::FormField& phi,
                                 const ConstructionParams& = {});

/// One metric, several calibrations: components with independent classes get
/// dual forms with comass <= 1/s away from their own tube, so that every
/// nonzero sign combination is a calibration. Homologically dependent
/// collections satisfying the positivity condition fall back to a single
/// shared calibration for the whole collection.
std::vector<CalibrationPair> multi_calibration(const std::vector<tubular::Submanifold>& collection,
                                               const fields::MetricField& g, double eps,
                                               const ConstructionParams& = {});

/// phi - d(rho_tilde theta): zero on { dist_other <= 4 eps / 5 }, phi outside
/// the other tube, closed. Requires phi exact on the other tube.
fields::FormField eliminate_on_tube(const fields::FormField& phi,
                                    const std::shared_ptr<const tubular::TubularAtlas>& other);

/// (s/Vol)^{2/m} pullback of g_M along horizontal directions, ambient metric
/// along the fibers; the tube metric under which omega* has comass one.
fields::MetricField bar_metric(const std::shared_ptr<const tubular::TubularAtlas>& atlas, double s);

using NormalField = std::function<Eigen::VectorXd(const double* t)>;

struct MeanCurvaturePrescription {
    fields::ScalarField factor; // F with mean curvature of M under F*g equal to xi
    double min_factor = 1.0;
};

/// Conformal factor prescribing the mean curvature vector of M:
/// F = 1 - rho(dist) (2/m) < xi - H_g , y >_g, 1 on M and outside the tube.
/// Throws "shrink epsilon" if F fails to stay positive.
MeanCurvaturePrescription prescribe_mean_curvature(const tubular::Submanifold& m,
                                                   const fields::MetricField& g,
                                                   const NormalField& xi, double eps);

struct MultiLevelResult {
    std::vector<CalibrationPair> pairs; // one per level, highest dimension first
    fields::MetricField g_hat;          // the shared final metric
};

/// Mixed-dimension collections: levels processed highest dimension first, each
/// level's forms eliminated over the other levels' tubes, each level built by
/// a conformal change under the metric produced so far.
MultiLevelResult build_multilevel(const std::vector<std::vector<tubular::Submanifold>>& levels,
                                  const fields::MetricField& g, double eps,
                                  const ConstructionParams& = {});

} // namespace tame::forge
