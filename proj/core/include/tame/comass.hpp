#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tame/exterior.hpp"
#include "tame/fields.hpp"

namespace tame::comass {

struct OptimizerBudget {
    int starts = 32;
    int max_iters = 300;
    double grad_tol = 1e-8;
    std::uint64_t seed = 0x7a3e5eedULL;
    /// When > 0, each ascent result is cross-checked against a sampling oracle
    /// of this size and flagged on disagreement > 1e-4.
    std::int64_t oracle_check_samples = 0;
};

enum class Method { exact_deg0, exact_deg1, exact_hodge, exact_top, ascent };

std::string method_name(Method m);

struct ComassResult {
    double value = 0.0;
    exterior::SimpleFrame maximizer; // g-orthonormal columns, weight 1
    Method method = Method::ascent;
    int starts_used = 0;
    double grad_norm = 0.0;
    bool flagged = false;
    std::string note;
};

/// Pointwise comass: max of phi over unit simple m-vectors under g.
/// Exact for m in {0, 1, n-1, n}; multi-start projected ascent otherwise.
ComassResult comass_point(const exterior::MultiCovector& phi, const exterior::PointMetric& g,
                          const OptimizerBudget& budget = {});

/// Ascent from one supplied start frame (exposed for law checks that seed
/// maximizers across metrics). Frame columns need not be g-orthonormal.
ComassResult comass_point_seeded(const exterior::MultiCovector& phi, const exterior::PointMetric& g,
                                 const OptimizerBudget& budget,
                                 const std::vector<Eigen::MatrixXd>& extra_starts);

/// Monte-Carlo lower bound: max of phi over `samples` random g-orthonormal
/// frames drawn from one sequential stream, so results are monotone in the
/// sample count for a fixed seed.
double oracle_comass(const exterior::MultiCovector& phi, const exterior::PointMetric& g,
                     std::int64_t samples, std::uint64_t seed);

struct FieldComass {
    fields::ScalarField values;
    double sup = 0.0;
    std::size_t arg_sup = 0;
    std::vector<std::size_t> flagged;
};

/// Per-node comass with a deterministic node-order reduction for the supremum.
FieldComass comass_field(const fields::FormField& phi, const fields::MetricField& g,
                         const OptimizerBudget& budget = {});

/// Comass at an arbitrary point through the fields' evaluators.
ComassResult comass_at(const fields::FormField& phi, const fields::MetricField& g,
                       const Eigen::VectorXd& x, const OptimizerBudget& budget = {});

} // namespace tame::comass
