#pragma once

#include <cmath>

#include "tame/comass.hpp"
#include "test_helpers.hpp"

// Comass-law checks shared by the unit tests and the acceptance suite. Each
// law is checked through cross-seeded ascents so that the inequality asserted
// is exactly the pointwise inequality behind it, not an artifact of one ascent
// finding a better basin than the other.
namespace testutil {

using tame::comass::comass_point_seeded;
using tame::comass::OptimizerBudget;
using tame::exterior::MultiCovector;
using tame::exterior::PointMetric;

struct LawCase {
    int n;
    int m;
    MultiCovector phi;
    PointMetric g;
};

inline LawCase random_law_case(tame::Rng& rng, int max_n = 5) {
    const int n = 2 + static_cast<int>(rng.uniform() * (max_n - 1));
    const int m = 1 + static_cast<int>(rng.uniform() * n);
    return {n, m, random_covector(rng, n, m), random_spd(rng, n)};
}

/// |comass(phi, f g) - f^{-m/2} comass(phi, g)| relative error.
inline double scaling_law_error(const LawCase& c, double f, const OptimizerBudget& budget) {
    const auto r1 = comass_point_seeded(c.phi, c.g, budget, {});
    const PointMetric fg{c.n, f * c.g.gram};
    const auto r2 = comass_point_seeded(c.phi, fg, budget, {r1.maximizer.vectors});
    const auto r1b = comass_point_seeded(c.phi, c.g, budget, {r2.maximizer.vectors});
    const double v1 = std::max(r1.value, r1b.value);
    const double expected = std::pow(f, -0.5 * c.m) * v1;
    return std::abs(r2.value - expected) / std::max(1e-12, expected);
}

/// comass(phi, g') - comass(phi, g) for g' >= g; nonpositive up to tolerance.
inline double monotonicity_excess(const LawCase& c, tame::Rng& rng, const OptimizerBudget& budget) {
    const Eigen::MatrixXd a = random_gaussian(rng, c.n, c.n);
    const PointMetric gbig{c.n, c.g.gram + a.transpose() * a};
    const auto rbig = comass_point_seeded(c.phi, gbig, budget, {});
    const auto rsmall = comass_point_seeded(c.phi, c.g, budget, {rbig.maximizer.vectors});
    return rbig.value - rsmall.value;
}

/// comass(phi, a g1 + b g2) - CCGP bound; nonpositive up to tolerance.
inline double gluing_excess(const LawCase& c, tame::Rng& rng, const OptimizerBudget& budget) {
    const PointMetric g2 = random_spd(rng, c.n);
    const double a = std::exp(rng.normal());
    const double b = std::exp(rng.normal());
    const PointMetric glued{c.n, a * c.g.gram + b * g2.gram};
    const auto rg = comass_point_seeded(c.phi, glued, budget, {});
    const auto c1 = comass_point_seeded(c.phi, c.g, budget, {rg.maximizer.vectors});
    const auto c2 = comass_point_seeded(c.phi, g2, budget, {rg.maximizer.vectors});
    if (c1.value <= 0.0 || c2.value <= 0.0) return 0.0;
    const double bound = 1.0 / std::sqrt(std::pow(a, c.m) / (c1.value * c1.value) +
                                         std::pow(b, c.m) / (c2.value * c2.value));
    return rg.value - bound;
}

} // namespace testutil
