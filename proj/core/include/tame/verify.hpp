#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tame/forge.hpp"
#include "tame/geometry.hpp"

namespace tame::verify {

/// Weighted closed chain: a current of integration over parametrized
/// submanifolds.
struct Cycle {
    struct Component {
        tubular::Submanifold m;
        double weight = 1.0;
    };
    std::vector<Component> components;
    int degree = 0;

    static Cycle single(const tubular::Submanifold& m, double weight = 1.0) {
        Cycle c;
        c.degree = m.dim;
        c.components.push_back({m, weight});
        return c;
    }
};

/// Mass of the cycle: sum of |weight| times Riemannian volume per component.
double mass(const Cycle& t, const fields::MetricField& g);

/// T(Phi): weighted sum of the pullback integrals.
double pairing(const Cycle& t, const fields::FormField& phi);

struct Tolerances {
    double closedness = 1e-6;
    double comass = 1e-6;
    double mass_eq = 1e-6;
    double curvature = 5e-3;

    Tolerances scaled(double s) const {
        return {closedness * s, comass * s, mass_eq * s, curvature * s};
    }
};

struct CheckEntry {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct VerificationReport {
    double closedness_residual = 0.0;
    double sup_comass = 0.0;
    std::vector<double> sup_location;
    double comass_on_m_min = 0.0;
    double comass_on_m_max = 0.0;
    double volume_form_residual = 0.0;
    std::vector<std::pair<double, double>> strong_support; // (delta, c(delta))
    std::vector<CheckEntry> checks;
    std::uint64_t seed = 0;
    int budget_starts = 0;

    bool passed() const;
    std::string to_json(int indent = 2) const;
};

/// Full calibration certificate for a constructed pair: closedness, sup
/// comass with location, comass and volume-form match along the calibrated
/// set, and the strong-support profile.
VerificationReport verify_calibration(const forge::CalibrationPair& pair,
                                      const Tolerances& tol = {});

struct SweepResult {
    bool passed = false;
    double base_mass = 0.0;
    double min_margin = 0.0; // min over competitors of mass(T') - mass(T)
    int violations = 0;
    std::vector<CheckEntry> checks;
    Eigen::MatrixXd worst_competitor; // rows: (parameter..., coordinates...)
    std::uint64_t seed = 0;
    int competitors = 0;

    std::string to_json(int indent = 2) const;
};

/// Homologous competitor search: transverse truncated Fourier perturbations of
/// each component; asserts the calibrated base minimizes mass and checks the
/// lower-bound chain mass(T') >= T'(Phi) == T(Phi) == mass(T).
SweepResult competitor_sweep(const forge::CalibrationPair& pair, const Cycle& base,
                             int n_competitors, std::uint64_t seed, const Tolerances& tol = {});

} // namespace tame::verify
