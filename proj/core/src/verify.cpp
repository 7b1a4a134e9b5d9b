#include "tame/verify.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "tame/parallel.hpp"
#include "tame/rng.hpp"

namespace tame::verify {

using fields::Chart;
using fields::FormField;
using fields::MetricField;
using forge::CalibrationPair;
using tubular::Submanifold;
using tubular::TubularAtlas;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

nlohmann::ordered_json check_to_json(const CheckEntry& e) {
    nlohmann::ordered_json j;
    j["name"] = e.name;
    j["passed"] = e.passed;
    j["value"] = e.value;
    j["tolerance"] = e.tolerance;
    if (!e.detail.empty()) j["detail"] = e.detail;
    return j;
}

double dist_to_calibrated(const CalibrationPair& pair, std::size_t node) {
    double d = std::numeric_limits<double>::infinity();
    const std::size_t ncal = pair.calibrated.size();
    for (std::size_t i = 0; i < std::min(ncal, pair.atlases.size()); ++i)
        d = std::min(d, pair.atlases[i]->dist.values[static_cast<Eigen::Index>(node)]);
    return d;
}

} // namespace

double mass(const Cycle& t, const MetricField& g) {
    double acc = 0.0;
    for (const auto& c : t.components) acc += std::abs(c.weight) * fields::volume(c.m, g);
    return acc;
}

double pairing(const Cycle& t, const FormField& phi) {
    double acc = 0.0;
    for (const auto& c : t.components) acc += c.weight * fields::integrate_form(phi, c.m);
    return acc;
}

bool VerificationReport::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

std::string VerificationReport::to_json(int indent) const {
    nlohmann::ordered_json j;
    j["closedness_residual"] = closedness_residual;
    j["sup_comass"] = sup_comass;
    j["sup_location"] = sup_location;
    j["comass_on_m"] = {{"min", comass_on_m_min}, {"max", comass_on_m_max}};
    j["volume_form_residual"] = volume_form_residual;
    nlohmann::ordered_json ss = nlohmann::ordered_json::array();
    for (const auto& [delta, c] : strong_support) ss.push_back({{"delta", delta}, {"c", c}});
    j["strong_support"] = ss;
    j["seed"] = seed;
    j["budget_starts"] = budget_starts;
    nlohmann::ordered_json cj = nlohmann::ordered_json::array();
    for (const auto& c : checks) cj.push_back(check_to_json(c));
    j["checks"] = cj;
    j["passed"] = passed();
    return j.dump(indent);
}

VerificationReport verify_calibration(const CalibrationPair& pair, const Tolerances& tol) {
    const Chart& chart = pair.phi_hat.chart;
    const int n = chart.dim;
    const int m = pair.phi_hat.degree;
    VerificationReport rep;
    rep.seed = 0x76e21fULL;
    comass::OptimizerBudget budget;
    rep.budget_starts = budget.starts;

    // closedness: pointwise FD exterior derivative at seeded points inside
    // every atlas region plus a background sample
    {
        auto eval = pair.phi_hat.analytic
                        ? pair.phi_hat.analytic
                        : [&pair](const Eigen::VectorXd& x) { return pair.phi_hat.interpolate(x); };
        std::vector<Eigen::VectorXd> points;
        Rng rng(rep.seed);
        for (const auto& atlas : pair.atlases) {
            int kept = 0;
            for (int tries = 0; tries < 20000 && kept < 200; ++tries) {
                Eigen::VectorXd p(n);
                for (int a = 0; a < n; ++a) p[a] = rng.uniform(0.0, chart.extent[a]);
                if (atlas->grid_dist_hint(p) > 1.3 * atlas->epsilon) continue;
                points.push_back(p);
                ++kept;
            }
        }
        for (int k = 0; k < 150; ++k) {
            Eigen::VectorXd p(n);
            for (int a = 0; a < n; ++a) p[a] = rng.uniform(0.0, chart.extent[a]);
            points.push_back(p);
        }
        std::vector<double> resid(points.size());
        parallel_for(points.size(), [&](std::size_t i) {
            resid[i] = tubular::pointwise_d(eval, n, m, points[i], 2e-6).coeffs.cwiseAbs().maxCoeff();
        });
        rep.closedness_residual = resid.empty() ? 0.0 : *std::max_element(resid.begin(), resid.end());
        rep.checks.push_back({"closedness", rep.closedness_residual <= tol.closedness,
                              rep.closedness_residual, tol.closedness, ""});
    }

    // perpendicularity of the fibers: the unit-scale pullback of each
    // component's volume form must have comass one along the component under
    // the reference metric (sheared bundles report 1 / prod sin theta_i)
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < std::min(pair.calibrated.size(), pair.atlases.size()); ++i) {
            const auto& atlas = pair.atlases[i];
            const auto& comp = pair.calibrated[i];
            for (int k = 0; k < 32; ++k) {
                double t[4] = {k / 32.0, 0, 0, 0};
                if (comp.dim >= 2) {
                    t[0] = (k % 8) / 8.0;
                    t[1] = (k / 8) / 8.0;
                }
                const auto loc = atlas->locate(comp.point(t));
                const Eigen::MatrixXd gram = atlas->metric.gram_at(loc.foot);
                const Eigen::MatrixXd hm = loc.tangent.transpose() * gram * loc.tangent;
                const Eigen::MatrixXd dual = loc.dtdp * gram.inverse() * loc.dtdp.transpose();
                const double value = std::sqrt(std::max(0.0, hm.determinant() * dual.determinant()));
                worst = std::max(worst, std::abs(value - 1.0));
            }
        }
        rep.checks.push_back({"fiber_perpendicularity", worst <= tol.comass, worst, tol.comass,
                              "comass of the unit pullback along the calibrated set"});
    }

    // sup comass over the grid (reused by the strong-support profile)
    const auto fc = comass::comass_field(pair.phi_hat, pair.g_hat, budget);
    {
        rep.sup_comass = fc.sup;
        const Eigen::VectorXd loc = chart.point(fc.arg_sup);
        rep.sup_location.assign(loc.data(), loc.data() + n);
        const bool ok = fc.flagged.empty() && fc.sup <= 1.0 + tol.comass;
        rep.checks.push_back({"sup_comass", ok, fc.sup, 1.0 + tol.comass,
                              fc.flagged.empty() ? ""
                                                 : std::to_string(fc.flagged.size()) +
                                                       " flagged comass nodes"});
    }

    // comass and volume-form match along each calibrated component
    {
        double cmin = std::numeric_limits<double>::infinity();
        double cmax = -std::numeric_limits<double>::infinity();
        double vres = 0.0;
        for (const auto& comp : pair.calibrated) {
            const int samples = 64;
            for (int k = 0; k < samples; ++k) {
                double t[4] = {0, 0, 0, 0};
                t[0] = static_cast<double>(k) / samples;
                if (comp.dim >= 2) {
                    t[0] = static_cast<double>(k % 8) / 8.0;
                    t[1] = static_cast<double>(k / 8) / 8.0;
                }
                Eigen::VectorXd x;
                Eigen::MatrixXd jac;
                comp.frame(t, x, jac);
                const auto r = comass::comass_at(pair.phi_hat, pair.g_hat, x);
                cmin = std::min(cmin, r.value);
                cmax = std::max(cmax, r.value);

                exterior::MultiCovector phix{n, m,
                                             pair.phi_hat.coeffs_at(chart.wrap_point(x))};
                const double lhs =
                    comp.orientation * exterior::evaluate(phix, {n, m, jac, 1.0});
                const Eigen::MatrixXd gm = pair.g_hat.gram_at(chart.wrap_point(x));
                const double det = (jac.transpose() * gm * jac).determinant();
                const double rhs = det > 0.0 ? std::sqrt(det) : 0.0;
                vres = std::max(vres, std::abs(lhs - rhs) / std::max(1.0, rhs));
            }
        }
        rep.comass_on_m_min = cmin;
        rep.comass_on_m_max = cmax;
        rep.volume_form_residual = vres;
        rep.checks.push_back({"comass_on_calibrated_set",
                              cmin >= 1.0 - tol.comass && cmax <= 1.0 + tol.comass,
                              std::max(std::abs(cmin - 1.0), std::abs(cmax - 1.0)), tol.comass, ""});
        rep.checks.push_back({"volume_form_match", vres <= tol.comass, vres, tol.comass, ""});
    }

    // strong support profile c(delta) over the grid
    {
        const double eps = pair.epsilon > 0.0 ? pair.epsilon : 0.1;
        for (const double delta : {eps / 4.0, eps / 2.0}) {
            double off_sup = 0.0;
            for (std::size_t node = 0; node < chart.node_count(); ++node) {
                if (dist_to_calibrated(pair, node) >= delta)
                    off_sup = std::max(off_sup,
                                       fc.values.values[static_cast<Eigen::Index>(node)]);
            }
            rep.strong_support.push_back({delta, 1.0 - off_sup});
        }
        const double c_half = rep.strong_support.back().second;
        // constructed pairs must be strictly calibrated only on M; a pair that
        // is calibrated everywhere (c == 0) is legitimate but not strong
        const bool required = !pair.idempotent_path;
        const bool ok = required ? c_half > 0.0 : c_half >= -tol.comass;
        rep.checks.push_back({"strong_support", ok, c_half, 0.0,
                              required ? "strict gap required off the calibrated set"
                                       : "informative only for this pair"});
    }

    return rep;
}

std::string SweepResult::to_json(int indent) const {
    nlohmann::ordered_json j;
    j["passed"] = passed;
    j["base_mass"] = base_mass;
    j["min_margin"] = min_margin;
    j["violations"] = violations;
    j["competitors"] = competitors;
    j["seed"] = seed;
    nlohmann::ordered_json cj = nlohmann::ordered_json::array();
    for (const auto& c : checks) cj.push_back(check_to_json(c));
    j["checks"] = cj;
    return j.dump(indent);
}

namespace {

/// Axes with zero winding over every parameter direction can be perturbed
/// without leaving the homology class.
std::vector<int> transverse_axes(const Submanifold& m) {
    std::vector<int> axes;
    const int n = m.ambient_dim;
    for (int a = 0; a < n; ++a) {
        bool winds = false;
        for (int b = 0; b < m.dim && !winds; ++b) {
            // winding of coordinate a along parameter axis b
            double t0[4] = {0.13, 0.29, 0.41, 0.0};
            double acc = 0.0;
            const int steps = 64;
            Eigen::VectorXd prev = m.point(t0);
            for (int k = 1; k <= steps; ++k) {
                double t[4];
                std::copy(t0, t0 + 4, t);
                t[b] = t0[b] + static_cast<double>(k) / steps;
                t[b] -= std::floor(t[b]);
                const Eigen::VectorXd cur = m.point(t);
                acc += cur[a] - prev[a] -
                       std::round(cur[a] - prev[a]); // wrapped increments on the unit torus
                prev = cur;
            }
            if (std::abs(acc) > 0.5) winds = true;
        }
        if (!winds) axes.push_back(a);
    }
    return axes;
}

Submanifold perturbed_component(const Submanifold& base, const std::vector<int>& axes,
                                double amplitude, Rng& rng) {
    struct Mode {
        int axis;
        int k1, k2;
        double cosc, sinc;
    };
    auto modes = std::make_shared<std::vector<Mode>>();
    for (int axis : axes) {
        for (int k = 1; k <= 8; ++k) {
            Mode mo;
            mo.axis = axis;
            mo.k1 = base.dim == 1 ? k : 1 + (k - 1) % 3;
            mo.k2 = base.dim == 1 ? 0 : 1 + (k - 1) / 3;
            const double decay = 1.0 / (1.0 + k);
            mo.cosc = rng.normal() * decay;
            mo.sinc = rng.normal() * decay;
            modes->push_back(mo);
        }
    }
    // normalize the sup of the perturbation to the requested amplitude
    double sup = 0.0;
    for (int s = 0; s < 256; ++s) {
        double t[4] = {static_cast<double>(s % 16) / 16.0, static_cast<double>(s / 16) / 16.0, 0, 0};
        Eigen::VectorXd p = Eigen::VectorXd::Zero(base.ambient_dim);
        for (const auto& mo : *modes) {
            const double phase = kTau * (mo.k1 * t[0] + mo.k2 * t[1]);
            p[mo.axis] += mo.cosc * std::cos(phase) + mo.sinc * std::sin(phase);
        }
        sup = std::max(sup, p.cwiseAbs().maxCoeff());
    }
    const double scale = sup > 0.0 ? amplitude / sup : 0.0;
    for (auto& mo : *modes) {
        mo.cosc *= scale;
        mo.sinc *= scale;
    }

    Submanifold out = base;
    out.name = base.name + "_competitor";
    // the glued fields are C^2 at the profile joints, so competitor quadrature
    // needs a denser parameter grid than the base to hit 1e-6 chain tolerances
    if (base.dim == 1) out.param_res[0] = std::max(base.param_res[0], 2048);
    else
        for (int a = 0; a < base.dim; ++a) out.param_res[a] = std::max(base.param_res[a], 128);
    auto inner = base.map;
    const int dim = base.dim;
    out.map = [inner, modes, dim](const double* t, Jet* o) {
        inner(t, o);
        Jet tj[4];
        for (int a = 0; a < dim; ++a) tj[a] = Jet::variable(t[a], a, dim);
        for (const auto& mo : *modes) {
            Jet phase = tj[0] * (kTau * mo.k1);
            if (dim >= 2) phase = phase + tj[1] * (kTau * mo.k2);
            o[mo.axis] = o[mo.axis] + cos(phase) * mo.cosc + sin(phase) * mo.sinc;
        }
    };
    return out;
}

} // namespace

SweepResult competitor_sweep(const CalibrationPair& pair, const Cycle& base, int n_competitors,
                             std::uint64_t seed, const Tolerances& tol) {
    SweepResult out;
    out.seed = seed;
    out.competitors = n_competitors;

    // the base must be calibrated before any minimality claim makes sense
    const VerificationReport cert = verify_calibration(pair, tol);
    const double base_mass = mass(base, pair.g_hat);
    const double base_pairing = pairing(base, pair.phi_hat);
    out.base_mass = base_mass;
    out.checks.push_back({"base_calibrated", cert.passed(), cert.sup_comass, 1.0 + tol.comass,
                          "verify_calibration on the base pair"});
    // lower-bound certificate: T(Phi) == mass(T) needs comass <= 1
    out.checks.push_back({"pairing_le_mass", base_pairing <= base_mass + tol.mass_eq, base_pairing,
                          base_mass + tol.mass_eq,
                          "T(Phi) <= M(T) sup|Phi|*; fails when the pair is tampered"});
    out.checks.push_back({"pairing_equals_mass",
                          std::abs(base_pairing - base_mass) <= tol.mass_eq,
                          std::abs(base_pairing - base_mass), tol.mass_eq, ""});
    if (!cert.passed() || base_pairing > base_mass + tol.mass_eq) {
        out.passed = false;
        out.min_margin = 0.0;
        return out;
    }

    std::vector<std::vector<int>> axes;
    for (const auto& comp : base.components) axes.push_back(transverse_axes(comp.m));

    const double eps = pair.epsilon > 0.0 ? pair.epsilon : 0.05;
    const double h = pair.phi_hat.chart.max_spacing();

    struct CompetitorOutcome {
        double mass = 0.0;
        double pairing = 0.0;
        double hausdorff = 0.0;
        Eigen::MatrixXd samples;
    };
    std::vector<CompetitorOutcome> results(n_competitors);

    parallel_for(static_cast<std::size_t>(n_competitors), [&](std::size_t i) {
        Rng rng(Rng::derive(seed, i));
        Cycle comp;
        comp.degree = base.degree;
        for (std::size_t c = 0; c < base.components.size(); ++c) {
            const double amplitude = rng.uniform(0.05 * eps, eps);
            comp.components.push_back(
                {perturbed_component(base.components[c].m, axes[c], amplitude, rng),
                 base.components[c].weight});
        }
        CompetitorOutcome& r = results[i];
        r.mass = mass(comp, pair.g_hat);
        r.pairing = pairing(comp, pair.phi_hat);

        // distance of the competitor to the base (parameter Hausdorff proxy)
        double hd = 0.0;
        for (std::size_t c = 0; c < comp.components.size(); ++c) {
            if (c >= pair.atlases.size()) break;
            const auto& atlas = pair.atlases[c];
            const auto& sm = comp.components[c].m;
            for (int k = 0; k < 64; ++k) {
                double t[4] = {k / 64.0, 0, 0, 0};
                if (sm.dim >= 2) {
                    t[0] = (k % 8) / 8.0;
                    t[1] = (k / 8) / 8.0;
                }
                hd = std::max(hd, atlas->locate(sm.point(t)).dist);
            }
        }
        r.hausdorff = hd;

        // sample table (parameter, coordinates) of the first component
        const auto& sm = comp.components[0].m;
        const int rows = 128;
        r.samples.resize(rows, 1 + sm.ambient_dim);
        for (int k = 0; k < rows; ++k) {
            double t[4] = {static_cast<double>(k) / rows, 0, 0, 0};
            r.samples(k, 0) = t[0];
            r.samples.row(k).tail(sm.ambient_dim) = sm.point(t).transpose();
        }
    });

    double min_margin = std::numeric_limits<double>::infinity();
    double chain_violation = 0.0;
    double uniqueness_violation = 0.0;
    int violations = 0;
    int worst = -1;
    for (int i = 0; i < n_competitors; ++i) {
        const auto& r = results[i];
        const double margin = r.mass - base_mass;
        if (margin < min_margin) {
            min_margin = margin;
            worst = i;
        }
        if (margin < -tol.mass_eq) ++violations;
        // mass(T') >= T'(Phi) and T'(Phi) == T(Phi) by closedness
        chain_violation = std::max(chain_violation, r.pairing - r.mass);
        chain_violation = std::max(chain_violation, std::abs(r.pairing - base_pairing));
        if (margin <= 1e-4 && r.hausdorff > 3.0 * h)
            uniqueness_violation = std::max(uniqueness_violation, r.hausdorff);
    }
    out.min_margin = min_margin;
    out.violations = violations;
    if (worst >= 0) out.worst_competitor = results[worst].samples;
    out.checks.push_back({"mass_minimality", violations == 0, min_margin, -tol.mass_eq,
                          std::to_string(violations) + " violations"});
    out.checks.push_back({"lower_bound_chain", chain_violation <= tol.mass_eq, chain_violation,
                          tol.mass_eq, "mass(T') >= T'(Phi) == T(Phi)"});
    out.checks.push_back({"argmin_uniqueness", uniqueness_violation == 0.0, uniqueness_violation,
                          3.0 * h, "near-minimal competitors coincide with the base"});

    out.passed = true;
    for (const auto& c : out.checks) out.passed = out.passed && c.passed;
    return out;
}

} // namespace tame::verify
