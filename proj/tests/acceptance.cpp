// Acceptance suite: every release criterion runs at its pinned tolerance and
// prints one [PASS]/[FAIL] line. Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "law_checks.hpp"
#include "tame/comass.hpp"
#include "tame/forge.hpp"
#include "tame/geometry.hpp"
#include "tame/parallel.hpp"
#include "tame/scenario.hpp"
#include "tame/verify.hpp"
#include "test_helpers.hpp"

using namespace tame;
using namespace tame::fields;
using tubular::Submanifold;
using tubular::build_tubular;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

struct Criterion {
    int id;
    std::string summary;
    bool (*run)(std::string& detail);
};

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Submanifold circle_graph(const std::string& yexpr, int res, const std::string& name = "M") {
    return Submanifold::from_expressions(2, 1, {"t1", yexpr}, {res, 0, 0, 0}, 1.0, name);
}

FormField constant_form(const Chart& chart, const Eigen::VectorXd& coeffs, int degree) {
    FormField f;
    f.chart = chart;
    f.degree = degree;
    f.values = coeffs.transpose().replicate(static_cast<Eigen::Index>(chart.node_count()), 1);
    f.analytic = [coeffs](const Eigen::VectorXd&) { return coeffs; };
    return f;
}

std::string scenario_path(const std::string& name) {
    return std::string(TAME_SCENARIO_DIR) + "/" + name;
}

// ---------------------------------------------------------------------------
// criterion 1: comass laws
// ---------------------------------------------------------------------------

bool criterion1(std::string& detail) {
    const double t0 = now_seconds();
    Rng rng(0xC1);
    comass::OptimizerBudget budget;
    budget.starts = 10;
    budget.max_iters = 200;

    double worst_scaling = 0.0;
    for (int i = 0; i < 200; ++i) {
        auto c = testutil::random_law_case(rng);
        const double f = std::exp(rng.normal());
        worst_scaling = std::max(worst_scaling, testutil::scaling_law_error(c, f, budget));
    }
    double worst_mono = 0.0;
    for (int i = 0; i < 200; ++i) {
        auto c = testutil::random_law_case(rng);
        worst_mono = std::max(worst_mono, testutil::monotonicity_excess(c, rng, budget));
    }
    double worst_glue = 0.0;
    for (int i = 0; i < 500; ++i) {
        auto c = testutil::random_law_case(rng);
        worst_glue = std::max(worst_glue, testutil::gluing_excess(c, rng, budget));
    }
    const double elapsed = now_seconds() - t0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "scaling %.2e (tol 1e-6), monotonicity %.2e, gluing %.2e, %.0f s (budget 60 s)",
                  worst_scaling, worst_mono, worst_glue, elapsed);
    detail = buf;
    return worst_scaling <= 1e-6 && worst_mono <= 1e-6 && worst_glue <= 1e-6 && elapsed <= 60.0;
}

// ---------------------------------------------------------------------------
// criterion 2: ascent engine against a sampling + naive-polish oracle
// ---------------------------------------------------------------------------

// test-side polish written independently of the production optimizer:
// tangent-projected gradient with Gram-Schmidt retraction and a fresh
// Armijo search per iteration
double naive_polish(const exterior::MultiCovector& phi, const exterior::PointMetric& g,
                    Eigen::MatrixXd v) {
    const int m = phi.degree;
    const Eigen::MatrixXd ginv = g.gram.inverse();
    auto orthonormalize = [&](Eigen::MatrixXd w) {
        for (int c = 0; c < m; ++c) {
            for (int k = 0; k < c; ++k)
                w.col(c) -= (w.col(k).dot(g.gram * w.col(c))) * w.col(k);
            w.col(c) /= std::sqrt(w.col(c).dot(g.gram * w.col(c)));
        }
        return w;
    };
    v = orthonormalize(v);
    double f = exterior::evaluate(phi, {phi.dim, m, v, 1.0});
    if (f < 0.0) {
        v.col(0) = -v.col(0);
        f = -f;
    }
    for (int iter = 0; iter < 2000; ++iter) {
        const Eigen::MatrixXd grad = exterior::evaluate_gradient(phi, {phi.dim, m, v, 1.0});
        Eigen::MatrixXd z = ginv * grad;
        const Eigen::MatrixXd vgz = v.transpose() * g.gram * z;
        z -= 0.5 * v * (vgz + vgz.transpose());
        const double z2 = (z.transpose() * g.gram * z).trace();
        if (z2 < 1e-20) break;
        double step = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            const Eigen::MatrixXd cand = orthonormalize(v + step * z);
            const double fc = exterior::evaluate(phi, {phi.dim, m, cand, 1.0});
            if (fc >= f + 1e-4 * step * z2) {
                v = cand;
                f = fc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return f;
}

bool criterion2(std::string& detail) {
    // Wirtinger-type form first
    exterior::MultiCovector wirt = exterior::wedge(exterior::MultiCovector::basis(4, 1, 0),
                                                   exterior::MultiCovector::basis(4, 1, 1));
    wirt += exterior::wedge(exterior::MultiCovector::basis(4, 1, 2),
                            exterior::MultiCovector::basis(4, 1, 3));
    comass::OptimizerBudget budget;
    budget.starts = 48;
    const auto rwirt = comass::comass_point(wirt, exterior::PointMetric::identity(4), budget);
    const double wirt_err = std::abs(rwirt.value - 1.0);

    struct Case {
        exterior::MultiCovector phi;
        exterior::PointMetric g;
    };
    std::vector<Case> cases;
    Rng rng(0xC2);
    for (int i = 0; i < 50; ++i) {
        const int n = 4 + static_cast<int>(rng.uniform() * 3); // 4..6
        const int m = 2 + static_cast<int>(rng.uniform() * (n - 3));
        cases.push_back({testutil::random_covector(rng, n, m), testutil::random_spd(rng, n)});
    }
    std::vector<double> gaps(cases.size());
    parallel_for(cases.size(), [&](std::size_t i) {
        const auto& c = cases[i];
        const int n = c.phi.dim;
        const int m = c.phi.degree;
        // sequential million-sample search keeping the best few frames
        Rng crng(Rng::derive(0xC2C2, i));
        Eigen::LLT<Eigen::MatrixXd> llt(c.g.gram);
        double best = -1.0;
        std::vector<Eigen::MatrixXd> starts; // best-so-far chain plus strided samples
        for (int s = 0; s < 1000000; ++s) {
            Eigen::MatrixXd v(n, m);
            for (int r = 0; r < n; ++r)
                for (int q = 0; q < m; ++q) v(r, q) = crng.normal();
            const Eigen::MatrixXd w = llt.matrixU() * v;
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
            Eigen::MatrixXd frame =
                llt.matrixU().solve(qr.householderQ() * Eigen::MatrixXd::Identity(n, m));
            const double val =
                std::abs(exterior::evaluate(c.phi, {n, m, frame, 1.0}));
            if (val > best) {
                best = val;
                starts.push_back(frame);
            } else if (s % 20000 == 0) {
                // diverse polish starts; the best-by-value samples alone tend to
                // sit inside one locally maximal basin
                starts.push_back(frame);
            }
        }
        double oracle = best;
        for (const auto& frame : starts) oracle = std::max(oracle, naive_polish(c.phi, c.g, frame));

        comass::OptimizerBudget b;
        b.starts = 64;
        b.seed = Rng::derive(0xACE, i);
        const auto r = comass::comass_point(c.phi, c.g, b);
        gaps[i] = std::abs(r.value - oracle);
    });
    const double worst_gap = *std::max_element(gaps.begin(), gaps.end());
    char buf[256];
    std::snprintf(buf, sizeof(buf), "max |ascent - oracle| %.2e (tol 1e-4), Wirtinger error %.2e",
                  worst_gap, wirt_err);
    detail = buf;
    return worst_gap <= 1e-4 && wirt_err <= 1e-6;
}

// ---------------------------------------------------------------------------
// criterion 3: perpendicular vs sheared fibers
// ---------------------------------------------------------------------------

bool criterion3(std::string& detail) {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold m = circle_graph("0.2*sin(2*pi*t1)", 512);
    const double vol = volume(m, flat);

    const auto perp = build_tubular(m, flat, 0.05);
    const FormField wperp = tubular::pullback_volume_form(perp, vol);
    double perp_err = 0.0;
    for (int k = 0; k < 64; ++k) {
        const double t = k / 64.0;
        perp_err = std::max(perp_err,
                            std::abs(comass::comass_at(wperp, flat, m.point(&t)).value - 1.0));
    }

    double shear_err = 0.0;
    for (const double theta : {1.3, 1.0, 0.7}) {
        tubular::AtlasOptions opt;
        opt.shear_theta = theta;
        const auto sheared = build_tubular(m, flat, 0.05, opt);
        const FormField wsh = tubular::pullback_volume_form(sheared, vol);
        const double predicted = 1.0 / std::sin(theta);
        for (int k = 0; k < 16; ++k) {
            const double t = k / 16.0;
            shear_err = std::max(shear_err, std::abs(comass::comass_at(wsh, flat, m.point(&t)).value -
                                                     predicted));
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "perpendicular |comass-1| %.2e (tol 1e-6), sheared |comass-1/sin| %.2e (tol 1e-3)",
                  perp_err, shear_err);
    detail = buf;
    return perp_err <= 1e-6 && shear_err <= 1e-3;
}

// ---------------------------------------------------------------------------
// criteria 4/5: conformal and horizontal constructions at resolution 128
// ---------------------------------------------------------------------------

struct PairChecks {
    double closedness = 0.0;
    double sup_comass = 0.0;
    double sup_dist_to_m = 0.0;
    bool outside_identical = false;
    double min_margin = 0.0;
    int violations = 0;
    bool sweep_passed = false;
};

PairChecks check_constructed_pair(const forge::CalibrationPair& pair, const Submanifold& m,
                                  const MetricField& flat, int competitors) {
    PairChecks out;
    const auto& atlas = pair.atlases.front();
    const Chart& chart = pair.phi_hat.chart;

    Rng rng(0xC4);
    double closed = 0.0;
    for (int k = 0; k < 200; ++k) {
        Eigen::VectorXd p(2);
        p << rng.uniform(), rng.uniform();
        if (atlas->grid_dist_hint(p) > 1.3 * atlas->epsilon && k % 4 != 0) continue;
        closed = std::max(closed, tubular::pointwise_d(pair.phi_hat.analytic, 2, 1, p, 2e-6)
                                      .coeffs.cwiseAbs()
                                      .maxCoeff());
    }
    out.closedness = closed;

    const auto fc = comass::comass_field(pair.phi_hat, pair.g_hat);
    out.sup_comass = fc.sup;
    out.sup_dist_to_m = atlas->dist.values[static_cast<Eigen::Index>(fc.arg_sup)];

    out.outside_identical = true;
    for (std::size_t node = 0; node < chart.node_count(); ++node)
        if (atlas->dist.values[static_cast<Eigen::Index>(node)] >= atlas->epsilon &&
            (pair.g_hat.values.row(node) - flat.values.row(node)).cwiseAbs().maxCoeff() != 0.0)
            out.outside_identical = false;

    const auto sweep =
        verify::competitor_sweep(pair, verify::Cycle::single(m), competitors, 7);
    out.min_margin = sweep.min_margin;
    out.violations = sweep.violations;
    out.sweep_passed = sweep.passed;
    return out;
}

bool criterion4(std::string& detail) {
    const double t0 = now_seconds();
    const Chart chart = Chart::torus(2, 128);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold m = circle_graph("0.2*sin(2*pi*t1)", 1024);
    const auto atlas = build_tubular(m, flat, 0.1);
    const auto pair = forge::conformal_change(atlas, constant_form(chart, Eigen::Vector2d(1, 0), 1));
    const PairChecks c = check_constructed_pair(pair, m, flat, 100);
    const double elapsed = now_seconds() - t0;
    const double h2 = 2.0 * chart.max_spacing();
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "dPhi %.2e (tol 1e-6), sup comass %.10f (tol 1+1e-6) at dist %.4f (tol %.4f), "
                  "ghat==g outside %d, sweep margin %.2e with %d violations, %.0f s (budget 600 s)",
                  c.closedness, c.sup_comass, c.sup_dist_to_m, h2, c.outside_identical ? 1 : 0,
                  c.min_margin, c.violations, elapsed);
    detail = buf;
    return c.closedness <= 1e-6 && c.sup_comass <= 1.0 + 1e-6 && c.sup_dist_to_m <= h2 &&
           c.outside_identical && c.sweep_passed && c.min_margin >= -1e-6 && elapsed <= 600.0;
}

bool criterion5(std::string& detail) {
    const Chart chart = Chart::torus(2, 128);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold m = circle_graph("0.2*sin(2*pi*t1)", 1024);
    const auto atlas = build_tubular(m, flat, 0.1);
    const auto pair =
        forge::horizontal_change(atlas, constant_form(chart, Eigen::Vector2d(1, 0), 1));
    const PairChecks c = check_constructed_pair(pair, m, flat, 100);
    const double h2 = 2.0 * chart.max_spacing();

    // totally geodesic: tangent shots stay on M for unit time
    double tangent_worst = 0.0;
    for (int k = 0; k < 4; ++k) {
        double t[4] = {0.13 + 0.22 * k, 0, 0, 0};
        Eigen::VectorXd x;
        Eigen::MatrixXd jac;
        m.frame(t, x, jac);
        Eigen::VectorXd v = jac.col(0);
        const Eigen::MatrixXd gm = pair.g_hat.gram_at(chart.wrap_point(x));
        v /= std::sqrt(v.dot(gm * v));
        const auto path = verify::geodesic_shoot(pair.g_hat, x, v, 1.0, 1e-3);
        for (Eigen::Index i = 0; i < path.points.rows(); i += 4)
            tangent_worst =
                std::max(tangent_worst, atlas->locate(path.points.row(i).transpose()).dist);
    }

    // fiber lines stay geodesic after the horizontal change
    double fiber_worst = 0.0;
    for (int k = 0; k < 3; ++k) {
        double t[4] = {0.17 + 0.31 * k, 0, 0, 0};
        const Eigen::VectorXd x0 = m.point(t);
        const auto loc0 = atlas->locate(x0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(loc0.fiber_projector);
        const Eigen::VectorXd nu = es.eigenvectors().col(1);
        Eigen::VectorXd start = x0 + 0.2 * atlas->epsilon * nu;
        Eigen::VectorXd v = nu;
        const Eigen::MatrixXd gm = pair.g_hat.gram_at(chart.wrap_point(start));
        v /= std::sqrt(v.dot(gm * v));
        const double span = 0.5 * atlas->epsilon;
        const auto path = verify::geodesic_shoot(pair.g_hat, start, v, span, span * 1e-3);
        for (Eigen::Index i = 0; i < path.points.rows(); i += 4) {
            const Eigen::VectorXd d = chart.displacement(x0, path.points.row(i).transpose());
            fiber_worst = std::max(fiber_worst, (d - d.dot(nu) * nu).norm());
        }
    }

    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "dPhi %.2e, sup comass %.10f at dist %.4f, ghat==g outside %d, sweep margin "
                  "%.2e, tangent drift %.2e (tol %.4f), fiber drift %.2e",
                  c.closedness, c.sup_comass, c.sup_dist_to_m, c.outside_identical ? 1 : 0,
                  c.min_margin, tangent_worst, h2, fiber_worst);
    detail = buf;
    return c.closedness <= 1e-6 && c.sup_comass <= 1.0 + 1e-6 && c.sup_dist_to_m <= h2 &&
           c.outside_identical && c.sweep_passed && tangent_worst <= h2 && fiber_worst <= h2;
}

// ---------------------------------------------------------------------------
// criterion 6: several calibrations on the flat 3-torus
// ---------------------------------------------------------------------------

bool criterion6(std::string& detail) {
    const double t0 = now_seconds();
    const Chart chart = Chart::torus(3, 48);
    const MetricField flat = MetricField::flat(chart);
    const auto cx = Submanifold::from_expressions(3, 1, {"t1", "0.3", "0.3"}, {512, 0, 0, 0}, 1.0, "Cx");
    const auto cy = Submanifold::from_expressions(3, 1, {"0.7", "t1", "0.7"}, {512, 0, 0, 0}, 1.0, "Cy");
    const auto cz = Submanifold::from_expressions(3, 1, {"0.2", "0.8", "t1"}, {512, 0, 0, 0}, 1.0, "Cz");

    // dual forms: period matrix is the identity to 1e-10
    const Eigen::MatrixXd p = period_matrix({&cx, &cy, &cz}, chart);
    const double period_err = (p - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff();

    const auto pairs = forge::multi_calibration({cx, cy, cz}, flat, 0.12);
    double combo_sup = 0.0;
    for (int code = 1; code < 27; ++code) {
        int c = code;
        FormField sum = pairs[0].phi_hat;
        sum.values.setZero();
        sum.analytic = nullptr;
        for (int i = 0; i < 3; ++i) {
            const int digit = c % 3;
            c /= 3;
            if (digit == 1) sum.values += pairs[i].phi_hat.values;
            else if (digit == 2) sum.values -= pairs[i].phi_hat.values;
        }
        const auto fc = comass::comass_field(sum, pairs[0].g_hat);
        combo_sup = std::max(combo_sup, fc.sup);
    }

    // mass of weighted sums equals the weighted volumes, and the pairing
    // against the matching calibration agrees
    verify::Cycle cycle;
    cycle.degree = 1;
    cycle.components.push_back({cx, 2.0});
    cycle.components.push_back({cy, 3.0});
    const double mass_val = verify::mass(cycle, pairs[0].g_hat);
    const double vols = 2.0 * volume(cx, pairs[0].g_hat) + 3.0 * volume(cy, pairs[0].g_hat);
    FormField combo = pairs[0].phi_hat;
    combo.values += pairs[1].phi_hat.values;
    auto f0 = pairs[0].phi_hat.analytic;
    auto f1 = pairs[1].phi_hat.analytic;
    combo.analytic = [f0, f1](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(f0(x) + f1(x));
    };
    const double pair_val = verify::pairing(cycle, combo);
    const double mass_err = std::abs(mass_val - vols);
    const double cal_err = std::abs(pair_val - mass_val);

    const double elapsed = now_seconds() - t0;
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "period error %.2e (tol 1e-10), 26-combination sup %.10f (tol 1+1e-6), "
                  "mass-volume %.2e, pairing-mass %.2e (tol 1e-6), %.0f s (budget 1800 s)",
                  period_err, combo_sup, mass_err, cal_err, elapsed);
    detail = buf;
    return period_err <= 1e-10 && combo_sup <= 1.0 + 1e-6 && mass_err <= 1e-6 &&
           cal_err <= 1e-6 && elapsed <= 1800.0;
}

// ---------------------------------------------------------------------------
// criterion 7: multi-level elimination
// ---------------------------------------------------------------------------

bool criterion7(std::string& detail) {
    const Chart chart = Chart::torus(3, 48);
    const MetricField flat = MetricField::flat(chart);
    Submanifold a = Submanifold::from_expressions(3, 2, {"t1", "t2", "0.15"}, {64, 64, 0, 0}, 1.0, "A");
    Submanifold b = Submanifold::from_expressions(3, 1, {"t1", "0.3", "0.65"}, {512, 0, 0, 0}, 1.0, "B");

    auto result = forge::build_multilevel({{a}, {b}}, flat, 0.12);
    bool pairs_pass = true;
    double worst_sup = 0.0;
    for (auto& pair : result.pairs) {
        pair.g_hat = result.g_hat; // all levels share the final metric
        const auto rep = verify::verify_calibration(pair);
        pairs_pass = pairs_pass && rep.passed();
        worst_sup = std::max(worst_sup, rep.sup_comass);
    }

    const double d0 = verify::geodesic_distance(flat, a, b);
    const double d1 = verify::geodesic_distance(result.g_hat, a, b);
    const double wps = std::abs(d1 - d0);
    const double tol = 5.0 * chart.max_spacing();

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "levels pass %d, worst sup comass %.10f, |dist_ghat - dist_g| %.4f (tol %.4f)",
                  pairs_pass ? 1 : 0, worst_sup, wps, tol);
    detail = buf;
    return pairs_pass && wps <= tol;
}

// ---------------------------------------------------------------------------
// criterion 8: mean curvature
// ---------------------------------------------------------------------------

bool criterion8(std::string& detail) {
    const Chart box = Chart::box(2, 32, 1.0, 0.1);
    const MetricField flatb = MetricField::flat(box);
    auto circle = [&](int res) {
        return Submanifold::from_expressions(
            2, 1, {"0.5+0.2*cos(2*pi*t1)", "0.5+0.2*sin(2*pi*t1)"}, {res, 0, 0, 0}, 1.0, "circle");
    };

    // |H| = 1/r at parameter resolution 256, within 0.5%
    auto h_err = [&](int res) {
        const Eigen::MatrixXd h = verify::mean_curvature(circle(res), flatb);
        double rel = 0.0;
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            rel = std::max(rel, std::abs(h.row(i).norm() - 5.0) / 5.0);
        return rel;
    };
    const double h_rel = h_err(256);

    // measured convergence order of the curvature stack on the analytic
    // circle (the conformal-law residual shares its leading error between the
    // two sides and sits at the rounding floor at every resolution, so the
    // operator error against the exact curvature is the measurable quantity)
    const double e16 = h_err(16);
    const double e32 = h_err(32);
    const double order = std::log2(e16 / e32);

    // conformal mean-curvature law at resolution 256
    ScalarField f;
    f.chart = box;
    f.analytic = [](const Eigen::VectorXd& x) {
        return 1.0 + 0.3 * std::sin(kTau * x[0]) * std::cos(kTau * x[1]);
    };
    const double r256 = verify::check_conformal_mc(circle(256), flatb, f);

    // prescribing zero mean curvature makes the wiggly circle minimal
    const Chart t2 = Chart::torus(2, 64);
    const MetricField flat2 = MetricField::flat(t2);
    const Submanifold wiggly = circle_graph("0.2*sin(2*pi*t1)", 128);
    auto xi_zero = [](const double*) { return Eigen::VectorXd(Eigen::Vector2d(0, 0)); };
    const auto presc = forge::prescribe_mean_curvature(wiggly, flat2, xi_zero, 0.05);
    MetricField scaled;
    scaled.chart = t2;
    const auto factor = presc.factor;
    scaled.analytic = [factor, flat2](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(factor.interpolate(x) * flat2.gram_at(x));
    };
    const Eigen::MatrixXd hmin = verify::mean_curvature(wiggly, scaled);
    double min_norm = 0.0;
    for (Eigen::Index i = 0; i < hmin.rows(); ++i)
        min_norm = std::max(min_norm, hmin.row(i).norm());

    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "|H|=1/r rel error %.2e (tol 5e-3), MC residual %.2e at 256 (tol 5e-3), "
                  "order %.2f (>= 1.8), prescribed-minimal |H| %.2e (tol 5e-3)",
                  h_rel, r256, order, min_norm);
    detail = buf;
    return h_rel <= 5e-3 && r256 <= 5e-3 && order >= 1.8 && min_norm <= 5e-3;
}

// ---------------------------------------------------------------------------
// criterion 9: negative controls
// ---------------------------------------------------------------------------

bool criterion9(std::string& detail) {
    const auto scaled = scenario::Scenario::load(scenario_path("t2_scaled_phi.yaml"));
    scenario::RunOptions opts;
    opts.out_dir = "acceptance-neg-scaled";
    const auto r1 = scenario::run(scaled, opts);

    const auto sheared = scenario::Scenario::load(scenario_path("t2_sheared_fibers.yaml"));
    opts.out_dir = "acceptance-neg-sheared";
    const auto r2 = scenario::run(sheared, opts);

    const bool scaled_ok = !r1.passed && r1.failing.find("sup_comass") != std::string::npos;
    const bool sheared_ok = !r2.passed && r2.failing.find("fiber_perpendicularity") != std::string::npos;
    detail = "scaled-form fails at '" + r1.failing + "', sheared-fibers fails at '" + r2.failing +
             "'";
    return scaled_ok && sheared_ok;
}

const Criterion kCriteria[] = {
    {1, "comass laws: scaling, monotonicity, gluing bound", criterion1},
    {2, "comass ascent within 1e-4 of a million-sample polished oracle", criterion2},
    {3, "pullback comass one for perpendicular fibers, 1/sin(theta) sheared", criterion3},
    {4, "conformal construction on the 128^2 torus with competitor sweep", criterion4},
    {5, "horizontal construction with totally-geodesic and fiber checks", criterion5},
    {6, "several calibrations on the 48^3 torus, all sign combinations", criterion6},
    {7, "multi-level elimination with distance preservation", criterion7},
    {8, "mean curvature values, conformal law, prescribed minimality", criterion8},
    {9, "negative controls fail with their designed diagnostics", criterion9},
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    }
    int failures = 0;
    for (const auto& criterion : kCriteria) {
        if (only != 0 && criterion.id != only) continue;
        std::string criterion_detail;
        bool ok = false;
        try {
            ok = criterion.run(criterion_detail);
        } catch (const std::exception& e) {
            criterion_detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.summary.c_str(), criterion_detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
