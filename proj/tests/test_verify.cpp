#include "doctest.h"

#include "tame/forge.hpp"
#include "tame/verify.hpp"

using namespace tame;
using namespace tame::fields;
using namespace tame::verify;
using tubular::Submanifold;
using tubular::build_tubular;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

Submanifold circle_graph(const std::string& yexpr, int res = 512, const std::string& name = "M") {
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

struct ConformalFixture {
    Chart chart = Chart::torus(2, 64);
    MetricField flat = MetricField::flat(chart);
    Submanifold m = circle_graph("0.2*sin(2*pi*t1)");
    std::shared_ptr<const tubular::TubularAtlas> atlas;
    forge::CalibrationPair pair;

    explicit ConformalFixture(double form_scale = 1.0) {
        atlas = build_tubular(m, flat, 0.1);
        forge::ConstructionParams params;
        params.form_scale = form_scale;
        pair = forge::conformal_change(atlas, constant_form(chart, Eigen::Vector2d(1, 0), 1), params);
    }
};

} // namespace

TEST_CASE("mass: weighted volumes, orientation blind") {
    const Chart chart = Chart::torus(2, 32);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold c1 = circle_graph("0.25", 256, "C1");
    const Submanifold c2 = circle_graph("0.75", 256, "C2");

    CHECK(mass(Cycle::single(c1), flat) == doctest::Approx(1.0).epsilon(1e-12));

    Cycle two;
    two.degree = 1;
    two.components.push_back({c1, 2.0});
    two.components.push_back({c2, 3.0});
    CHECK(mass(two, flat) == doctest::Approx(5.0).epsilon(1e-12));

    CHECK(mass(Cycle::single(c1, -1.0), flat) == mass(Cycle::single(c1, 1.0), flat));
}

TEST_CASE("pairing: winding, Stokes, and the calibrated equality") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const FormField dx = constant_form(chart, Eigen::Vector2d(1, 0), 1);
    const Submanifold straight = circle_graph("0.3");
    const Submanifold wiggly = circle_graph("0.2*sin(2*pi*t1)");

    CHECK(pairing(Cycle::single(straight), dx) == doctest::Approx(1.0).epsilon(1e-12));

    // homologous cycles pair equally against closed forms
    ConformalFixture fx;
    const double p1 = pairing(Cycle::single(circle_graph("0.2*sin(2*pi*t1)+0.03*cos(4*pi*t1)")),
                              fx.pair.phi_hat);
    const double p2 = pairing(Cycle::single(straight), fx.pair.phi_hat);
    CHECK(std::abs(p1 - p2) <= 1e-8);

    // calibrated cycle: pairing equals mass
    const double pm = pairing(Cycle::single(fx.m), fx.pair.phi_hat);
    const double mm = mass(Cycle::single(fx.m), fx.pair.g_hat);
    CHECK(std::abs(pm - mm) <= 1e-6);
    CHECK(pm <= mm * (fx.pair.margin < 1 ? 1.0 + 1e-6 : 1.0));
    (void)wiggly;
}

TEST_CASE("verify_calibration: flat pair passes but is not strongly calibrated") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold straight = circle_graph("0.3");
    const auto atlas = build_tubular(straight, flat, 0.1);
    const auto pair = forge::horizontal_change(atlas, constant_form(chart, Eigen::Vector2d(1, 0), 1));
    REQUIRE(pair.idempotent_path);

    const auto rep = verify_calibration(pair);
    CHECK(rep.passed());
    CHECK(rep.sup_comass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.comass_on_m_min == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& [delta, c] : rep.strong_support) {
        (void)delta;
        CHECK(std::abs(c) <= 1e-9); // calibrated everywhere, hence not strong
    }
    // report serializes deterministically
    CHECK(rep.to_json() == rep.to_json());
}

TEST_CASE("verify_calibration: conformal wiggly pair is strongly calibrated") {
    ConformalFixture fx;
    const auto rep = verify_calibration(fx.pair);
    CHECK(rep.passed());
    CHECK(rep.sup_comass <= 1.0 + 1e-6);
    CHECK(rep.comass_on_m_min >= 1.0 - 1e-6);
    CHECK(rep.comass_on_m_max <= 1.0 + 1e-6);
    CHECK(rep.volume_form_residual <= 1e-6);
    for (const auto& [delta, c] : rep.strong_support) {
        (void)delta;
        CHECK(c > 0.0);
    }
}

TEST_CASE("verify_calibration: a scaled form fails with the excess localized on M") {
    ConformalFixture fx(1.01);
    const auto rep = verify_calibration(fx.pair);
    CHECK(!rep.passed());
    CHECK(rep.sup_comass == doctest::Approx(1.01).epsilon(1e-3));
    // the supremum sits on the calibrated set
    Eigen::VectorXd loc(2);
    loc << rep.sup_location[0], rep.sup_location[1];
    CHECK(fx.atlas->locate(loc).dist <= 2.0 * fx.chart.max_spacing());
}

TEST_CASE("competitor_sweep: straight circle under the flat pair") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold straight = circle_graph("0.3");
    const auto atlas = build_tubular(straight, flat, 0.1);
    const auto pair = forge::horizontal_change(atlas, constant_form(chart, Eigen::Vector2d(1, 0), 1));

    const auto sweep = competitor_sweep(pair, Cycle::single(straight), 30, 7);
    CHECK(sweep.passed);
    CHECK(sweep.violations == 0);
    CHECK(sweep.min_margin >= -1e-6);
    CHECK(sweep.worst_competitor.rows() > 0);
}

TEST_CASE("competitor_sweep: conformal wiggly base minimizes; broken pair is caught") {
    ConformalFixture fx;
    const auto sweep = competitor_sweep(fx.pair, Cycle::single(fx.m), 40, 7);
    CHECK(sweep.passed);
    CHECK(sweep.violations == 0);
    CHECK(sweep.min_margin >= -1e-6);

    ConformalFixture broken(1.01);
    const auto bad = competitor_sweep(broken.pair, Cycle::single(broken.m), 5, 7);
    CHECK(!bad.passed);
    bool cert_failed = false;
    for (const auto& c : bad.checks)
        if (c.name == "pairing_le_mass" && !c.passed) cert_failed = true;
    CHECK(cert_failed);
}

TEST_CASE("mean_curvature: straight circle, round circle, sphere patch") {
    const Chart t2 = Chart::torus(2, 64);
    const MetricField flat2 = MetricField::flat(t2);
    const Submanifold straight = circle_graph("0.3", 256);
    const Eigen::MatrixXd h0 = mean_curvature(straight, flat2);
    CHECK(h0.cwiseAbs().maxCoeff() <= 1e-6);

    // circle of radius 0.2 in a flat box chart: |H| = 1/r = 5 within 0.5%
    const Chart box = Chart::box(2, 32, 1.0, 0.1);
    const MetricField flatb = MetricField::flat(box);
    const Submanifold circle = Submanifold::from_expressions(
        2, 1, {"0.5+0.2*cos(2*pi*t1)", "0.5+0.2*sin(2*pi*t1)"}, {256, 0, 0, 0}, 1.0, "circle");
    const Eigen::MatrixXd hc = mean_curvature(circle, flatb);
    for (Eigen::Index i = 0; i < hc.rows(); ++i)
        CHECK(hc.row(i).norm() == doctest::Approx(5.0).epsilon(5e-3));

    // sphere patch of radius r: |H| = 2/r within 1%
    const Chart box3 = Chart::box(3, 16, 1.0, 0.1);
    const MetricField flat3 = MetricField::flat(box3);
    const double r = 0.21;
    Submanifold sphere;
    sphere.ambient_dim = 3;
    sphere.dim = 2;
    sphere.orientation = 1.0;
    sphere.name = "sphere_patch";
    sphere.param_res = {64, 64, 0, 0};
    sphere.map = [r](const double* t, Jet* out) {
        const Jet t1 = Jet::variable(t[0], 0, 2);
        const Jet t2 = Jet::variable(t[1], 1, 2);
        const Jet phi = t1 * kTau;
        const Jet theta = t2 * 3.14159265358979323846;
        out[0] = 0.5 + r * cos(phi) * sin(theta);
        out[1] = 0.5 + r * sin(phi) * sin(theta);
        out[2] = 0.5 + r * cos(theta);
    };
    for (double u : {0.1, 0.45, 0.8}) {
        for (double v : {0.3, 0.5, 0.62}) { // away from the poles
            double t[4] = {u, v, 0, 0};
            const Eigen::VectorXd h = mean_curvature_at(sphere, flat3, t);
            CHECK(h.norm() == doctest::Approx(2.0 / r).epsilon(1e-2));
        }
    }
}

TEST_CASE("check_conformal_mc: constant factor and smooth random factor") {
    const Chart box = Chart::box(2, 32, 1.0, 0.1);
    const MetricField flatb = MetricField::flat(box);
    const Submanifold circle = Submanifold::from_expressions(
        2, 1, {"0.5+0.2*cos(2*pi*t1)", "0.5+0.2*sin(2*pi*t1)"}, {256, 0, 0, 0}, 1.0, "circle");

    ScalarField fconst;
    fconst.chart = box;
    fconst.analytic = [](const Eigen::VectorXd&) { return 2.5; };
    CHECK(check_conformal_mc(circle, flatb, fconst) <= 1e-6);

    ScalarField fsmooth;
    fsmooth.chart = box;
    fsmooth.analytic = [](const Eigen::VectorXd& x) {
        return 1.0 + 0.3 * std::sin(kTau * x[0]) * std::cos(kTau * x[1]);
    };
    CHECK(check_conformal_mc(circle, flatb, fsmooth) <= 5e-3);
}

TEST_CASE("geodesics: straight lines, energy conservation, step guard") {
    const Chart chart = Chart::torus(2, 32);
    const MetricField flat = MetricField::flat(chart);
    Eigen::VectorXd x0(2), v0(2);
    x0 << 0.2, 0.7;
    v0 << 0.6, -0.33;
    const auto path = geodesic_shoot(flat, x0, v0, 1.0, 1e-2);
    CHECK(path.energy_drift <= 1e-10);
    const Eigen::VectorXd expect = x0 + v0;
    CHECK((path.points.bottomRows(1).transpose() - expect).cwiseAbs().maxCoeff() <= 1e-9);

    const MetricField curved = sample_metric(chart, [](const Eigen::VectorXd& x) {
        const double c = 1.0 + 0.2 * std::sin(kTau * x[0]) * std::sin(kTau * x[1]);
        return Eigen::MatrixXd(c * Eigen::Matrix2d::Identity());
    });
    const auto curved_path = geodesic_shoot(curved, x0, v0, 1.0, 2e-3);
    CHECK(curved_path.energy_drift <= 1e-6);
    CHECK_THROWS_WITH_AS(geodesic_shoot(curved, x0, 40.0 * v0, 1.0, 0.25),
                         doctest::Contains("step too large"), std::runtime_error);
}

TEST_CASE("geodesic_distance: parallel circles on the flat torus") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold a = circle_graph("0.2", 256, "A");
    const Submanifold b = circle_graph("0.6", 256, "B");
    const double d = geodesic_distance(flat, a, b);
    CHECK(std::abs(d - 0.4) <= 2.0 * chart.max_spacing());

    // self distance vanishes within the O(h) accuracy of the grid method
    const double zero = geodesic_distance(flat, a, a);
    CHECK(zero <= 2.0 * chart.max_spacing());
}
