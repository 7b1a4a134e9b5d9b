#include "doctest.h"

#include "tame/comass.hpp"
#include "tame/forge.hpp"
#include "tame/geometry.hpp"
#include "tame/rng.hpp"

using namespace tame;
using namespace tame::fields;
using namespace tame::forge;
using tubular::BumpProfile;
using tubular::Submanifold;
using tubular::build_tubular;
using tubular::pointwise_d;

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

struct WigglySetup {
    Chart chart = Chart::torus(2, 64);
    MetricField flat = MetricField::flat(chart);
    Submanifold m = circle_graph("0.2*sin(2*pi*t1)");
    std::shared_ptr<const tubular::TubularAtlas> atlas;
    FormField dx;

    WigglySetup() : dx(constant_form(chart, Eigen::Vector2d(1.0, 0.0), 1)) {
        m.validate(chart);
        atlas = build_tubular(m, flat, 0.1);
    }
};

} // namespace

TEST_CASE("glue_form: straight circle is a fixed point") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold m = circle_graph("0.3");
    const auto atlas = build_tubular(m, flat, 0.1);
    const FormField dx = constant_form(chart, Eigen::Vector2d(1.0, 0.0), 1);
    const FormField glued = glue_form(dx, atlas);
    for (std::size_t node = 0; node < chart.node_count(); ++node) {
        CHECK(std::abs(glued.values(node, 0) - 1.0) <= 1e-12);
        CHECK(std::abs(glued.values(node, 1)) <= 1e-12);
    }
}

TEST_CASE("glue_form: wiggly circle matches its case table") {
    WigglySetup w;
    const FormField glued = glue_form(w.dx, w.atlas);
    const double eps = w.atlas->epsilon;

    // equals omega* inside, phi outside, differs from dx near M
    bool differs_near_m = false;
    for (std::size_t node = 0; node < w.chart.node_count(); ++node) {
        const double d = w.atlas->dist.values[node];
        if (d >= 4.0 * eps / 5.0) {
            CHECK(std::abs(glued.values(node, 0) - 1.0) <= 1e-10);
            CHECK(std::abs(glued.values(node, 1)) <= 1e-10);
        }
        if (d <= 3.0 * eps / 5.0 &&
            (glued.values.row(node) - Eigen::RowVector2d(1.0, 0.0)).norm() > 1e-6)
            differs_near_m = true;
    }
    CHECK(differs_near_m);

    // the period over M is preserved
    CHECK(std::abs(integrate_form(glued, w.m) - 1.0) <= 1e-8);

    // closed: pointwise FD exterior derivative on and off the transition zone
    Rng rng(7);
    int checked = 0;
    while (checked < 40) {
        Eigen::VectorXd p(2);
        p << rng.uniform(), rng.uniform();
        if (w.atlas->grid_dist_hint(p) > 1.5 * eps) continue;
        ++checked;
        const auto d = pointwise_d(glued.analytic, 2, 1, p, 2e-6);
        CHECK(d.coeffs.cwiseAbs().maxCoeff() <= 1e-6);
    }

    // comass along M equals s / Vol_g(M)
    const double expected = 1.0 / volume(w.m, w.flat);
    for (int k = 0; k < 20; ++k) {
        const double t = k / 20.0;
        const auto r = comass::comass_at(glued, w.flat, w.m.point(&t));
        CHECK(std::abs(r.value - expected) <= 1e-6);
    }

    // negative period is rejected
    const FormField neg = constant_form(w.chart, Eigen::Vector2d(-1.0, 0.0), 1);
    CHECK_THROWS_WITH_AS(glue_form(neg, w.atlas), doctest::Contains("positiv"),
                         std::runtime_error);
}

TEST_CASE("select_alpha: formula values and localized bound") {
    // sup = 1, margin 0.1, m = 1 -> (1/0.9)^2; sup = 2, margin 0.1, m = 2 -> 2/0.9
    const Chart chart = Chart::torus(2, 16);
    const MetricField flat = MetricField::flat(chart);
    const FormField dx = constant_form(chart, Eigen::Vector2d(1.0, 0.0), 1);
    const auto rep1 = select_alpha(dx, flat, 0.1);
    CHECK(rep1.alpha == doctest::Approx(1.0 / 0.81).epsilon(1e-10));
    CHECK(rep1.rechecked_sup <= 0.9 + 1e-6);

    const Chart chart3 = Chart::torus(3, 16);
    const MetricField flat3 = MetricField::flat(chart3);
    Eigen::VectorXd c(3);
    c << 2.0, 0.0, 0.0; // 2 dx^12 in lexicographic 2-form order
    const FormField f2 = constant_form(chart3, c, 2);
    const auto rep2 = select_alpha(f2, flat3, 0.1);
    CHECK(rep2.alpha == doctest::Approx(2.0 / 0.9).epsilon(1e-10));

    CHECK_THROWS(select_alpha(dx, flat, 1.5));

    // localized bound along a real tube
    WigglySetup w;
    const FormField glued = glue_form(w.dx, w.atlas);
    const auto rep = select_alpha(glued, w.flat, 0.1, {}, 1.0, w.atlas);
    CHECK(rep.local_bound_min > 1.0);
    CHECK(rep.rechecked_sup <= 0.9 + 1e-6);
    CHECK(rep.rechecked_sup >= 0.85);
}

TEST_CASE("horizontal_change: idempotent on an already calibrated pair") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold m = circle_graph("0.3");
    const auto atlas = build_tubular(m, flat, 0.1);
    const FormField dx = constant_form(chart, Eigen::Vector2d(1.0, 0.0), 1);
    const auto pair = horizontal_change(atlas, dx);
    CHECK(pair.idempotent_path);
    CHECK(pair.alpha == 1.0);
    CHECK((pair.g_hat.values - flat.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((pair.phi_hat.values - dx.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("horizontal_change: wiggly circle is strongly calibrated") {
    WigglySetup w;
    const auto pair = horizontal_change(w.atlas, w.dx);
    CHECK(!pair.idempotent_path);
    CHECK(pair.alpha > 1.0);

    // comass one along M
    for (int k = 0; k < 20; ++k) {
        const double t = k / 20.0;
        const auto r = comass::comass_at(pair.phi_hat, pair.g_hat, w.m.point(&t));
        CHECK(std::abs(r.value - 1.0) <= 1e-6);
    }
    // strictly below one at half tube radius
    for (int k = 0; k < 10; ++k) {
        const double t = k / 10.0;
        const auto loc = w.atlas->locate(w.m.point(&t));
        Eigen::VectorXd p = w.m.point(&t);
        p[1] += 0.5 * w.atlas->epsilon; // vertical offsets leave the wiggly graph
        const auto r = comass::comass_at(pair.phi_hat, pair.g_hat, p);
        CHECK(r.value < 1.0 - 1e-3);
        (void)loc;
    }
    // sup over the grid stays below 1 + 1e-6
    const auto fc = comass::comass_field(pair.phi_hat, pair.g_hat);
    CHECK(fc.sup <= 1.0 + 1e-6);
    // g_hat == g outside the tube, bit for bit
    for (std::size_t node = 0; node < w.chart.node_count(); ++node) {
        if (w.atlas->dist.values[node] >= w.atlas->epsilon)
            CHECK((pair.g_hat.values.row(node) - w.flat.values.row(node)).cwiseAbs().maxCoeff() ==
                  0.0);
    }
    // phi_hat restricted to M equals the g_hat volume form of M
    for (int k = 0; k < 10; ++k) {
        const double t = k / 10.0;
        Eigen::VectorXd x;
        Eigen::MatrixXd jac;
        w.m.frame(&t, x, jac);
        exterior::MultiCovector phix{2, 1, pair.phi_hat.analytic(w.chart.wrap_point(x))};
        const double lhs = exterior::evaluate(phix, {2, 1, jac, 1.0});
        const Eigen::MatrixXd gm = pair.g_hat.gram_at(w.chart.wrap_point(x));
        const double rhs = std::sqrt((jac.transpose() * gm * jac)(0, 0));
        CHECK(std::abs(lhs - rhs) <= 1e-6 * std::max(1.0, rhs));
    }
}

TEST_CASE("conformal_change: wiggly circle, conformality and locality") {
    WigglySetup w;
    const auto pair = conformal_change(w.atlas, w.dx);

    // pointwise positive multiple of the flat metric
    for (std::size_t node = 0; node < w.chart.node_count(); ++node) {
        const double c = pair.g_hat.values(node, 0);
        CHECK(c > 0.0);
        CHECK(std::abs(pair.g_hat.values(node, 3) - c) <= 1e-10 * c);
        CHECK(std::abs(pair.g_hat.values(node, 1)) <= 1e-10 * c);
        if (w.atlas->dist.values[node] >= w.atlas->epsilon)
            CHECK(c == 1.0);
    }
    for (int k = 0; k < 20; ++k) {
        const double t = k / 20.0;
        const auto r = comass::comass_at(pair.phi_hat, pair.g_hat, w.m.point(&t));
        CHECK(std::abs(r.value - 1.0) <= 1e-6);
    }
    const auto fc = comass::comass_field(pair.phi_hat, pair.g_hat);
    CHECK(fc.sup <= 1.0 + 1e-6);

    // closedness of the rescaled form
    Rng rng(3);
    int checked = 0;
    while (checked < 20) {
        Eigen::VectorXd p(2);
        p << rng.uniform(), rng.uniform();
        if (w.atlas->grid_dist_hint(p) > 1.4 * w.atlas->epsilon) continue;
        ++checked;
        const auto d = pointwise_d(pair.phi_hat.analytic, 2, 1, p, 2e-6);
        CHECK(d.coeffs.cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("bar metric: the pullback has comass one across the whole tube") {
    WigglySetup w;
    const double s = 1.0;
    const MetricField bar = bar_metric(w.atlas, s);
    const FormField glued = glue_form(w.dx, w.atlas);
    Rng rng(11);
    int checked = 0;
    while (checked < 60) {
        Eigen::VectorXd p(2);
        p << rng.uniform(), rng.uniform();
        const auto loc = w.atlas->locate(p);
        if (!(loc.dist < w.atlas->epsilon)) continue;
        ++checked;
        exterior::MultiCovector omegax{2, 1, tubular::pullback_volume_form(w.atlas, s).analytic(p)};
        exterior::PointMetric barp{2, bar.gram_at(p)};
        const auto r = comass::comass_point(omegax, barp);
        CHECK(std::abs(r.value - 1.0) <= 1e-6);
        // the glued form coincides with omega* on the inner tube
        if (loc.dist <= 3.0 * w.atlas->epsilon / 5.0) {
            const auto rg = comass::comass_point({2, 1, glued.analytic(p)}, barp);
            CHECK(std::abs(rg.value - 1.0) <= 1e-6);
        }
    }
}

TEST_CASE("eliminate_on_tube: dx flattened over a transverse circle in T3") {
    const Chart chart = Chart::torus(3, 32);
    const MetricField flat = MetricField::flat(chart);
    const auto cy = Submanifold::from_expressions(3, 1, {"0.7", "t1", "0.7"}, {256, 0, 0, 0}, 1.0, "Cy");
    const auto atlas = build_tubular(cy, flat, 0.15);
    Eigen::VectorXd cdx(3);
    cdx << 1.0, 0.0, 0.0;
    const FormField dx = constant_form(chart, cdx, 1);
    const FormField flattened = eliminate_on_tube(dx, atlas);

    for (std::size_t node = 0; node < chart.node_count(); ++node) {
        const double d = atlas->dist.values[node];
        if (d <= 4.0 * atlas->epsilon / 5.0)
            CHECK(flattened.values.row(node).cwiseAbs().maxCoeff() <= 1e-10);
        if (d >= atlas->epsilon)
            CHECK((flattened.values.row(node).transpose() - cdx).cwiseAbs().maxCoeff() <= 1e-12);
    }
    // still closed
    Rng rng(5);
    int checked = 0;
    while (checked < 15) {
        Eigen::VectorXd p(3);
        p << rng.uniform(), rng.uniform(), rng.uniform();
        if (atlas->grid_dist_hint(p) > 1.3 * atlas->epsilon) continue;
        ++checked;
        const auto d = pointwise_d(flattened.analytic, 3, 1, p, 2e-6);
        CHECK(d.coeffs.cwiseAbs().maxCoeff() <= 1e-6);
    }
    // a form that already vanishes on a (smaller) tube passes through unchanged
    const auto inner_atlas = build_tubular(cy, flat, 0.09);
    const FormField again = eliminate_on_tube(flattened, inner_atlas);
    CHECK((again.values - flattened.values).cwiseAbs().maxCoeff() <= 1e-12);

    // nonzero period over the component is a hard error
    Eigen::VectorXd cdy(3);
    cdy << 0.0, 1.0, 0.0;
    CHECK_THROWS_WITH_AS(eliminate_on_tube(constant_form(chart, cdy, 1), atlas),
                         doctest::Contains("period"), std::runtime_error);
}

TEST_CASE("multi_calibration: single component reduces to the conformal change") {
    WigglySetup w;
    const auto pairs = multi_calibration({w.m}, w.flat, 0.1);
    REQUIRE(pairs.size() == 1);
    const auto direct = conformal_change(w.atlas, w.dx);
    CHECK((pairs[0].g_hat.values - direct.g_hat.values).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((pairs[0].phi_hat.values - direct.phi_hat.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("multi_calibration: dependent classes share one calibration (volume identity)") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold c1 = circle_graph("0.25", 256, "C1");
    const Submanifold c2 = circle_graph("0.75", 256, "C2");
    const auto pairs = multi_calibration({c1, c2}, flat, 0.08);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].calibrated.size() == 2);

    // both components calibrated by the shared pair
    for (const auto& comp : pairs[0].calibrated) {
        for (int k = 0; k < 10; ++k) {
            const double t = k / 10.0;
            const auto r = comass::comass_at(pairs[0].phi_hat, pairs[0].g_hat, comp.point(&t));
            CHECK(std::abs(r.value - 1.0) <= 1e-6);
        }
    }
    const auto fc = comass::comass_field(pairs[0].phi_hat, pairs[0].g_hat);
    CHECK(fc.sup <= 1.0 + 1e-6);

    // [C1] = [C2] forces equal volumes under the constructed metric
    const double v1 = volume(c1, pairs[0].g_hat);
    const double v2 = volume(c2, pairs[0].g_hat);
    CHECK(std::abs(v1 - v2) <= 1e-6 * std::max(1.0, std::abs(v1)));
}

TEST_CASE("prescribe_mean_curvature: fixed points and minimality") {
    const Chart chart = Chart::torus(2, 64);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold m = circle_graph("0.2*sin(2*pi*t1)", 256);

    // xi = H leaves the factor at one near M
    auto xi_h = [&m, &flat](const double* t) { return verify::mean_curvature_at(m, flat, t); };
    const auto presc_h = prescribe_mean_curvature(m, flat, xi_h, 0.05);
    CHECK(presc_h.factor.values.minCoeff() >= 1.0 - 1e-6);
    CHECK(presc_h.factor.values.maxCoeff() <= 1.0 + 1e-6);

    // xi = 0 makes M minimal under F g
    auto xi_zero = [](const double*) { return Eigen::VectorXd(Eigen::Vector2d(0.0, 0.0)); };
    const auto presc0 = prescribe_mean_curvature(m, flat, xi_zero, 0.05);
    MetricField scaled;
    scaled.chart = chart;
    const auto factor_field = presc0.factor;
    scaled.analytic = [factor_field, &flat](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(factor_field.interpolate(x) * Eigen::Matrix2d::Identity());
    };
    const Eigen::MatrixXd h0 = verify::mean_curvature(m, scaled);
    double sup = 0.0;
    for (Eigen::Index i = 0; i < h0.rows(); ++i) sup = std::max(sup, h0.row(i).norm());
    CHECK(sup <= 5e-3);
}
