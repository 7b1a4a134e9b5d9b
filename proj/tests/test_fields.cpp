#include "doctest.h"

#include <cstdio>

#include "tame/fields.hpp"
#include "tame/rng.hpp"
#include "tame/submanifold.hpp"
#include "test_helpers.hpp"

using namespace tame;
using namespace tame::fields;
using tubular::Submanifold;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

Submanifold circle_graph(const std::string& yexpr, int res = 256, const std::string& name = "M") {
    return Submanifold::from_expressions(2, 1, {"t1", yexpr}, {res, 0, 0, 0}, 1.0, name);
}

} // namespace

TEST_CASE("chart: validation and layout") {
    CHECK_THROWS(Chart::torus(2, 8));
    const Chart c = Chart::torus(3, 16);
    CHECK(c.node_count() == 16u * 16u * 16u);
    int idx[3] = {3, 5, 7};
    int back[3];
    c.node_unpack(c.node_pack(idx), back);
    CHECK(back[0] == 3);
    CHECK(back[1] == 5);
    CHECK(back[2] == 7);
    CHECK(c.wrap_delta(0.9, 0) == doctest::Approx(-0.1));
}

TEST_CASE("d_exterior: constant forms and an analytic derivative") {
    const Chart chart = Chart::torus(2, 64);
    const FormField constant = sample_form(chart, 1, [](const Eigen::VectorXd&) {
        return Eigen::Vector2d(0.3, -0.7);
    });
    const FormField dc = d_exterior(constant);
    CHECK(dc.values.cwiseAbs().maxCoeff() < 1e-12);

    // sin(2 pi x) dy -> 2 pi cos(2 pi x) dx ^ dy
    const FormField f = sample_form(chart, 1, [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(0.0, std::sin(kTau * x[0]));
    });
    const FormField df = d_exterior(f);
    double max_rel = 0.0;
    for (std::size_t node = 0; node < chart.node_count(); ++node) {
        const double expect = kTau * std::cos(kTau * chart.point(node)[0]);
        max_rel = std::max(max_rel, std::abs(df.values(node, 0) - expect) / kTau);
    }
    CHECK(max_rel <= 1e-10);
}

TEST_CASE("d_exterior: d of d vanishes on random smooth scalars") {
    const Chart chart = Chart::torus(2, 32);
    Rng rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        double a1 = rng.normal(), a2 = rng.normal(), a3 = rng.normal();
        const FormField f = sample_form(chart, 0, [&](const Eigen::VectorXd& x) {
            Eigen::VectorXd v(1);
            v[0] = a1 * std::sin(kTau * x[0]) + a2 * std::cos(kTau * (x[0] + 2.0 * x[1])) +
                   a3 * std::sin(kTau * 3.0 * x[1]);
            return v;
        });
        const FormField ddf = d_exterior(d_exterior(f));
        CHECK(ddf.values.cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("d_exterior: box charts need support inside the margin") {
    const Chart chart = Chart::box(2, 32, 1.0, 0.15);
    // bump supported well inside
    auto bump = [&](const Eigen::VectorXd& x) {
        const double r2 = (x - Eigen::Vector2d(0.5, 0.5)).squaredNorm();
        Eigen::Vector2d v(0.0, 0.0);
        if (r2 < 0.04) {
            const double u = 1.0 - r2 / 0.04;
            v[1] = u * u * u;
        }
        return Eigen::VectorXd(v);
    };
    const FormField inside = sample_form(chart, 1, bump);
    CHECK_NOTHROW(d_exterior(inside));

    const FormField everywhere = sample_form(chart, 1, [](const Eigen::VectorXd&) {
        return Eigen::Vector2d(1.0, 0.0);
    });
    CHECK_THROWS_WITH_AS(d_exterior(everywhere), doctest::Contains("near-boundary"),
                         std::invalid_argument);
}

TEST_CASE("integrate_form: winding pairings on the torus") {
    const Chart chart = Chart::torus(2, 32);
    const FormField dxf = sample_form(chart, 1, [](const Eigen::VectorXd&) {
        return Eigen::Vector2d(1.0, 0.0);
    });
    const FormField dyf = sample_form(chart, 1, [](const Eigen::VectorXd&) {
        return Eigen::Vector2d(0.0, 1.0);
    });
    const Submanifold straight = circle_graph("0.3");
    const Submanifold wiggly = circle_graph("0.2*sin(2*pi*t1)");
    straight.validate(chart);
    wiggly.validate(chart);

    CHECK(integrate_form(dxf, straight) == doctest::Approx(1.0).epsilon(1e-12));

    Submanifold reversed = straight;
    reversed.orientation = -1.0;
    CHECK(integrate_form(dxf, reversed) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(integrate_form(dyf, straight) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(integrate_form(dxf, wiggly) - 1.0) <= 1e-10);

    CHECK_THROWS(integrate_form(dxf, Submanifold::from_expressions(
                                         2, 2, {"t1", "t2"}, {16, 16, 0, 0}, 1.0, "T")));
}

TEST_CASE("volume: lengths under flat and scaled metrics") {
    const Chart chart = Chart::torus(2, 32);
    const MetricField flat = MetricField::flat(chart);
    const Submanifold straight = circle_graph("0.3");
    CHECK(volume(straight, flat) == doctest::Approx(1.0).epsilon(1e-12));

    const MetricField four = sample_metric(chart, [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd(4.0 * Eigen::Matrix2d::Identity());
    });
    CHECK(volume(straight, four) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("volume and integrate_form: refinement convergence on the wiggly family") {
    const Chart chart = Chart::torus(2, 32);
    const MetricField flat = MetricField::flat(chart);
    // rough enough that the coarse grid has measurable quadrature error
    const std::string wavy = "0.2*sin(2*pi*t1)+0.04*sin(14*pi*t1)";
    const double reference = volume(circle_graph(wavy, 4096), flat);
    const double e16 = std::abs(volume(circle_graph(wavy, 16), flat) - reference);
    const double e32 = std::abs(volume(circle_graph(wavy, 32), flat) - reference);
    CHECK(e32 < e16);
    if (e32 > 1e-13) {
        const double order = std::log2(e16 / e32);
        CHECK(order >= 2.0);
    }
    // self-consistency at 4x refinement
    const double v256 = volume(circle_graph(wavy, 256), flat);
    const double v1024 = volume(circle_graph(wavy, 1024), flat);
    CHECK(std::abs(v256 - v1024) <= 1e-8);
}

TEST_CASE("solve_dual_forms: tori with spanning representatives") {
    const Chart t2 = Chart::torus(2, 32);
    const Submanifold straight = circle_graph("0.3");
    const auto duals = solve_dual_forms({&straight}, t2);
    REQUIRE(duals.size() == 1);
    CHECK(duals[0].values(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(duals[0].values(0, 1) == doctest::Approx(0.0).epsilon(1e-12));

    const Chart t3 = Chart::torus(3, 16);
    const auto cx = Submanifold::from_expressions(3, 1, {"t1", "0.3", "0.3"}, {64, 0, 0, 0}, 1.0, "Cx");
    const auto cy = Submanifold::from_expressions(3, 1, {"0.7", "t1", "0.7"}, {64, 0, 0, 0}, 1.0, "Cy");
    const auto cz = Submanifold::from_expressions(3, 1, {"0.2", "0.8", "t1"}, {64, 0, 0, 0}, 1.0, "Cz");
    const auto d3 = solve_dual_forms({&cx, &cy, &cz}, t3);
    REQUIRE(d3.size() == 3);
    const Eigen::MatrixXd p = period_matrix({&cx, &cy, &cz}, t3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(p(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-10);
    const std::vector<const Submanifold*> coll{&cx, &cy, &cz};
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 3; ++i) {
            const double pij = integrate_form(d3[j], *coll[i]);
            CHECK(std::abs(pij - (i == j ? 1.0 : 0.0)) <= 1e-10);
        }
    }

    // diagonal class a+b alone: any solution with unit period
    const auto diag = Submanifold::from_expressions(2, 1, {"t1", "t1"}, {256, 0, 0, 0}, 1.0, "D");
    const auto dd = solve_dual_forms({&diag}, t2);
    CHECK(std::abs(integrate_form(dd[0], diag) - 1.0) <= 1e-10);
}

TEST_CASE("solve_dual_forms: homologous representatives are rejected") {
    const Chart t2 = Chart::torus(2, 32);
    const Submanifold c1 = circle_graph("0.25");
    const Submanifold c2 = circle_graph("0.75");
    CHECK_THROWS_WITH_AS(solve_dual_forms({&c1, &c2}, t2), doctest::Contains("span"),
                         std::runtime_error);
}

TEST_CASE("field files: bitwise round trip") {
    Rng rng(1234);
    const Chart chart = Chart::torus(2, 16);

    ScalarField s;
    s.chart = chart;
    s.values = testutil::random_gaussian(rng, static_cast<int>(chart.node_count()), 1).col(0);
    write_field("tmp_roundtrip_scalar.tfd", s);
    const AnyField rs = read_field("tmp_roundtrip_scalar.tfd");
    REQUIRE(rs.kind == FieldKind::scalar);
    CHECK((rs.scalar.values - s.values).cwiseAbs().maxCoeff() == 0.0);

    FormField f;
    f.chart = chart;
    f.degree = 1;
    f.values = testutil::random_gaussian(rng, static_cast<int>(chart.node_count()), 2);
    write_field("tmp_roundtrip_form.tfd", f);
    const AnyField rf = read_field("tmp_roundtrip_form.tfd");
    REQUIRE(rf.kind == FieldKind::form);
    CHECK(rf.form.degree == 1);
    CHECK((rf.form.values - f.values).cwiseAbs().maxCoeff() == 0.0);

    const Chart boxchart = Chart::box(3, 16, 2.0, 0.2);
    MetricField g = MetricField::flat(boxchart);
    g.values.col(1).setConstant(0.125);
    g.values.col(3).setConstant(0.125);
    write_field("tmp_roundtrip_metric.tfd", g);
    const AnyField rg = read_field("tmp_roundtrip_metric.tfd");
    REQUIRE(rg.kind == FieldKind::metric);
    CHECK(rg.metric.chart.topology == Topology::box);
    CHECK(rg.metric.chart.margin == g.chart.margin);
    CHECK((rg.metric.values - g.values).cwiseAbs().maxCoeff() == 0.0);

    std::remove("tmp_roundtrip_scalar.tfd");
    std::remove("tmp_roundtrip_form.tfd");
    std::remove("tmp_roundtrip_metric.tfd");

    CHECK_THROWS(read_field("tmp_missing_file.tfd"));
}

TEST_CASE("interpolation: band-limited fields reproduce exactly off-grid") {
    const Chart chart = Chart::torus(2, 32);
    const FormField f = sample_form(chart, 1, [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(std::sin(kTau * x[0]) * std::cos(kTau * x[1]),
                               std::cos(kTau * 2.0 * x[0]));
    });
    FormField grid_only = f;
    grid_only.analytic = nullptr;
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd x(2);
        x << rng.uniform(), rng.uniform();
        const Eigen::VectorXd a = grid_only.interpolate(x);
        const Eigen::VectorXd b = f.analytic(x);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
    }
}
