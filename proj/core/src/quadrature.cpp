#include <Eigen/Dense>
#include <stdexcept>

#include "tame/fields.hpp"
#include "tame/parallel.hpp"
#include "tame/submanifold.hpp"

namespace tame::fields {

namespace {

using tubular::Submanifold;

double param_cell_measure(const Submanifold& m) {
    double w = 1.0;
    for (int a = 0; a < m.dim; ++a) w /= m.param_res[a];
    return w;
}

} // namespace

double integrate_form(const FormField& phi, const Submanifold& m) {
    if (phi.degree != m.dim)
        throw std::invalid_argument("integrate_form: form degree must equal submanifold dimension");
    if (phi.chart.dim != m.ambient_dim)
        throw std::invalid_argument("integrate_form: chart dimension mismatch");
    const std::size_t count = m.param_count();
    const double cell = param_cell_measure(m);
    std::vector<double> contrib(count);
    parallel_for(count, [&](std::size_t node) {
        double t[4];
        m.param_unpack(node, t);
        Eigen::VectorXd x;
        Eigen::MatrixXd jac;
        m.frame(t, x, jac);
        exterior::MultiCovector phix;
        phix.dim = phi.chart.dim;
        phix.degree = phi.degree;
        phix.coeffs = phi.coeffs_at(phi.chart.wrap_point(x));
        contrib[node] = exterior::evaluate(phix, {phi.chart.dim, phi.degree, jac, 1.0});
    });
    double acc = 0.0;
    for (double c : contrib) acc += c;
    return m.orientation * acc * cell;
}

double volume(const Submanifold& m, const MetricField& g) {
    if (g.chart.dim != m.ambient_dim)
        throw std::invalid_argument("volume: chart dimension mismatch");
    const std::size_t count = m.param_count();
    const double cell = param_cell_measure(m);
    std::vector<double> contrib(count);
    parallel_for(count, [&](std::size_t node) {
        double t[4];
        m.param_unpack(node, t);
        Eigen::VectorXd x;
        Eigen::MatrixXd jac;
        m.frame(t, x, jac);
        const Eigen::MatrixXd gram = g.gram_at(g.chart.wrap_point(x));
        const Eigen::MatrixXd induced = jac.transpose() * gram * jac;
        const double det = induced.determinant();
        contrib[node] = det > 0.0 ? std::sqrt(det) : 0.0;
    });
    double acc = 0.0;
    for (double c : contrib) acc += c;
    return acc * cell;
}

Eigen::MatrixXd period_matrix(const std::vector<const Submanifold*>& collection, const Chart& chart) {
    if (collection.empty()) throw std::invalid_argument("period_matrix: empty collection");
    const int k = collection.front()->dim;
    const auto& tab = multi_indices(chart.dim, k);
    Eigen::MatrixXd p(static_cast<int>(collection.size()), tab.count());
    for (std::size_t i = 0; i < collection.size(); ++i) {
        const Submanifold& m = *collection[i];
        if (m.dim != k) throw std::invalid_argument("period_matrix: mixed dimensions in collection");
        const std::size_t count = m.param_count();
        const double cell = param_cell_measure(m);
        Eigen::VectorXd row = Eigen::VectorXd::Zero(tab.count());
        Eigen::VectorXd x;
        Eigen::MatrixXd jac;
        double t[4];
        Eigen::MatrixXd sub(k, k);
        for (std::size_t node = 0; node < count; ++node) {
            m.param_unpack(node, t);
            m.frame(t, x, jac);
            for (int r = 0; r < tab.count(); ++r) {
                const auto rows = tab.tuple(r);
                for (int a = 0; a < k; ++a) sub.row(a) = jac.row(rows[a]);
                row[r] += sub.determinant();
            }
        }
        p.row(i) = m.orientation * cell * row.transpose();
    }
    return p;
}

std::vector<FormField> solve_dual_forms(const std::vector<const Submanifold*>& collection,
                                        const Chart& chart) {
    const Eigen::MatrixXd p = period_matrix(collection, chart);
    const int s = static_cast<int>(collection.size());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sing = svd.singularValues();
    const double smax = sing.size() ? sing[0] : 0.0;
    if (static_cast<int>(sing.size()) < s || sing[s - 1] <= 1e-10 * std::max(1.0, smax))
        throw std::runtime_error(
            "solve_dual_forms: representatives do not span / violate spanning hypothesis "
            "(rank-deficient period matrix)");

    const int k = collection.front()->dim;
    std::vector<FormField> out;
    out.reserve(s);
    for (int j = 0; j < s; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(s);
        e[j] = 1.0;
        // least-norm solution of P c = e_j
        const Eigen::VectorXd c = svd.solve(e);
        FormField f;
        f.chart = chart;
        f.degree = k;
        f.values = c.transpose().replicate(static_cast<Eigen::Index>(chart.node_count()), 1);
        f.analytic = [c](const Eigen::VectorXd&) { return c; };
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace tame::fields
