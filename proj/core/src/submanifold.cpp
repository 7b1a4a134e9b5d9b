#include "tame/submanifold.hpp"

#include <memory>
#include <stdexcept>

namespace tame::tubular {

Submanifold Submanifold::from_expressions(int ambient_dim, int dim,
                                          const std::vector<std::string>& coords,
                                          const std::array<int, 4>& param_res, double orientation,
                                          std::string name) {
    if (static_cast<int>(coords.size()) != ambient_dim)
        throw std::invalid_argument("submanifold: need one coordinate expression per ambient axis");
    std::vector<std::string> vars;
    for (int a = 0; a < dim; ++a) vars.push_back("t" + std::to_string(a + 1));
    auto exprs = std::make_shared<std::vector<Expr>>();
    for (const auto& c : coords) exprs->push_back(Expr::parse(c, vars));

    Submanifold m;
    m.ambient_dim = ambient_dim;
    m.dim = dim;
    m.orientation = orientation;
    m.name = std::move(name);
    m.param_res = param_res;
    m.map = [exprs, dim](const double* t, Jet* out) {
        Jet vars_jet[4];
        for (int a = 0; a < dim; ++a) vars_jet[a] = Jet::variable(t[a], a, dim);
        for (std::size_t k = 0; k < exprs->size(); ++k) out[k] = (*exprs)[k].eval_jet(vars_jet);
    };
    return m;
}

std::size_t Submanifold::param_count() const {
    std::size_t c = 1;
    for (int a = 0; a < dim; ++a) c *= static_cast<std::size_t>(param_res[a]);
    return c;
}

std::size_t Submanifold::param_stride(int axis) const {
    std::size_t s = 1;
    for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(param_res[a]);
    return s;
}

void Submanifold::param_unpack(std::size_t node, double* t) const {
    for (int a = dim - 1; a >= 0; --a) {
        t[a] = static_cast<double>(node % param_res[a]) / param_res[a];
        node /= param_res[a];
    }
}

Eigen::VectorXd Submanifold::point(const double* t) const {
    std::vector<Jet> out(ambient_dim);
    map(t, out.data());
    Eigen::VectorXd x(ambient_dim);
    for (int k = 0; k < ambient_dim; ++k) x[k] = out[k].v;
    return x;
}

void Submanifold::frame(const double* t, Eigen::VectorXd& x, Eigen::MatrixXd& jac) const {
    std::vector<Jet> out(ambient_dim);
    map(t, out.data());
    x.resize(ambient_dim);
    jac.resize(ambient_dim, dim);
    for (int k = 0; k < ambient_dim; ++k) {
        x[k] = out[k].v;
        jac.row(k) = out[k].g.transpose();
    }
}

void Submanifold::frame2(const double* t, Eigen::VectorXd& x, Eigen::MatrixXd& jac,
                         std::vector<Eigen::MatrixXd>& hess) const {
    std::vector<Jet> out(ambient_dim);
    map(t, out.data());
    x.resize(ambient_dim);
    jac.resize(ambient_dim, dim);
    hess.assign(ambient_dim, Eigen::MatrixXd());
    for (int k = 0; k < ambient_dim; ++k) {
        x[k] = out[k].v;
        jac.row(k) = out[k].g.transpose();
        hess[k] = out[k].h;
    }
}

void Submanifold::validate(const fields::Chart& chart) const {
    if (ambient_dim != chart.dim)
        throw std::invalid_argument("submanifold: ambient dimension does not match chart");
    if (dim < 1 || dim > ambient_dim)
        throw std::invalid_argument("submanifold: dimension out of range");
    for (int a = 0; a < dim; ++a)
        if (param_res[a] < 16) throw std::invalid_argument("submanifold: parameter resolution < 16");

    // immersion: full-rank Jacobian at every parameter node
    const std::size_t count = param_count();
    Eigen::VectorXd x;
    Eigen::MatrixXd jac;
    double t[4];
    for (std::size_t node = 0; node < count; ++node) {
        param_unpack(node, t);
        frame(t, x, jac);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        const double smin = svd.singularValues().minCoeff();
        if (!(smin > 1e-10))
            throw std::invalid_argument("submanifold '" + name +
                                        "': parametrization is not an immersion at a grid node");
    }

    // embedding at grid scale: distant parameters must not collide in the chart
    const std::size_t sample_target = 1024;
    const std::size_t step = std::max<std::size_t>(1, count / sample_target);
    std::vector<Eigen::VectorXd> pts;
    std::vector<std::size_t> ids;
    for (std::size_t node = 0; node < count; node += step) {
        param_unpack(node, t);
        pts.push_back(point(t));
        ids.push_back(node);
    }
    const double h = chart.max_spacing();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double param_gap = 0.0;
            double ti[4], tj[4];
            param_unpack(ids[i], ti);
            param_unpack(ids[j], tj);
            for (int a = 0; a < dim; ++a) {
                double d = ti[a] - tj[a];
                d -= std::round(d);
                param_gap = std::max(param_gap, std::abs(d));
            }
            if (param_gap < 8.0 * static_cast<double>(step) / param_res[0]) continue;
            if (chart.displacement(pts[i], pts[j]).norm() < 0.5 * h)
                throw std::invalid_argument("submanifold '" + name +
                                            "': self-intersection at grid scale");
        }
    }
}

} // namespace tame::tubular
