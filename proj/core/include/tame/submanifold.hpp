#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tame/expr.hpp"
#include "tame/fields.hpp"
#include "tame/jet.hpp"

namespace tame::tubular {

/// Oriented compact submanifold given by a smooth map from the unit parameter
/// m-torus into a chart. The map is evaluated with second-order jets so frames
/// and curvature data carry no differencing error.
struct Submanifold {
    int ambient_dim = 0;
    int dim = 0;
    double orientation = 1.0;
    std::string name;
    std::array<int, 4> param_res{};

    /// t: m parameter values in [0,1); out: ambient coordinates as jets over t.
    std::function<void(const double* t, Jet* out)> map;

    static Submanifold from_expressions(int ambient_dim, int dim,
                                        const std::vector<std::string>& coords,
                                        const std::array<int, 4>& param_res, double orientation,
                                        std::string name);

    std::size_t param_count() const;
    std::size_t param_stride(int axis) const;
    void param_unpack(std::size_t node, double* t) const;

    Eigen::VectorXd point(const double* t) const;
    /// x = map(t), jac(:, a) = d map / d t_a.
    void frame(const double* t, Eigen::VectorXd& x, Eigen::MatrixXd& jac) const;
    /// Adds hess[k](a, b) = d^2 map_k / d t_a d t_b.
    void frame2(const double* t, Eigen::VectorXd& x, Eigen::MatrixXd& jac,
                std::vector<Eigen::MatrixXd>& hess) const;

    /// Immersion at every parameter node and no self-intersection at grid
    /// scale; throws with a diagnostic otherwise.
    void validate(const fields::Chart& chart) const;
};

} // namespace tame::tubular
