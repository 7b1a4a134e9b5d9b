#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>

#include "tame/exterior.hpp"
#include "tame/multiindex.hpp"

namespace tame::tubular {
struct Submanifold;
}

namespace tame::fields {

enum class Topology { periodic, box };

/// Structured coordinate patch: a flat torus (all axes wrap) or a padded box.
/// Nodes are laid out row-major over axes with the last axis fastest.
struct Chart {
    int dim = 0;
    Topology topology = Topology::periodic;
    std::array<int, kMaxDim> resolution{};
    std::array<double, kMaxDim> extent{};
    double margin = 0.1; // box charts: supported-field clearance, fraction per side

    static Chart torus(int n, int res, double extent = 1.0);
    static Chart box(int n, int res, double extent = 1.0, double margin = 0.1);

    void validate() const;

    double spacing(int axis) const {
        return topology == Topology::periodic ? extent[axis] / resolution[axis]
                                              : extent[axis] / (resolution[axis] - 1);
    }
    double max_spacing() const;
    std::size_t node_count() const;

    void node_unpack(std::size_t node, int* idx) const;
    std::size_t node_pack(const int* idx) const;
    std::size_t axis_stride(int axis) const;
    Eigen::VectorXd point(std::size_t node) const;

    /// Minimal representative of (to - from); wraps periodic axes.
    Eigen::VectorXd displacement(const Eigen::VectorXd& from, const Eigen::VectorXd& to) const;
    double wrap_delta(double d, int axis) const;
    /// Representative of x inside the fundamental domain (periodic axes only).
    Eigen::VectorXd wrap_point(const Eigen::VectorXd& x) const;
    /// Margin band width in nodes for box charts.
    int margin_nodes(int axis) const;

    bool same_grid(const Chart& o) const;
};

struct ScalarField {
    Chart chart;
    Eigen::VectorXd values;
    std::function<double(const Eigen::VectorXd&)> analytic;

    double interpolate(const Eigen::VectorXd& x) const;
};

struct FormField {
    Chart chart;
    int degree = 0;
    Eigen::MatrixXd values; // node_count x C(n, degree), lexicographic coefficient order
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> analytic;

    exterior::MultiCovector at(std::size_t node) const;
    Eigen::VectorXd interpolate(const Eigen::VectorXd& x) const;
    /// Evaluate through the analytic closure when present, else interpolate.
    Eigen::VectorXd coeffs_at(const Eigen::VectorXd& x) const;
};

struct MetricField {
    Chart chart;
    Eigen::MatrixXd values; // node_count x dim*dim, row-major per node
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> analytic;
    double smoothness_bound = 0.0; // max second difference recorded at construction

    static MetricField flat(const Chart& chart);

    exterior::PointMetric at(std::size_t node) const;
    Eigen::MatrixXd gram_at(const Eigen::VectorXd& x) const;
};

ScalarField sample_scalar(const Chart& chart, std::function<double(const Eigen::VectorXd&)> fn);
FormField sample_form(const Chart& chart, int degree,
                      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn);
MetricField sample_metric(const Chart& chart, std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> fn);

/// Exterior derivative: spectral differentiation on periodic charts,
/// 6th-order central differences on box charts (support must clear the margin).
FormField d_exterior(const FormField& omega);

/// Per-axis partial derivative of one sampled column (helper shared with d_exterior).
Eigen::VectorXd axis_derivative(const Chart& chart, const Eigen::VectorXd& column, int axis);

/// Pullback quadrature of phi over the oriented parametrized submanifold.
double integrate_form(const FormField& phi, const tubular::Submanifold& m);

/// Riemannian volume of the submanifold under the metric field.
double volume(const tubular::Submanifold& m, const MetricField& g);

/// Closed constant-coefficient k-forms with unit periods: int_{M_i} phi_j = delta_ij.
/// Throws if the period matrix over the constant-form basis is rank deficient.
std::vector<FormField> solve_dual_forms(const std::vector<const tubular::Submanifold*>& collection,
                                        const Chart& chart);

/// Period matrix P_ij = int_{M_i} dx^{I_j} over the constant closed k-form basis.
Eigen::MatrixXd period_matrix(const std::vector<const tubular::Submanifold*>& collection,
                              const Chart& chart);

void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const FormField& f);
void write_field(const std::string& path, const MetricField& f);

enum class FieldKind { scalar, form, metric };
struct AnyField {
    FieldKind kind;
    ScalarField scalar;
    FormField form;
    MetricField metric;
};
AnyField read_field(const std::string& path);

} // namespace tame::fields
