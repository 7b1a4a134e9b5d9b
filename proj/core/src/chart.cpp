#include "tame/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace tame::fields {

Chart Chart::torus(int n, int res, double extent) {
    Chart c;
    c.dim = n;
    c.topology = Topology::periodic;
    for (int a = 0; a < n; ++a) {
        c.resolution[a] = res;
        c.extent[a] = extent;
    }
    c.validate();
    return c;
}

Chart Chart::box(int n, int res, double extent, double margin) {
    Chart c;
    c.dim = n;
    c.topology = Topology::box;
    c.margin = margin;
    for (int a = 0; a < n; ++a) {
        c.resolution[a] = res;
        c.extent[a] = extent;
    }
    c.validate();
    return c;
}

void Chart::validate() const {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("chart: dim must be in [1, 8]");
    for (int a = 0; a < dim; ++a) {
        if (resolution[a] < 16) throw std::invalid_argument("chart: resolution must be >= 16 per axis");
        if (!(extent[a] > 0.0)) throw std::invalid_argument("chart: extent must be positive");
        if (!(spacing(a) > 0.0)) throw std::invalid_argument("chart: spacing must be positive");
    }
    if (topology == Topology::box && (margin <= 0.0 || margin >= 0.5))
        throw std::invalid_argument("chart: box margin fraction must be in (0, 0.5)");
}

double Chart::max_spacing() const {
    double h = 0.0;
    for (int a = 0; a < dim; ++a) h = std::max(h, spacing(a));
    return h;
}

std::size_t Chart::node_count() const {
    std::size_t c = 1;
    for (int a = 0; a < dim; ++a) c *= static_cast<std::size_t>(resolution[a]);
    return c;
}

void Chart::node_unpack(std::size_t node, int* idx) const {
    for (int a = dim - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(node % resolution[a]);
        node /= resolution[a];
    }
}

std::size_t Chart::node_pack(const int* idx) const {
    std::size_t node = 0;
    for (int a = 0; a < dim; ++a) node = node * resolution[a] + static_cast<std::size_t>(idx[a]);
    return node;
}

std::size_t Chart::axis_stride(int axis) const {
    std::size_t s = 1;
    for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(resolution[a]);
    return s;
}

Eigen::VectorXd Chart::point(std::size_t node) const {
    int idx[kMaxDim];
    node_unpack(node, idx);
    Eigen::VectorXd x(dim);
    for (int a = 0; a < dim; ++a) x[a] = idx[a] * spacing(a);
    return x;
}

double Chart::wrap_delta(double d, int axis) const {
    if (topology != Topology::periodic) return d;
    const double l = extent[axis];
    return d - l * std::round(d / l);
}

Eigen::VectorXd Chart::displacement(const Eigen::VectorXd& from, const Eigen::VectorXd& to) const {
    Eigen::VectorXd d = to - from;
    for (int a = 0; a < dim; ++a) d[a] = wrap_delta(d[a], a);
    return d;
}

Eigen::VectorXd Chart::wrap_point(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = x;
    if (topology == Topology::periodic) {
        for (int a = 0; a < dim; ++a) {
            const double l = extent[a];
            out[a] -= l * std::floor(out[a] / l);
            if (out[a] >= l) out[a] = 0.0;
        }
    }
    return out;
}

int Chart::margin_nodes(int axis) const {
    return std::max(3, static_cast<int>(std::lround(margin * resolution[axis])));
}

bool Chart::same_grid(const Chart& o) const {
    if (dim != o.dim || topology != o.topology) return false;
    for (int a = 0; a < dim; ++a)
        if (resolution[a] != o.resolution[a] || extent[a] != o.extent[a]) return false;
    return true;
}

} // namespace tame::fields
