#include "tame/fields.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "tame/parallel.hpp"

namespace tame::fields {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Trigonometric differentiation matrix on an equally spaced periodic grid.
const Eigen::MatrixXd& diff_matrix(int n, double length) {
    static std::mutex mu;
    static std::map<std::pair<int, long long>, Eigen::MatrixXd> cache;
    const long long key_l = static_cast<long long>(length * (1LL << 40));
    std::lock_guard lock(mu);
    auto it = cache.find({n, key_l});
    if (it != cache.end()) return it->second;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    const bool even = (n % 2) == 0;
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            if (j == k) continue;
            const int diff = j - k;
            const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
            const double arg = kPi * diff / n;
            d(j, k) = even ? (kPi / length) * sign / std::tan(arg)
                           : (kPi / length) * sign / std::sin(arg);
        }
    }
    it = cache.emplace(std::make_pair(n, key_l), std::move(d)).first;
    return it->second;
}

// Band-limited cardinal weights for one periodic axis.
void trig_weights(int n, double length, double x, Eigen::VectorXd& w) {
    w.resize(n);
    const double h = length / n;
    const bool even = (n % 2) == 0;
    for (int j = 0; j < n; ++j) {
        double u = (x - j * h) / length;
        u -= std::round(u);
        const double s = std::sin(kPi * u);
        if (std::abs(s) < 1e-14) {
            w[j] = 1.0;
            continue;
        }
        w[j] = even ? std::sin(n * kPi * u) * std::cos(kPi * u) / (n * s)
                    : std::sin(n * kPi * u) / (n * s);
    }
}

template <typename Fetch>
double interp_periodic(const Chart& chart, const Eigen::VectorXd& x, Fetch fetch) {
    // tensor-product cardinal interpolation; exact on band-limited samples
    const int n = chart.dim;
    std::array<Eigen::VectorXd, kMaxDim> w;
    for (int a = 0; a < n; ++a) trig_weights(chart.resolution[a], chart.extent[a], x[a], w[a]);
    double acc = 0.0;
    int idx[kMaxDim] = {0};
    while (true) {
        double ww = 1.0;
        for (int a = 0; a < n; ++a) ww *= w[a][idx[a]];
        if (ww != 0.0) acc += ww * fetch(chart.node_pack(idx));
        int a = n - 1;
        while (a >= 0 && ++idx[a] == chart.resolution[a]) idx[a--] = 0;
        if (a < 0) break;
    }
    return acc;
}

template <typename Fetch>
double interp_box(const Chart& chart, const Eigen::VectorXd& x, Fetch fetch) {
    const int n = chart.dim;
    int base[kMaxDim];
    double frac[kMaxDim];
    for (int a = 0; a < n; ++a) {
        const double h = chart.spacing(a);
        double u = std::clamp(x[a], 0.0, chart.extent[a]) / h;
        int b = static_cast<int>(std::floor(u));
        b = std::clamp(b, 0, chart.resolution[a] - 2);
        base[a] = b;
        frac[a] = u - b;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        double w = 1.0;
        int idx[kMaxDim];
        for (int a = 0; a < n; ++a) {
            const bool hi = (corner >> a) & 1;
            idx[a] = base[a] + (hi ? 1 : 0);
            w *= hi ? frac[a] : 1.0 - frac[a];
        }
        if (w != 0.0) acc += w * fetch(chart.node_pack(idx));
    }
    return acc;
}

template <typename Fetch>
double interp_any(const Chart& chart, const Eigen::VectorXd& x, Fetch fetch) {
    return chart.topology == Topology::periodic ? interp_periodic(chart, x, fetch)
                                                : interp_box(chart, x, fetch);
}

double measure_second_differences(const Chart& chart, const Eigen::MatrixXd& values) {
    double bound = 0.0;
    const std::size_t count = chart.node_count();
    int idx[kMaxDim];
    for (std::size_t node = 0; node < count; ++node) {
        chart.node_unpack(node, idx);
        for (int a = 0; a < chart.dim; ++a) {
            const int res = chart.resolution[a];
            int lo = idx[a] - 1;
            int hi = idx[a] + 1;
            if (chart.topology == Topology::periodic) {
                lo = (lo + res) % res;
                hi = hi % res;
            } else if (lo < 0 || hi >= res) {
                continue;
            }
            int jdx[kMaxDim];
            std::copy(idx, idx + chart.dim, jdx);
            jdx[a] = lo;
            const std::size_t nlo = chart.node_pack(jdx);
            jdx[a] = hi;
            const std::size_t nhi = chart.node_pack(jdx);
            for (int c = 0; c < values.cols(); ++c) {
                const double dd = values(nhi, c) - 2.0 * values(node, c) + values(nlo, c);
                bound = std::max(bound, std::abs(dd));
            }
        }
    }
    return bound;
}

} // namespace

double ScalarField::interpolate(const Eigen::VectorXd& x) const {
    if (analytic) return analytic(x);
    return interp_any(chart, x, [&](std::size_t n) { return values[n]; });
}

exterior::MultiCovector FormField::at(std::size_t node) const {
    exterior::MultiCovector phi;
    phi.dim = chart.dim;
    phi.degree = degree;
    phi.coeffs = values.row(node).transpose();
    return phi;
}

Eigen::VectorXd FormField::interpolate(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(values.cols());
    for (int c = 0; c < values.cols(); ++c)
        out[c] = interp_any(chart, x, [&](std::size_t n) { return values(n, c); });
    return out;
}

Eigen::VectorXd FormField::coeffs_at(const Eigen::VectorXd& x) const {
    if (analytic) return analytic(x);
    return interpolate(x);
}

MetricField MetricField::flat(const Chart& chart) {
    MetricField g;
    g.chart = chart;
    const int n = chart.dim;
    g.values.setZero(chart.node_count(), n * n);
    for (int i = 0; i < n; ++i) g.values.col(i * n + i).setOnes();
    g.analytic = [n](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(n, n); };
    g.smoothness_bound = 0.0;
    return g;
}

exterior::PointMetric MetricField::at(std::size_t node) const {
    const int n = chart.dim;
    exterior::PointMetric g;
    g.dim = n;
    g.gram.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.gram(i, j) = values(node, i * n + j);
    return g;
}

Eigen::MatrixXd MetricField::gram_at(const Eigen::VectorXd& x) const {
    const int n = chart.dim;
    if (analytic) return analytic(x);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            g(i, j) = interp_any(chart, x, [&](std::size_t node) { return values(node, i * n + j); });
    return g;
}

ScalarField sample_scalar(const Chart& chart, std::function<double(const Eigen::VectorXd&)> fn) {
    chart.validate();
    ScalarField f;
    f.chart = chart;
    f.values.resize(chart.node_count());
    parallel_for(chart.node_count(), [&](std::size_t node) { f.values[node] = fn(chart.point(node)); });
    f.analytic = std::move(fn);
    return f;
}

FormField sample_form(const Chart& chart, int degree,
                      std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn) {
    chart.validate();
    FormField f;
    f.chart = chart;
    f.degree = degree;
    f.values.resize(chart.node_count(), static_cast<int>(binomial(chart.dim, degree)));
    parallel_for(chart.node_count(),
                 [&](std::size_t node) { f.values.row(node) = fn(chart.point(node)).transpose(); });
    f.analytic = std::move(fn);
    return f;
}

MetricField sample_metric(const Chart& chart, std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> fn) {
    chart.validate();
    MetricField g;
    g.chart = chart;
    const int n = chart.dim;
    g.values.resize(chart.node_count(), n * n);
    parallel_for(chart.node_count(), [&](std::size_t node) {
        const Eigen::MatrixXd m = fn(chart.point(node));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g.values(node, i * n + j) = m(i, j);
    });
    g.analytic = std::move(fn);
    g.smoothness_bound = measure_second_differences(chart, g.values);
    return g;
}

Eigen::VectorXd axis_derivative(const Chart& chart, const Eigen::VectorXd& column, int axis) {
    const int res = chart.resolution[axis];
    const std::size_t stride = chart.axis_stride(axis);
    const std::size_t lines = chart.node_count() / res;
    Eigen::VectorXd out(column.size());

    if (chart.topology == Topology::periodic) {
        const Eigen::MatrixXd& d = diff_matrix(res, chart.extent[axis]);
        parallel_for(lines, [&](std::size_t line) {
            // base node of this line: distribute `line` over all axes except `axis`
            const std::size_t inner = stride;
            const std::size_t outer_idx = line / inner;
            const std::size_t inner_idx = line % inner;
            const std::size_t base = outer_idx * inner * res + inner_idx;
            Eigen::VectorXd vals(res);
            for (int k = 0; k < res; ++k) vals[k] = column[base + k * stride];
            const Eigen::VectorXd dv = d * vals;
            for (int k = 0; k < res; ++k) out[base + k * stride] = dv[k];
        });
        return out;
    }

    const double h = chart.spacing(axis);
    parallel_for(lines, [&](std::size_t line) {
        const std::size_t inner = stride;
        const std::size_t outer_idx = line / inner;
        const std::size_t inner_idx = line % inner;
        const std::size_t base = outer_idx * inner * res + inner_idx;
        auto v = [&](int k) { return column[base + k * stride]; };
        for (int k = 0; k < res; ++k) {
            if (k < 3 || k >= res - 3) {
                out[base + k * stride] = 0.0; // support is required to clear the margin
                continue;
            }
            out[base + k * stride] = (45.0 * (v(k + 1) - v(k - 1)) - 9.0 * (v(k + 2) - v(k - 2)) +
                                      (v(k + 3) - v(k - 3))) /
                                     (60.0 * h);
        }
    });
    return out;
}

FormField d_exterior(const FormField& omega) {
    const Chart& chart = omega.chart;
    const int n = chart.dim;
    const int m = omega.degree;
    if (m > n - 1) throw std::invalid_argument("d_exterior: degree must be <= dim - 1");

    if (chart.topology == Topology::box) {
        // compactly supported inside the margin, otherwise the stencil is invalid
        int idx[kMaxDim];
        const std::size_t count = chart.node_count();
        for (std::size_t node = 0; node < count; ++node) {
            chart.node_unpack(node, idx);
            bool in_margin = false;
            for (int a = 0; a < n; ++a) {
                const int mn = chart.margin_nodes(a);
                if (idx[a] < mn || idx[a] >= chart.resolution[a] - mn) in_margin = true;
            }
            if (in_margin && omega.values.row(node).cwiseAbs().maxCoeff() > 1e-13)
                throw std::invalid_argument(
                    "d_exterior: box-chart form has unsupported near-boundary support");
        }
    }

    const auto& tin = multi_indices(n, m);
    const auto& tout = multi_indices(n, m + 1);
    FormField df;
    df.chart = chart;
    df.degree = m + 1;
    df.values.setZero(chart.node_count(), tout.count());
    for (int c = 0; c < tin.count(); ++c) {
        const std::uint32_t mask = tin.mask(c);
        for (int a = 0; a < n; ++a) {
            const std::uint32_t bit = 1u << a;
            if (mask & bit) continue;
            const Eigen::VectorXd der = axis_derivative(chart, omega.values.col(c), a);
            const int target = tout.rank_of_mask(mask | bit);
            df.values.col(target) += merge_sign(bit, mask) * der;
        }
    }
    return df;
}

} // namespace tame::fields
