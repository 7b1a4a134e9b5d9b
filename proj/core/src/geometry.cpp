#include "tame/geometry.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

#include "tame/parallel.hpp"

namespace tame::verify {

using fields::Chart;
using fields::MetricField;
using fields::ScalarField;
using tubular::Submanifold;

namespace {

// 4th-order first/second derivative stencils at unit step
constexpr double kD1[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0}; // offsets -2,-1,1,2
constexpr int kOff[4] = {-2, -1, 1, 2};

struct LocalMap {
    // continuous local branch of the parametrization around t0
    const Submanifold& m;
    const Chart& chart;
    Eigen::VectorXd x0;
    double t0[4];

    Eigen::VectorXd operator()(const double* dt) const {
        double t[4];
        for (int a = 0; a < m.dim; ++a) t[a] = t0[a] + dt[a] - std::floor(t0[a] + dt[a]);
        const Eigen::VectorXd x = m.point(t);
        return x0 + chart.displacement(x0, x);
    }
};

Eigen::MatrixXd metric_derivatives(const MetricField& g, const Eigen::VectorXd& x, int axis,
                                   double step) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g.chart.dim, g.chart.dim);
    for (int k = 0; k < 4; ++k) {
        Eigen::VectorXd xs = x;
        xs[axis] += kOff[k] * step;
        acc += (kD1[k] / step) * g.gram_at(g.chart.wrap_point(xs));
    }
    return acc;
}

// Christoffel symbols Gamma[k](i, j) at x from centered differences of g.
std::vector<Eigen::MatrixXd> christoffel(const MetricField& g, const Eigen::VectorXd& x,
                                         double step) {
    const int n = g.chart.dim;
    const Eigen::MatrixXd g0 = g.gram_at(g.chart.wrap_point(x));
    const Eigen::MatrixXd ginv = g0.inverse();
    std::vector<Eigen::MatrixXd> dg(n);
    for (int a = 0; a < n; ++a) dg[a] = metric_derivatives(g, x, a, step);
    std::vector<Eigen::MatrixXd> gamma(n, Eigen::MatrixXd::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int l = 0; l < n; ++l)
                    acc += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                gamma[k](i, j) = 0.5 * acc;
            }
    return gamma;
}

struct FrameData {
    Eigen::VectorXd x0;
    Eigen::MatrixXd tau;                  // n x m
    std::vector<Eigen::MatrixXd> hess;    // per coordinate, m x m won't be used; here per (a,b)
    Eigen::MatrixXd g0;
    Eigen::MatrixXd hinv;
    Eigen::MatrixXd perp;                 // normal projector under g
    std::vector<Eigen::VectorXd> second;  // indexed a*m+b, ambient vectors
};

FrameData frame_data(const Submanifold& m, const MetricField& g, const double* t) {
    const int n = m.ambient_dim;
    const int md = m.dim;
    LocalMap local{m, g.chart, m.point(t), {}};
    for (int a = 0; a < md; ++a) local.t0[a] = t[a];

    FrameData fd;
    fd.x0 = local.x0;
    fd.tau.resize(n, md);
    fd.second.assign(static_cast<std::size_t>(md) * md, Eigen::VectorXd::Zero(n));

    double hp[4];
    for (int a = 0; a < md; ++a) hp[a] = 1.0 / m.param_res[a];

    double dt[4] = {0, 0, 0, 0};
    for (int a = 0; a < md; ++a) {
        Eigen::VectorXd d1 = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < 4; ++k) {
            std::fill(dt, dt + 4, 0.0);
            dt[a] = kOff[k] * hp[a];
            d1 += (kD1[k] / hp[a]) * local(dt);
        }
        fd.tau.col(a) = d1;

        // pure second derivative, 4th order
        static const double c2[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0,
                                     -1.0 / 12.0};
        static const int o2[5] = {-2, -1, 0, 1, 2};
        Eigen::VectorXd d2 = Eigen::VectorXd::Zero(n);
        for (int k = 0; k < 5; ++k) {
            std::fill(dt, dt + 4, 0.0);
            dt[a] = o2[k] * hp[a];
            d2 += (c2[k] / (hp[a] * hp[a])) * local(dt);
        }
        fd.second[static_cast<std::size_t>(a) * md + a] = d2;
    }
    for (int a = 0; a < md; ++a)
        for (int b = a + 1; b < md; ++b) {
            Eigen::VectorXd dd = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    std::fill(dt, dt + 4, 0.0);
                    dt[a] = kOff[i] * hp[a];
                    dt[b] = kOff[j] * hp[b];
                    dd += (kD1[i] / hp[a]) * (kD1[j] / hp[b]) * local(dt);
                }
            fd.second[static_cast<std::size_t>(a) * md + b] = dd;
            fd.second[static_cast<std::size_t>(b) * md + a] = dd;
        }

    fd.g0 = g.gram_at(g.chart.wrap_point(fd.x0));
    const Eigen::MatrixXd h = fd.tau.transpose() * fd.g0 * fd.tau;
    fd.hinv = h.inverse();
    fd.perp = Eigen::MatrixXd::Identity(n, n) - fd.tau * fd.hinv * fd.tau.transpose() * fd.g0;
    return fd;
}

} // namespace

Eigen::VectorXd mean_curvature_at(const Submanifold& m, const MetricField& g, const double* t) {
    const int n = m.ambient_dim;
    const int md = m.dim;
    const FrameData fd = frame_data(m, g, t);
    const auto gamma = christoffel(g, fd.x0, 2e-5);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < md; ++a)
        for (int b = 0; b < md; ++b) {
            Eigen::VectorXd cov = fd.second[static_cast<std::size_t>(a) * md + b];
            for (int k = 0; k < n; ++k)
                cov[k] += fd.tau.col(a).dot(gamma[k] * fd.tau.col(b));
            h += fd.hinv(a, b) * (fd.perp * cov);
        }
    return h;
}

Eigen::MatrixXd mean_curvature(const Submanifold& m, const MetricField& g) {
    const std::size_t count = m.param_count();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), m.ambient_dim);
    parallel_for(count, [&](std::size_t node) {
        double t[4];
        m.param_unpack(node, t);
        out.row(static_cast<Eigen::Index>(node)) = mean_curvature_at(m, g, t).transpose();
    });
    return out;
}

double check_conformal_mc(const Submanifold& m, const MetricField& g, const ScalarField& f) {
    const int n = m.ambient_dim;
    MetricField scaled;
    scaled.chart = g.chart;
    scaled.analytic = [&g, &f](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(f.interpolate(x) * g.gram_at(x));
    };

    const std::size_t count = m.param_count();
    std::vector<double> resid(count);
    parallel_for(count, [&](std::size_t node) {
        double t[4];
        m.param_unpack(node, t);
        const FrameData fd = frame_data(m, g, t);
        const Eigen::VectorXd h = mean_curvature_at(m, g, t);
        const Eigen::VectorXd ht = mean_curvature_at(m, scaled, t);
        const Eigen::VectorXd xw = g.chart.wrap_point(fd.x0);
        const double fv = f.interpolate(xw);
        Eigen::VectorXd grad(n);
        for (int a = 0; a < n; ++a) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) {
                Eigen::VectorXd xs = fd.x0;
                xs[a] += kOff[k] * 1e-4;
                acc += (kD1[k] / 1e-4) * f.interpolate(g.chart.wrap_point(xs));
            }
            grad[a] = acc;
        }
        // raise the index: grad vector under g
        const Eigen::VectorXd gradv = fd.g0.inverse() * grad;
        const Eigen::VectorXd gperp = fd.perp * gradv;
        const Eigen::VectorXd r = fv * ht - h + (m.dim / (2.0 * fv)) * gperp;
        resid[node] = std::sqrt(r.dot(fd.g0 * r));
    });
    double sup = 0.0;
    for (double r : resid) sup = std::max(sup, r);
    return sup;
}

GeodesicPath geodesic_shoot(const MetricField& g, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& v0, double time, double step) {
    const int n = g.chart.dim;
    if (!(step > 0.0) || !(time > 0.0))
        throw std::invalid_argument("geodesic_shoot: time and step must be positive");
    const int steps = static_cast<int>(std::lround(time / step));

    auto accel = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
        const auto gamma = christoffel(g, x, 2e-5);
        Eigen::VectorXd a(n);
        for (int k = 0; k < n; ++k) a[k] = -v.dot(gamma[k] * v);
        return a;
    };
    auto energy = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
        return v.dot(g.gram_at(g.chart.wrap_point(x)) * v);
    };

    GeodesicPath path;
    path.points.resize(steps + 1, n);
    path.velocities.resize(steps + 1, n);
    Eigen::VectorXd x = x0, v = v0;
    const double e0 = energy(x, v);
    double drift = 0.0;
    path.points.row(0) = x.transpose();
    path.velocities.row(0) = v.transpose();
    for (int i = 0; i < steps; ++i) {
        const Eigen::VectorXd k1x = v, k1v = accel(x, v);
        const Eigen::VectorXd k2x = v + 0.5 * step * k1v,
                              k2v = accel(x + 0.5 * step * k1x, v + 0.5 * step * k1v);
        const Eigen::VectorXd k3x = v + 0.5 * step * k2v,
                              k3v = accel(x + 0.5 * step * k2x, v + 0.5 * step * k2v);
        const Eigen::VectorXd k4x = v + step * k3v, k4v = accel(x + step * k3x, v + step * k3v);
        x += step / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        path.points.row(i + 1) = x.transpose();
        path.velocities.row(i + 1) = v.transpose();
        drift = std::max(drift, std::abs(energy(x, v) - e0) / std::max(1e-300, std::abs(e0)));
    }
    path.energy_drift = drift;
    if (drift > 1e-4)
        throw std::runtime_error("geodesic_shoot: energy drift exceeds 1e-4; step too large");
    return path;
}

double geodesic_distance(const MetricField& g, const Submanifold& a, const Submanifold& b) {
    const Chart& ch = g.chart;
    const int n = ch.dim;
    const std::size_t count = ch.node_count();

    auto seg_len = [&](std::size_t from, const Eigen::VectorXd& to) {
        const Eigen::VectorXd p = ch.point(from);
        const Eigen::VectorXd e = ch.displacement(p, to);
        const Eigen::MatrixXd gm = g.at(from).gram;
        return std::sqrt(std::max(0.0, e.dot(gm * e)));
    };
    auto edge_len = [&](std::size_t from, std::size_t to) {
        const Eigen::VectorXd e = ch.displacement(ch.point(from), ch.point(to));
        const Eigen::MatrixXd gm = 0.5 * (g.at(from).gram + g.at(to).gram);
        return std::sqrt(std::max(0.0, e.dot(gm * e)));
    };
    auto cell_nodes = [&](const Eigen::VectorXd& p, int radius, std::vector<std::size_t>& out) {
        out.clear();
        int base[kMaxDim];
        for (int ax = 0; ax < n; ++ax)
            base[ax] = static_cast<int>(std::floor(p[ax] / ch.spacing(ax)));
        int offs[kMaxDim];
        std::fill(offs, offs + n, -radius);
        for (;;) {
            int idx[kMaxDim];
            bool ok = true;
            for (int ax = 0; ax < n; ++ax) {
                int v = base[ax] + offs[ax];
                const int r = ch.resolution[ax];
                if (ch.topology == fields::Topology::periodic) v = ((v % r) + r) % r;
                else if (v < 0 || v >= r) { ok = false; break; }
                idx[ax] = v;
            }
            if (ok) out.push_back(ch.node_pack(idx));
            int ax = n - 1;
            while (ax >= 0 && ++offs[ax] > radius) offs[ax--] = -radius;
            if (ax < 0) break;
        }
    };

    std::vector<double> dist(count, std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    std::vector<std::size_t> near;
    const std::size_t a_count = a.param_count();
    for (std::size_t s = 0; s < a_count; ++s) {
        double t[4];
        a.param_unpack(s, t);
        const Eigen::VectorXd p = ch.wrap_point(a.point(t));
        cell_nodes(p, 1, near);
        for (std::size_t node : near) {
            const double d0 = seg_len(node, p);
            if (d0 < dist[node]) {
                dist[node] = d0;
                heap.push({d0, node});
            }
        }
    }

    // Dijkstra over the full box stencil
    std::vector<std::uint8_t> done(count, 0);
    while (!heap.empty()) {
        const auto [dv, v] = heap.top();
        heap.pop();
        if (done[v] || dv > dist[v]) continue;
        done[v] = 1;
        int idx[kMaxDim];
        ch.node_unpack(v, idx);
        int offs[kMaxDim];
        std::fill(offs, offs + n, -1);
        for (;;) {
            bool nonzero = false;
            int jdx[kMaxDim];
            bool ok = true;
            for (int ax = 0; ax < n; ++ax) {
                if (offs[ax] != 0) nonzero = true;
                int w = idx[ax] + offs[ax];
                const int r = ch.resolution[ax];
                if (ch.topology == fields::Topology::periodic) w = ((w % r) + r) % r;
                else if (w < 0 || w >= r) { ok = false; break; }
                jdx[ax] = w;
            }
            if (ok && nonzero) {
                const std::size_t u = ch.node_pack(jdx);
                if (!done[u]) {
                    const double cand = dist[v] + edge_len(v, u);
                    if (cand < dist[u]) {
                        dist[u] = cand;
                        heap.push({cand, u});
                    }
                }
            }
            int ax = n - 1;
            while (ax >= 0 && ++offs[ax] > 1) offs[ax--] = -1;
            if (ax < 0) break;
        }
    }

    // one local smoothing pass over a 5^n box, ascending order
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return dist[l] < dist[r]; });
    for (std::size_t v : order) {
        cell_nodes(ch.point(v), 2, near);
        for (std::size_t w : near) {
            if (w == v) continue;
            const double cand = dist[w] + edge_len(w, v);
            if (cand < dist[v]) dist[v] = cand;
        }
    }

    double best = std::numeric_limits<double>::infinity();
    const std::size_t b_count = b.param_count();
    for (std::size_t s = 0; s < b_count; ++s) {
        double t[4];
        b.param_unpack(s, t);
        const Eigen::VectorXd p = ch.wrap_point(b.point(t));
        cell_nodes(p, 1, near);
        for (std::size_t node : near) best = std::min(best, dist[node] + seg_len(node, p));
    }
    return best;
}

} // namespace tame::verify
