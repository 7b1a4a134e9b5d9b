#include "tame/tubular.hpp"

#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>

#include "tame/parallel.hpp"
#include "tame/paramfourier.hpp"

namespace tame::tubular {

using fields::Chart;
using fields::FormField;
using fields::MetricField;
using fields::ScalarField;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

void gauss_legendre(int k, std::vector<double>& nodes01, std::vector<double>& weights01) {
    nodes01.resize(k);
    weights01.resize(k);
    for (int i = 0; i < k; ++i) {
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (k + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= k; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = k * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes01[i] = 0.5 * (1.0 - x); // reversed order is irrelevant
        weights01[i] = 1.0 / ((1.0 - x * x) * pp * pp);
    }
}

bool metric_is_flat(const MetricField& g) {
    const int n = g.chart.dim;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double target = i == j ? 1.0 : 0.0;
            if ((g.values.col(i * n + j).array() - target).abs().maxCoeff() > 1e-14) return false;
        }
    return true;
}

// Orthonormal basis of the orthogonal complement of the columns of tau.
Eigen::MatrixXd normal_complement(const Eigen::MatrixXd& tau) {
    const int n = static_cast<int>(tau.rows());
    const int m = static_cast<int>(tau.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(tau);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - m);
}


} // namespace

// ---------------------------------------------------------------------------
// atlas construction
// ---------------------------------------------------------------------------

int TubularAtlas::nearest_sample(const Eigen::VectorXd& p) const {
    const Chart& ch = chart();
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sample_pts.rows(); ++i) {
        const Eigen::VectorXd d = ch.displacement(sample_pts.row(i).transpose(), p);
        const double d2 = d.squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

void TubularAtlas::fill_local_frames(Local& loc) const {
    const int n = base.ambient_dim;
    const int m = base.dim;
    const Eigen::MatrixXd gram = metric.gram_at(chart().wrap_point(loc.foot));
    const Eigen::MatrixXd& tau = loc.tangent;

    if (std::abs(shear_theta - 1.5707963267948966) < 1e-14) {
        // fiber = metric-orthogonal complement of the tangent space at the foot
        const Eigen::MatrixXd tgt = tau * (tau.transpose() * gram * tau).inverse() *
                                    tau.transpose() * gram;
        loc.fiber_projector = Eigen::MatrixXd::Identity(n, n) - tgt;
        return;
    }
    // sheared fibers (flat curves only): span { sin(theta) nu_1 + cos(theta) tau_hat, nu_2, ... }
    const Eigen::VectorXd that = tau.col(0).normalized();
    const Eigen::MatrixXd nu = normal_complement(tau);
    Eigen::MatrixXd bf(n, n - m);
    bf.col(0) = std::sin(shear_theta) * nu.col(0) + std::cos(shear_theta) * that;
    for (int k = 1; k < n - m; ++k) bf.col(k) = nu.col(k);
    loc.fiber_projector = bf * (bf.transpose() * bf).inverse() * bf.transpose();
}

TubularAtlas::Local TubularAtlas::locate_newton(const Eigen::VectorXd& p, const double* t_start) const {
    const Chart& ch = chart();
    const int n = base.ambient_dim;
    const int m = base.dim;
    Local loc;
    Eigen::VectorXd t(m);
    if (t_start) {
        for (int a = 0; a < m; ++a) t[a] = t_start[a];
    } else {
        const int s = nearest_sample(p);
        t = sample_ts.row(s).transpose();
    }

    Eigen::VectorXd x;
    Eigen::MatrixXd jac;
    std::vector<Eigen::MatrixXd> hess;
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd y(n);
    double ta[4];
    for (int iter = 0; iter < 60; ++iter) {
        for (int i = 0; i < m; ++i) ta[i] = t[i] - std::floor(t[i]);
        base.frame2(ta, x, jac, hess);
        y = ch.displacement(x, p);
        Eigen::VectorXd rhs = jac.transpose() * y;
        a = jac.transpose() * jac;
        for (int k = 0; k < n; ++k) a -= y[k] * hess[k];
        const Eigen::VectorXd dt = a.fullPivLu().solve(rhs);
        t += dt;
        if (dt.cwiseAbs().maxCoeff() < 1e-14) break;
    }
    for (int i = 0; i < m; ++i) ta[i] = t[i] - std::floor(t[i]);
    base.frame2(ta, x, jac, hess);
    y = ch.displacement(x, p);
    a = jac.transpose() * jac;
    for (int k = 0; k < n; ++k) a -= y[k] * hess[k];

    loc.t = Eigen::Map<Eigen::VectorXd>(ta, m);
    loc.foot = ch.wrap_point(x);
    loc.y = y;
    loc.dist = y.norm();
    loc.inside = loc.dist < epsilon;
    loc.tangent = jac;
    loc.dtdp = a.fullPivLu().solve(jac.transpose());
    loc.focal_det = a.determinant() / std::max(1e-300, (jac.transpose() * jac).determinant());
    fill_local_frames(loc);

    if (std::abs(shear_theta - 1.5707963267948966) >= 1e-14 && m == 1 && n == 2) {
        // re-solve the foot along sheared straight fibers p = c(t) + r b(t)
        // with b = sin(theta) nu + cos(theta) tau_hat; everything analytic in
        // the curve jets so the sheared projection stays machine precision
        auto fiber_frame = [&](double tt, Eigen::VectorXd& cx, Eigen::VectorXd& b,
                               Eigen::VectorXd& bprime, Eigen::VectorXd& cprime) {
            double targ = tt - std::floor(tt);
            Eigen::MatrixXd cj;
            std::vector<Eigen::MatrixXd> chess;
            base.frame2(&targ, cx, cj, chess);
            cprime = cj.col(0);
            Eigen::VectorXd cpp(2);
            cpp << chess[0](0, 0), chess[1](0, 0);
            const double speed = cprime.norm();
            const Eigen::VectorXd that = cprime / speed;
            const Eigen::VectorXd nu = Eigen::Vector2d(-that[1], that[0]);
            const Eigen::VectorXd that_prime =
                (cpp - that * that.dot(cpp)) / speed; // P_perp c'' / |c'|
            const Eigen::VectorXd nu_prime = Eigen::Vector2d(-that_prime[1], that_prime[0]);
            b = std::sin(shear_theta) * nu + std::cos(shear_theta) * that;
            bprime = std::sin(shear_theta) * nu_prime + std::cos(shear_theta) * that_prime;
        };
        Eigen::Vector2d u(loc.t[0], 0.0); // (t, r)
        Eigen::VectorXd cx, b, bprime, cprime;
        Eigen::Matrix2d jacfull;
        for (int iter = 0; iter < 60; ++iter) {
            fiber_frame(u[0], cx, b, bprime, cprime);
            const Eigen::VectorXd resid = -ch.displacement(cx + u[1] * b, p);
            jacfull.col(0) = cprime + u[1] * bprime;
            jacfull.col(1) = b;
            const Eigen::Vector2d du = jacfull.fullPivLu().solve(-resid);
            u += du;
            if (du.cwiseAbs().maxCoeff() < 1e-14) break;
        }
        fiber_frame(u[0], cx, b, bprime, cprime);
        loc.t[0] = u[0] - std::floor(u[0]);
        loc.foot = ch.wrap_point(cx);
        loc.tangent = cprime;
        jacfull.col(0) = cprime + u[1] * bprime;
        jacfull.col(1) = b;
        loc.dtdp = jacfull.inverse().topRows(1);
        // radial data along the sheared fibers, kept consistent with dtdp so
        // that bump cutoffs of the radius differentiate exactly
        loc.y = ch.displacement(loc.foot, p);
        loc.dist = loc.y.norm();
        loc.inside = loc.dist < epsilon;
        fill_local_frames(loc);
    } else if (std::abs(shear_theta - 1.5707963267948966) >= 1e-14) {
        throw std::runtime_error("sheared fibers are implemented for curves in 2d charts only");
    }
    return loc;
}

TubularAtlas::Local TubularAtlas::locate_gridded(const Eigen::VectorXd& p) const {
    // fast-marched atlases: nearest node data with a single Newton polish under
    // the flat proxy; splitting transported from the foot (O(dist) error)
    const Chart& ch = chart();
    const int n = base.ambient_dim;
    int idx[kMaxDim];
    for (int a = 0; a < n; ++a) {
        int i = static_cast<int>(std::lround(p[a] / ch.spacing(a)));
        const int r = ch.resolution[a];
        if (ch.topology == fields::Topology::periodic) i = ((i % r) + r) % r;
        else i = std::clamp(i, 0, r - 1);
        idx[a] = i;
    }
    const std::size_t node = ch.node_pack(idx);
    double tstart[4];
    for (int a = 0; a < base.dim; ++a) tstart[a] = proj(node, a);
    Local loc = locate_newton(p, tstart);
    loc.dist = dist.interpolate(ch.wrap_point(p));
    loc.inside = loc.dist < epsilon;
    return loc;
}

TubularAtlas::Local TubularAtlas::locate(const Eigen::VectorXd& p) const {
    if (fast_marched) return locate_gridded(p);
    if (proj.rows() == static_cast<Eigen::Index>(chart().node_count())) {
        // warm start from the nearest node's stored parameter; the dense
        // search is only needed while the grid is being built
        const Chart& ch = chart();
        int idx[kMaxDim];
        for (int a = 0; a < ch.dim; ++a) {
            int i = static_cast<int>(std::lround(p[a] / ch.spacing(a)));
            const int r = ch.resolution[a];
            if (ch.topology == fields::Topology::periodic) i = ((i % r) + r) % r;
            else i = std::clamp(i, 0, r - 1);
            idx[a] = i;
        }
        const std::size_t node = ch.node_pack(idx);
        double t_start[4];
        for (int a = 0; a < base.dim; ++a) t_start[a] = proj(node, a);
        return locate_newton(p, t_start);
    }
    return locate_newton(p, nullptr);
}

double TubularAtlas::grid_dist_hint(const Eigen::VectorXd& p) const {
    const Chart& ch = chart();
    int idx[kMaxDim];
    for (int a = 0; a < ch.dim; ++a) {
        int i = static_cast<int>(std::lround(p[a] / ch.spacing(a)));
        const int r = ch.resolution[a];
        if (ch.topology == fields::Topology::periodic) i = ((i % r) + r) % r;
        else i = std::clamp(i, 0, r - 1);
        idx[a] = i;
    }
    return dist.values[static_cast<Eigen::Index>(ch.node_pack(idx))];
}

namespace {

void fast_march(TubularAtlas& atlas) {
    const Chart& ch = atlas.chart();
    const int n = ch.dim;
    const std::size_t count = ch.node_count();
    const int m = atlas.base.dim;

    std::vector<double> d(count, std::numeric_limits<double>::infinity());
    std::vector<std::uint8_t> accepted(count, 0);
    atlas.proj.setZero(static_cast<Eigen::Index>(count), m);

    // seed: nodes within a few spacings of the sampled image, local metric norm
    const double seed_radius = 3.0 * ch.max_spacing();
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (std::size_t node = 0; node < count; ++node) {
        const Eigen::VectorXd p = ch.point(node);
        double best = std::numeric_limits<double>::infinity();
        int best_s = -1;
        for (int s = 0; s < atlas.sample_pts.rows(); ++s) {
            const Eigen::VectorXd dy = ch.displacement(atlas.sample_pts.row(s).transpose(), p);
            if (dy.norm() > seed_radius) continue;
            const Eigen::MatrixXd g = atlas.metric.at(node).gram;
            const double dd = std::sqrt(dy.dot(g * dy));
            if (dd < best) {
                best = dd;
                best_s = s;
            }
        }
        if (best_s >= 0) {
            d[node] = best;
            atlas.proj.row(node) = atlas.sample_ts.row(best_s);
            heap.push({best, node});
        }
    }

    // 2nd-order upwind updates, diagonal metric terms
    auto solve_node = [&](std::size_t node) {
        int idx[kMaxDim];
        ch.node_unpack(node, idx);
        const Eigen::MatrixXd ginv = atlas.metric.at(node).gram.inverse();
        double qa[kMaxDim], ca[kMaxDim];
        int used = 0;
        double best_neighbor = std::numeric_limits<double>::infinity();
        std::size_t donor = node;
        for (int a = 0; a < n; ++a) {
            double q = std::numeric_limits<double>::infinity();
            double tau = ch.spacing(a);
            for (int dir = -1; dir <= 1; dir += 2) {
                int j1[kMaxDim], j2[kMaxDim];
                std::copy(idx, idx + n, j1);
                std::copy(idx, idx + n, j2);
                j1[a] += dir;
                j2[a] += 2 * dir;
                const int r = ch.resolution[a];
                auto wrapi = [&](int v) { return ((v % r) + r) % r; };
                if (ch.topology == fields::Topology::periodic) {
                    j1[a] = wrapi(j1[a]);
                    j2[a] = wrapi(j2[a]);
                } else if (j1[a] < 0 || j1[a] >= r) {
                    continue;
                }
                const std::size_t n1 = ch.node_pack(j1);
                if (!accepted[n1]) continue;
                double cand = d[n1];
                double tcand = ch.spacing(a);
                bool second = false;
                if (ch.topology == fields::Topology::periodic ||
                    (j2[a] >= 0 && j2[a] < r)) {
                    const std::size_t n2 = ch.node_pack(j2);
                    if (accepted[n2] && d[n2] <= d[n1]) {
                        cand = (4.0 * d[n1] - d[n2]) / 3.0;
                        tcand = 2.0 * ch.spacing(a) / 3.0;
                        second = true;
                    }
                }
                (void)second;
                if (cand < q) {
                    q = cand;
                    tau = tcand;
                }
                if (d[n1] < best_neighbor) {
                    best_neighbor = d[n1];
                    donor = n1;
                }
            }
            if (std::isfinite(q)) {
                qa[used] = q;
                ca[used] = ginv(a, a) / (tau * tau);
                ++used;
            }
        }
        if (used == 0) return std::numeric_limits<double>::infinity();
        // solve sum ca (x - qa)^2 = 1 over the active set
        for (;;) {
            double a2 = 0.0, a1 = 0.0, a0 = -1.0;
            for (int i = 0; i < used; ++i) {
                a2 += ca[i];
                a1 -= 2.0 * ca[i] * qa[i];
                a0 += ca[i] * qa[i] * qa[i];
            }
            const double disc = a1 * a1 - 4.0 * a2 * a0;
            double x = disc >= 0.0 ? (-a1 + std::sqrt(disc)) / (2.0 * a2)
                                   : std::numeric_limits<double>::infinity();
            int worst = -1;
            double worst_q = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < used; ++i)
                if (qa[i] >= x && qa[i] > worst_q) {
                    worst_q = qa[i];
                    worst = i;
                }
            if (worst < 0) {
                if (donor != node) atlas.proj.row(node) = atlas.proj.row(donor);
                return x;
            }
            qa[worst] = qa[used - 1];
            ca[worst] = ca[used - 1];
            --used;
            if (used == 0) return std::numeric_limits<double>::infinity();
        }
    };

    while (!heap.empty()) {
        const auto [val, node] = heap.top();
        heap.pop();
        if (accepted[node] || val > d[node]) continue;
        accepted[node] = 1;
        int idx[kMaxDim];
        ch.node_unpack(node, idx);
        for (int a = 0; a < n; ++a) {
            for (int dir = -1; dir <= 1; dir += 2) {
                int j[kMaxDim];
                std::copy(idx, idx + n, j);
                j[a] += dir;
                const int r = ch.resolution[a];
                if (ch.topology == fields::Topology::periodic) j[a] = ((j[a] % r) + r) % r;
                else if (j[a] < 0 || j[a] >= r) continue;
                const std::size_t nb = ch.node_pack(j);
                if (accepted[nb]) continue;
                const double cand = solve_node(nb);
                if (cand < d[nb]) {
                    d[nb] = cand;
                    heap.push({cand, nb});
                }
            }
        }
    }

    atlas.dist.chart = ch;
    atlas.dist.values = Eigen::Map<Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(count));
}

} // namespace

std::shared_ptr<TubularAtlas> build_tubular(const Submanifold& m, const MetricField& g, double eps,
                                            const AtlasOptions& options) {
    m.validate(g.chart);
    if (!(eps > 0.0)) throw std::invalid_argument("build_tubular: epsilon must be positive");
    auto atlas = std::make_shared<TubularAtlas>();
    atlas->base = m;
    atlas->metric = g;
    atlas->epsilon = eps;
    atlas->shear_theta = options.shear_theta;
    atlas->flat = metric_is_flat(g);
    atlas->fast_marched = !atlas->flat || options.force_fast_marching;
    if (!atlas->flat && std::abs(options.shear_theta - 1.5707963267948966) >= 1e-14)
        throw std::invalid_argument("build_tubular: sheared fibers require a flat reference metric");

    // dense parameter samples for the global nearest-point search
    int per_axis = options.search_samples;
    if (per_axis <= 0) per_axis = m.dim == 1 ? std::max(256, m.param_res[0]) : 64;
    atlas->search_per_axis = per_axis;
    std::size_t total = 1;
    for (int a = 0; a < m.dim; ++a) total *= static_cast<std::size_t>(per_axis);
    atlas->sample_pts.resize(static_cast<Eigen::Index>(total), m.ambient_dim);
    atlas->sample_ts.resize(static_cast<Eigen::Index>(total), m.dim);
    for (std::size_t i = 0; i < total; ++i) {
        double t[4] = {0, 0, 0, 0};
        std::size_t rem = i;
        for (int a = m.dim - 1; a >= 0; --a) {
            t[a] = static_cast<double>(rem % per_axis) / per_axis;
            rem /= per_axis;
        }
        atlas->sample_pts.row(static_cast<Eigen::Index>(i)) = m.point(t).transpose();
        for (int a = 0; a < m.dim; ++a) atlas->sample_ts(static_cast<Eigen::Index>(i), a) = t[a];
    }

    const Chart& ch = g.chart;
    const std::size_t count = ch.node_count();
    const int n = ch.dim;

    if (atlas->fast_marched) {
        fast_march(*atlas);
        atlas->splitting_note = "fast-marched atlas: splitting transported from the foot, O(dist) error";
        // fill fiber projectors at tube nodes from the tracked parameters
        atlas->fiber_proj.setZero(static_cast<Eigen::Index>(count), n * n);
        parallel_for(count, [&](std::size_t node) {
            if (atlas->dist.values[static_cast<Eigen::Index>(node)] >= eps) return;
            double tloc[4];
            for (int a = 0; a < m.dim; ++a) tloc[a] = atlas->proj(node, a);
            Eigen::VectorXd x;
            Eigen::MatrixXd jac;
            atlas->base.frame(tloc, x, jac);
            const Eigen::MatrixXd gram = atlas->metric.at(node).gram;
            const Eigen::MatrixXd tgt =
                jac * (jac.transpose() * gram * jac).inverse() * jac.transpose() * gram;
            const Eigen::MatrixXd pf = Eigen::MatrixXd::Identity(n, n) - tgt;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) atlas->fiber_proj(node, i * n + j) = pf(i, j);
        });
    } else {
        atlas->splitting_note = atlas->flat ? "flat atlas: exact nearest-point splitting" : "";
        atlas->dist.chart = ch;
        atlas->dist.values.resize(static_cast<Eigen::Index>(count));
        atlas->proj.resize(static_cast<Eigen::Index>(count), m.dim);
        atlas->fiber_proj.resize(static_cast<Eigen::Index>(count), n * n);
        std::vector<std::uint8_t> focal(count, 0);
        parallel_for(count, [&](std::size_t node) {
            const TubularAtlas::Local loc = atlas->locate_newton(ch.point(node), nullptr);
            atlas->dist.values[static_cast<Eigen::Index>(node)] = loc.dist;
            for (int a = 0; a < m.dim; ++a) atlas->proj(node, a) = loc.t[a];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    atlas->fiber_proj(node, i * n + j) = loc.fiber_projector(i, j);
            if (loc.dist < eps && loc.focal_det < 1e-6) focal[node] = 1;
        });
        for (std::size_t node = 0; node < count; ++node)
            if (focal[node])
                throw std::runtime_error(
                    "build_tubular: focal degeneracy inside the tube; epsilon too large");
    }

    // cut-locus detection: the distance field must stay eikonal inside the tube
    int idx[kMaxDim];
    for (std::size_t node = 0; node < count; ++node) {
        const double dn = atlas->dist.values[static_cast<Eigen::Index>(node)];
        if (!(dn < eps) || dn < 2.5 * ch.max_spacing()) continue;
        ch.node_unpack(node, idx);
        double grad2 = 0.0;
        bool interior = true;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
        for (int a = 0; a < n; ++a) {
            int lo[kMaxDim], hi[kMaxDim];
            std::copy(idx, idx + n, lo);
            std::copy(idx, idx + n, hi);
            lo[a] -= 1;
            hi[a] += 1;
            const int r = ch.resolution[a];
            if (ch.topology == fields::Topology::periodic) {
                lo[a] = ((lo[a] % r) + r) % r;
                hi[a] = hi[a] % r;
            } else if (lo[a] < 0 || hi[a] >= r) {
                interior = false;
                break;
            }
            grad[a] = (atlas->dist.values[static_cast<Eigen::Index>(ch.node_pack(hi))] -
                       atlas->dist.values[static_cast<Eigen::Index>(ch.node_pack(lo))]) /
                      (2.0 * ch.spacing(a));
        }
        if (!interior) continue;
        const Eigen::MatrixXd ginv = atlas->metric.at(node).gram.inverse();
        grad2 = grad.dot(ginv * grad);
        if (grad2 < 0.5)
            throw std::runtime_error(
                "build_tubular: fiber collision detected (two parameters claim one node inside the "
                "tube); epsilon too large");
    }

    return atlas;
}

// ---------------------------------------------------------------------------
// omega* and the homotopy operator
// ---------------------------------------------------------------------------

FormField pullback_volume_form(const std::shared_ptr<const TubularAtlas>& atlas, double s) {
    if (!(s > 0.0))
        throw std::invalid_argument(
            "pullback_volume_form: s must be positive (positivity of the pairing)");
    const Chart& ch = atlas->chart();
    const int n = ch.dim;
    const int m = atlas->base.dim;
    const double vol = fields::volume(atlas->base, atlas->metric);
    const double scale = s / vol;
    const double orientation = atlas->base.orientation;
    const auto& tab = multi_indices(n, m);

    auto evaluator = [atlas, scale, orientation, n, m, &tab](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = atlas->chart().wrap_point(px);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(tab.count());
        const TubularAtlas::Local loc = atlas->locate(p);
        if (!loc.inside) return out;
        const Eigen::MatrixXd gram = atlas->metric.gram_at(loc.foot);
        const Eigen::MatrixXd h = loc.tangent.transpose() * gram * loc.tangent;
        const double dens = std::sqrt(std::max(0.0, h.determinant()));
        Eigen::MatrixXd cols(m, m);
        for (int r = 0; r < tab.count(); ++r) {
            const auto tuple = tab.tuple(r);
            for (int c = 0; c < m; ++c) cols.col(c) = loc.dtdp.col(tuple[c]);
            // rows of dtdp wedge together: minor over the selected ambient axes
            out[r] = orientation * scale * dens * cols.determinant();
        }
        return out;
    };

    FormField f = fields::sample_form(ch, m, evaluator);
    return f;
}

FormField homotopy_solve(const std::shared_ptr<const TubularAtlas>& atlas, const FormField& eta) {
    const Chart& ch = atlas->chart();
    const int n = ch.dim;
    const int m = eta.degree;
    if (m < 1) throw std::invalid_argument("homotopy_solve: degree must be >= 1");
    if (m < atlas->base.dim)
        throw std::invalid_argument(
            "homotopy_solve: base correction only implemented for degree >= dim M");

    if (m == atlas->base.dim) {
        const double period = fields::integrate_form(eta, atlas->base);
        if (std::abs(period) > 1e-8)
            throw std::runtime_error("homotopy_solve: class obstruction (nonzero period over M)");
    }

    // base correction: solve d beta = pullback of eta to M on the parameter torus
    const Submanifold& base = atlas->base;
    const int mb = base.dim;
    std::shared_ptr<std::vector<ParamFourier>> beta;
    std::shared_ptr<MultiIndexTable const> base_tab;
    if (m == mb) {
        const std::size_t pcount = base.param_count();
        std::vector<double> w(pcount);
        for (std::size_t node = 0; node < pcount; ++node) {
            double t[4];
            base.param_unpack(node, t);
            Eigen::VectorXd x;
            Eigen::MatrixXd jac;
            base.frame(t, x, jac);
            exterior::MultiCovector ex{n, m, eta.coeffs_at(ch.wrap_point(x))};
            w[node] = exterior::evaluate(ex, {n, m, jac, 1.0});
        }
        ParamFourier chi;
        std::array<int, 4> res{};
        for (int a = 0; a < mb; ++a) res[a] = base.param_res[a];
        chi.forward(w, mb, res);
        chi.hat[0] = 0.0; // period checked above
        chi.poisson_invert();
        beta = std::make_shared<std::vector<ParamFourier>>();
        for (int a = 0; a < mb; ++a) {
            ParamFourier da = chi.derivative(a);
            const double sign = (a % 2 == 0) ? 1.0 : -1.0;
            for (auto& c : da.hat) c *= sign;
            beta->push_back(std::move(da));
        }
    }

    auto quad = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>();
    gauss_legendre(32, quad->first, quad->second);

    const auto& out_tab = multi_indices(n, m - 1);
    auto eta_eval = eta.analytic;
    FormField eta_copy;
    if (!eta_eval) {
        eta_copy = eta;
        auto held = std::make_shared<FormField>(eta_copy);
        eta_eval = [held](const Eigen::VectorXd& x) { return held->interpolate(x); };
    }

    auto evaluator = [atlas, eta_eval, quad, beta, n, m, mb, &out_tab](const Eigen::VectorXd& px) {
        const Chart& chart = atlas->chart();
        const Eigen::VectorXd p = chart.wrap_point(px);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(out_tab.count());
        const TubularAtlas::Local loc = atlas->locate(p);
        if (!loc.inside) return out;

        const Eigen::MatrixXd dpi = loc.tangent * loc.dtdp; // n x n
        exterior::SimpleFrame frame{n, m, Eigen::MatrixXd(n, m), 1.0};
        exterior::MultiCovector ex{n, m, Eigen::VectorXd()};
        for (std::size_t qi = 0; qi < quad->first.size(); ++qi) {
            const double s = quad->first[qi];
            const double w = quad->second[qi];
            const Eigen::VectorXd gamma = chart.wrap_point(loc.foot + s * loc.y);
            ex.coeffs = eta_eval(gamma);
            const Eigen::MatrixXd a_s = dpi + s * (Eigen::MatrixXd::Identity(n, n) - dpi);
            for (int r = 0; r < out_tab.count(); ++r) {
                const auto tuple = out_tab.tuple(r);
                frame.vectors.col(0) = loc.y;
                for (int c = 0; c < m - 1; ++c) frame.vectors.col(c + 1) = a_s.col(tuple[c]);
                out[r] += w * exterior::evaluate(ex, frame);
            }
        }

        if (beta) {
            // pullback of the base primitive: sum_a beta_a(t) wedge of dtdp rows != a
            double t[4];
            for (int a = 0; a < mb; ++a) t[a] = loc.t[a];
            const auto& sub_tab = multi_indices(mb, mb - 1);
            Eigen::MatrixXd cols(mb - 1, mb - 1);
            for (int a = 0; a < mb; ++a) {
                const double ba = (*beta)[a].eval(t);
                if (ba == 0.0) continue;
                // parameter rows {0..mb-1} minus {a}
                int rowsel[4];
                int rs = 0;
                for (int b = 0; b < mb; ++b)
                    if (b != a) rowsel[rs++] = b;
                (void)sub_tab;
                for (int r = 0; r < out_tab.count(); ++r) {
                    const auto tuple = out_tab.tuple(r);
                    if (mb == 1) {
                        out[r] += ba; // 0-form pullback
                        continue;
                    }
                    for (int i = 0; i < mb - 1; ++i)
                        for (int j = 0; j < mb - 1; ++j) cols(i, j) = loc.dtdp(rowsel[i], tuple[j]);
                    out[r] += ba * cols.determinant();
                }
            }
        }
        return out;
    };

    return fields::sample_form(ch, m - 1, evaluator);
}

exterior::MultiCovector pointwise_d(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& form,
                                    int dim, int degree, const Eigen::VectorXd& x, double step) {
    const auto& tin = multi_indices(dim, degree);
    const auto& tout = multi_indices(dim, degree + 1);
    exterior::MultiCovector out = exterior::MultiCovector::zero(dim, degree + 1);
    for (int a = 0; a < dim; ++a) {
        Eigen::VectorXd xp = x, xm = x, xp2 = x, xm2 = x;
        xp[a] += step;
        xm[a] -= step;
        xp2[a] += 2.0 * step;
        xm2[a] -= 2.0 * step;
        const Eigen::VectorXd der =
            (8.0 * (form(xp) - form(xm)) - (form(xp2) - form(xm2))) / (12.0 * step);
        const std::uint32_t bit = 1u << a;
        for (int c = 0; c < tin.count(); ++c) {
            const std::uint32_t mask = tin.mask(c);
            if (mask & bit) continue;
            out.coeffs[tout.rank_of_mask(mask | bit)] += merge_sign(bit, mask) * der[c];
        }
    }
    return out;
}

} // namespace tame::tubular
