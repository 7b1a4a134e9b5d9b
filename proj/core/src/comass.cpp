#include "tame/comass.hpp"

#include <cmath>
#include <stdexcept>

#include "tame/parallel.hpp"
#include "tame/rng.hpp"

namespace tame::comass {

using exterior::MultiCovector;
using exterior::PointMetric;
using exterior::SimpleFrame;

namespace {

/// g-orthonormalization machinery shared by the ascent and the oracle.
struct FrameFactory {
    const PointMetric& g;
    Eigen::LLT<Eigen::MatrixXd> llt;
    int n;
    int m;

    FrameFactory(const PointMetric& metric, int degree)
        : g(metric), llt(metric.gram), n(metric.dim), m(degree) {
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("comass: metric is not positive definite");
    }

    /// Columns of the result are g-orthonormal and span the columns of v.
    Eigen::MatrixXd retract(const Eigen::MatrixXd& v) const {
        const Eigen::MatrixXd w = llt.matrixU() * v; // L^T v
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(w);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
        const Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
        for (int c = 0; c < m; ++c)
            if (r(c, c) < 0.0) q.col(c) = -q.col(c);
        return llt.matrixU().solve(q);
    }

    Eigen::MatrixXd random_frame(Rng& rng) const {
        Eigen::MatrixXd v(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) v(i, j) = rng.normal();
        return retract(v);
    }
};

struct AscentOutcome {
    double value = 0.0;
    Eigen::MatrixXd frame;
    double grad_norm = 0.0;
    bool stationary = false;
};

AscentOutcome ascend(const MultiCovector& phi, const PointMetric& g, const FrameFactory& factory,
                     Eigen::MatrixXd v, const OptimizerBudget& budget) {
    const int m = phi.degree;
    SimpleFrame frame{phi.dim, m, v, 1.0};
    double f = exterior::evaluate(phi, frame);
    if (f < 0.0) {
        v.col(0) = -v.col(0);
        frame.vectors = v;
        f = -f;
    }
    double step = 1.0;
    double grad_norm = 0.0;
    bool stationary = false;
    const Eigen::MatrixXd ginv = g.gram.inverse();
    for (int iter = 0; iter < budget.max_iters; ++iter) {
        frame.vectors = v;
        const Eigen::MatrixXd egrad = exterior::evaluate_gradient(phi, frame);
        // Riemannian gradient on { V : V^T g V = I } under <A,B> = tr(A^T g B)
        const Eigen::MatrixXd vtg = v.transpose() * egrad;
        const Eigen::MatrixXd z = ginv * egrad - v * (0.5 * (vtg + vtg.transpose()));
        const double z2 = (z.transpose() * g.gram * z).trace();
        grad_norm = std::sqrt(std::max(0.0, z2));
        if (grad_norm <= budget.grad_tol) {
            stationary = true;
            break;
        }
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            const Eigen::MatrixXd cand = factory.retract(v + step * z);
            const double fc = exterior::evaluate(phi, {phi.dim, m, cand, 1.0});
            if (fc >= f + 1e-4 * step * z2) {
                v = cand;
                f = fc;
                step = std::min(step * 1.8, 1e3);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break; // line search exhausted at machine precision
    }
    return {f, v, grad_norm, stationary};
}

ComassResult exact_result(double value, Eigen::MatrixXd frame, Method method, const MultiCovector& phi,
                          const PointMetric& g) {
    ComassResult r;
    r.value = value;
    r.method = method;
    r.maximizer = SimpleFrame{phi.dim, phi.degree, std::move(frame), 1.0};
    r.grad_norm = 0.0;
    r.starts_used = 0;
    (void)g;
    return r;
}

Eigen::MatrixXd oriented_orthonormal_plane(const MultiCovector& phi, const PointMetric& g,
                                           const Eigen::MatrixXd& span) {
    FrameFactory factory(g, static_cast<int>(span.cols()));
    Eigen::MatrixXd v = factory.retract(span);
    if (exterior::evaluate(phi, {phi.dim, phi.degree, v, 1.0}) < 0.0) v.col(0) = -v.col(0);
    return v;
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::exact_deg0: return "exact-deg0";
        case Method::exact_deg1: return "exact-deg1";
        case Method::exact_hodge: return "exact-hodge";
        case Method::exact_top: return "exact-top";
        case Method::ascent: return "ascent";
    }
    return "?";
}

ComassResult comass_point(const exterior::MultiCovector& phi, const exterior::PointMetric& g,
                          const OptimizerBudget& budget) {
    return comass_point_seeded(phi, g, budget, {});
}

ComassResult comass_point_seeded(const exterior::MultiCovector& phi, const exterior::PointMetric& g,
                                 const OptimizerBudget& budget,
                                 const std::vector<Eigen::MatrixXd>& extra_starts) {
    const int n = phi.dim;
    const int m = phi.degree;
    if (n != g.dim) throw std::invalid_argument("comass_point: dimension mismatch");
    if (m < 0 || m > n) throw std::invalid_argument("comass_point: degree out of range");

    if (m == 0)
        return exact_result(std::abs(phi.coeffs[0]), Eigen::MatrixXd(n, 0), Method::exact_deg0, phi, g);

    const double scale = phi.coeffs.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        FrameFactory factory(g, m);
        Rng rng(budget.seed);
        ComassResult r;
        r.value = 0.0;
        r.maximizer = SimpleFrame{n, m, factory.random_frame(rng), 1.0};
        r.method = m == 1 ? Method::exact_deg1 : (m == n ? Method::exact_top : Method::ascent);
        return r;
    }

    if (m == 1) {
        const Eigen::VectorXd w = g.gram.llt().solve(phi.coeffs);
        const double value = std::sqrt(phi.coeffs.dot(w));
        Eigen::MatrixXd frame = w / std::sqrt(w.dot(g.gram * w));
        return exact_result(value, frame, Method::exact_deg1, phi, g);
    }

    if (m == n) {
        const double value = std::abs(phi.coeffs[0]) / std::sqrt(g.gram.determinant());
        const Eigen::MatrixXd frame =
            oriented_orthonormal_plane(phi, g, Eigen::MatrixXd::Identity(n, n));
        return exact_result(value, frame, Method::exact_top, phi, g);
    }

    if (m == n - 1) {
        // every (n-1)-vector is simple, so the comass is the dual norm under the
        // induced multivector metric
        const Eigen::MatrixXd gm = exterior::induced_gram(g, m);
        const Eigen::VectorXd w = gm.llt().solve(phi.coeffs);
        const double value = std::sqrt(phi.coeffs.dot(w));
        MultiCovector wvec{n, m, w};
        const Eigen::RowVectorXd row = exterior::top_pairing_row(wvec);
        const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(row).kernel();
        return exact_result(value, oriented_orthonormal_plane(phi, g, kernel), Method::exact_hodge,
                            phi, g);
    }

    FrameFactory factory(g, m);
    AscentOutcome best;
    bool have_best = false;
    int starts_used = 0;
    for (const Eigen::MatrixXd& s : extra_starts) {
        const AscentOutcome out = ascend(phi, g, factory, factory.retract(s), budget);
        ++starts_used;
        if (!have_best || out.value > best.value) {
            best = out;
            have_best = true;
        }
    }
    for (int s = 0; s < budget.starts; ++s) {
        Rng rng(Rng::derive(budget.seed, static_cast<std::uint64_t>(s)));
        const AscentOutcome out = ascend(phi, g, factory, factory.random_frame(rng), budget);
        ++starts_used;
        if (!have_best || out.value > best.value) {
            best = out;
            have_best = true;
        }
    }

    ComassResult r;
    r.value = best.value;
    r.maximizer = SimpleFrame{n, m, best.frame, 1.0};
    r.method = Method::ascent;
    r.starts_used = starts_used;
    r.grad_norm = best.grad_norm;
    if (!best.stationary && best.grad_norm > budget.grad_tol * std::max(1.0, scale)) {
        r.flagged = true;
        r.note = "ascent did not reach stationarity within budget";
    }
    if (budget.oracle_check_samples > 0) {
        const double lower = oracle_comass(phi, g, budget.oracle_check_samples, budget.seed ^ 0xabcdefULL);
        if (lower - r.value > 1e-4) {
            r.flagged = true;
            r.note = "ascent disagrees with sampling oracle";
        }
    }
    return r;
}

double oracle_comass(const exterior::MultiCovector& phi, const exterior::PointMetric& g,
                     std::int64_t samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("oracle_comass: samples must be >= 1");
    const int m = phi.degree;
    if (m == 0) return std::abs(phi.coeffs[0]);
    FrameFactory factory(g, m);
    Rng rng(seed);
    double best = 0.0;
    SimpleFrame frame{phi.dim, m, Eigen::MatrixXd(), 1.0};
    for (std::int64_t s = 0; s < samples; ++s) {
        frame.vectors = factory.random_frame(rng);
        best = std::max(best, exterior::evaluate(phi, frame));
    }
    return best;
}

FieldComass comass_field(const fields::FormField& phi, const fields::MetricField& g,
                         const OptimizerBudget& budget) {
    if (!phi.chart.same_grid(g.chart))
        throw std::invalid_argument("comass_field: fields do not share a chart");
    const std::size_t count = phi.chart.node_count();
    FieldComass out;
    out.values.chart = phi.chart;
    out.values.values.resize(static_cast<Eigen::Index>(count));
    std::vector<std::uint8_t> flagged(count, 0);
    parallel_for(count, [&](std::size_t node) {
        OptimizerBudget b = budget;
        b.seed = Rng::derive(budget.seed, node);
        const ComassResult r = comass_point(phi.at(node), g.at(node), b);
        out.values.values[static_cast<Eigen::Index>(node)] = r.value;
        flagged[node] = r.flagged ? 1 : 0;
    });
    out.sup = -1.0;
    for (std::size_t node = 0; node < count; ++node) {
        const double v = out.values.values[static_cast<Eigen::Index>(node)];
        if (v > out.sup) {
            out.sup = v;
            out.arg_sup = node;
        }
        if (flagged[node]) out.flagged.push_back(node);
    }
    return out;
}

ComassResult comass_at(const fields::FormField& phi, const fields::MetricField& g,
                       const Eigen::VectorXd& x, const OptimizerBudget& budget) {
    const Eigen::VectorXd xw = phi.chart.wrap_point(x);
    exterior::MultiCovector p{phi.chart.dim, phi.degree, phi.coeffs_at(xw)};
    exterior::PointMetric m{g.chart.dim, g.gram_at(xw)};
    return comass_point(p, m, budget);
}

} // namespace tame::comass
