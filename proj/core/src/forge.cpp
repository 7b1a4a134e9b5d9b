#include "tame/forge.hpp"

#include <cmath>
#include <stdexcept>

#include "tame/geometry.hpp"
#include "tame/parallel.hpp"
#include "tame/paramfourier.hpp"

namespace tame::forge {

using comass::comass_field;
using exterior::MultiCovector;
using fields::Chart;
using fields::FormField;
using fields::MetricField;
using fields::ScalarField;
using tubular::BumpProfile;
using tubular::Submanifold;
using tubular::TubularAtlas;

namespace {

using FormEval = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

FormEval form_eval(const FormField& f) {
    if (f.analytic) return f.analytic;
    auto held = std::make_shared<FormField>(f);
    return [held](const Eigen::VectorXd& x) { return held->interpolate(x); };
}

/// sigma^{1/m} and (1-sigma)^{1/m} with sigma = w^m / (w^m + (1-w)^m); both
/// stay C^2 at the joints for every degree and the m-th powers sum to one,
/// which is exactly what the gluing bound needs.
struct SigmaBlend {
    BumpProfile w;
    int m = 1;

    std::pair<double, double> operator()(double d) const {
        const double wv = w(d);
        if (wv >= 1.0) return {1.0, 0.0};
        if (wv <= 0.0) return {0.0, 1.0};
        const double a = std::pow(wv, m);
        const double b = std::pow(1.0 - wv, m);
        const double dd = std::pow(a + b, 1.0 / m);
        return {wv / dd, (1.0 - wv) / dd};
    }
};

Eigen::VectorXd dist_gradient(const TubularAtlas& atlas, const TubularAtlas::Local& loc,
                              const Eigen::VectorXd& p) {
    if (!atlas.fast_marched) {
        // grad |y| = (I - dpi)^T y / |y|; the dpi^T term vanishes exactly for
        // perpendicular fibers and carries the shear otherwise
        const Eigen::VectorXd yhat = loc.y / std::max(loc.dist, 1e-300);
        const Eigen::MatrixXd dpi = loc.tangent * loc.dtdp;
        return Eigen::VectorXd(yhat - dpi.transpose() * yhat);
    }
    const Chart& ch = atlas.chart();
    Eigen::VectorXd grad(ch.dim);
    const double h = 0.5 * ch.max_spacing();
    for (int a = 0; a < ch.dim; ++a) {
        Eigen::VectorXd xp = p, xm = p;
        xp[a] += h;
        xm[a] -= h;
        grad[a] = (atlas.dist.interpolate(ch.wrap_point(xp)) -
                   atlas.dist.interpolate(ch.wrap_point(xm))) /
                  (2.0 * h);
    }
    return grad;
}

struct GlueCorrection {
    std::shared_ptr<const TubularAtlas> atlas;
    std::shared_ptr<FormField> omega; // omega* with period s
    std::shared_ptr<FormField> psi;   // primitive of phi - omega*, null if eta == 0
    BumpProfile rho;
    double s = 0.0;

    /// The subtraction d(rho psi) = rho' dd ^ psi + rho (phi - omega*).
    Eigen::VectorXd eval(const FormEval& phi, const Eigen::VectorXd& p) const {
        const int n = atlas->chart().dim;
        const int m = atlas->base.dim;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<int>(binomial(n, m)));
        if (!psi) return out;
        if (atlas->well_outside(p)) return out;
        const TubularAtlas::Local loc = atlas->locate(p);
        if (!(loc.dist < atlas->epsilon)) return out;
        const double rv = rho(loc.dist);
        const double rd = rho.deriv(loc.dist);
        if (rv != 0.0) out += rv * (phi(p) - omega->analytic(p));
        if (rd != 0.0) {
            MultiCovector grad{n, 1, rd * dist_gradient(*atlas, loc, p)};
            MultiCovector psix{n, m - 1, psi->analytic(p)};
            out += exterior::wedge(grad, psix).coeffs;
        }
        return out;
    }
};

GlueCorrection make_glue_correction(const FormField& phi,
                                    const std::shared_ptr<const TubularAtlas>& atlas) {
    const int m = atlas->base.dim;
    if (phi.degree != m)
        throw std::invalid_argument("glue_form: form degree must match the submanifold dimension");
    GlueCorrection corr;
    corr.atlas = atlas;
    corr.s = fields::integrate_form(phi, atlas->base);
    if (!(corr.s > 0.0))
        throw std::runtime_error("glue_form: nonpositive period s over M (positivity violated)");
    corr.omega = std::make_shared<FormField>(tubular::pullback_volume_form(atlas, corr.s));
    corr.rho = BumpProfile(3.0 * atlas->epsilon / 5.0, 4.0 * atlas->epsilon / 5.0);

    FormField eta;
    eta.chart = phi.chart;
    eta.degree = m;
    eta.values = phi.values - corr.omega->values;
    const FormEval phi_fn = form_eval(phi);
    const auto omega_held = corr.omega;
    eta.analytic = [phi_fn, omega_held](const Eigen::VectorXd& x) {
        return Eigen::VectorXd(phi_fn(x) - omega_held->analytic(x));
    };
    // eta only matters on the tube; omega* is zero outside by convention
    const double eta_scale = std::max(1.0, phi.values.cwiseAbs().maxCoeff());
    double eta_max = 0.0;
    for (std::size_t node = 0; node < phi.chart.node_count(); ++node)
        if (atlas->dist.values[static_cast<Eigen::Index>(node)] < atlas->epsilon)
            eta_max = std::max(eta_max, eta.values.row(static_cast<Eigen::Index>(node))
                                            .cwiseAbs()
                                            .maxCoeff());
    if (eta_max > 1e-12 * eta_scale)
        corr.psi = std::make_shared<FormField>(tubular::homotopy_solve(atlas, eta));
    return corr;
}

FormField assemble_glued(const FormField& phi, const std::vector<GlueCorrection>& corrections) {
    const FormEval phi_fn = form_eval(phi);
    auto held = std::make_shared<std::vector<GlueCorrection>>(corrections);
    auto chart = phi.chart;
    auto evaluator = [phi_fn, held, chart](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = chart.wrap_point(px);
        Eigen::VectorXd out = phi_fn(p);
        for (const GlueCorrection& c : *held) out -= c.eval(phi_fn, p);
        return out;
    };
    return fields::sample_form(chart, phi.degree, evaluator);
}

double pullback_comass(const TubularAtlas::Local& loc, const Eigen::MatrixXd& gram_foot,
                       const Eigen::MatrixXd& gram_p, double scale) {
    // simple covectors have comass equal to their induced dual norm
    const Eigen::MatrixXd h = loc.tangent.transpose() * gram_foot * loc.tangent;
    const Eigen::MatrixXd dual = loc.dtdp * gram_p.inverse() * loc.dtdp.transpose();
    return scale * std::sqrt(std::max(0.0, h.determinant() * dual.determinant()));
}

struct Prelude {
    double s = 0.0;
    double vol = 0.0;
    FormField glued;
    GlueCorrection correction;
    bool already_calibrated = false;
};

Prelude run_prelude(const std::shared_ptr<const TubularAtlas>& atlas, const FormField& phi,
                    const ConstructionParams& params) {
    Prelude pre;
    pre.correction = make_glue_correction(phi, atlas);
    pre.s = pre.correction.s;
    pre.vol = fields::volume(atlas->base, atlas->metric);
    pre.glued = assemble_glued(phi, {pre.correction});

    if (!pre.correction.psi && params.form_scale == 1.0) {
        // phi already equals omega* on the tube; if it is a calibration of M
        // under the ambient metric there is nothing to change
        const auto fc = comass_field(phi, atlas->metric, params.budget);
        bool calibrated = fc.flagged.empty() && std::abs(fc.sup - 1.0) <= 1e-9;
        if (calibrated) {
            double t[4];
            for (int k = 0; k < 8 && calibrated; ++k) {
                for (int a = 0; a < atlas->base.dim; ++a) t[a] = (k + 0.25) / 8.0;
                const auto r = comass::comass_at(phi, atlas->metric, atlas->base.point(t));
                calibrated = std::abs(r.value - 1.0) <= 1e-9;
            }
        }
        pre.already_calibrated = calibrated;
    }
    return pre;
}

FormField scale_form(const FormField& f, double c) {
    FormField out;
    out.chart = f.chart;
    out.degree = f.degree;
    out.values = c * f.values;
    if (f.analytic) {
        auto inner = f.analytic;
        out.analytic = [inner, c](const Eigen::VectorXd& x) { return Eigen::VectorXd(c * inner(x)); };
    }
    return out;
}

CalibrationPair idempotent_pair(const std::shared_ptr<const TubularAtlas>& atlas,
                                const FormField& phi, CalibrationPair::Kind kind, double margin) {
    CalibrationPair pair;
    pair.phi_hat = phi;
    if (!pair.phi_hat.analytic) pair.phi_hat.analytic = form_eval(phi);
    pair.g_hat = atlas->metric;
    pair.calibrated = {atlas->base};
    pair.atlases = {atlas};
    pair.construction = kind;
    pair.epsilon = atlas->epsilon;
    pair.alpha = 1.0;
    pair.margin = margin;
    pair.idempotent_path = true;
    return pair;
}

} // namespace

FormField glue_form(const FormField& phi, const std::shared_ptr<const TubularAtlas>& atlas) {
    return assemble_glued(phi, {make_glue_correction(phi, atlas)});
}

AlphaReport select_alpha(const FormField& phi, const MetricField& g, double margin,
                         const comass::OptimizerBudget& budget, double factor,
                         const std::shared_ptr<const TubularAtlas>& atlas) {
    if (!(margin > 0.0 && margin < 1.0))
        throw std::invalid_argument("select_alpha: margin must lie in (0, 1)");
    const int m = phi.degree;
    if (m < 1) throw std::invalid_argument("select_alpha: degree must be >= 1");
    const auto fc = comass_field(phi, g, budget);
    if (!fc.flagged.empty())
        throw std::runtime_error("select_alpha: comass field has flagged nodes");
    if (!(fc.sup > 0.0)) throw std::runtime_error("select_alpha: form has zero comass");

    AlphaReport rep;
    rep.sup_comass = fc.sup;
    rep.alpha = std::pow(factor * fc.sup / (1.0 - margin), 2.0 / m);
    rep.rechecked_sup = fc.sup * std::pow(rep.alpha, -0.5 * m);
    if (rep.rechecked_sup > 1.0 - margin + 1e-6)
        throw std::runtime_error("select_alpha: recheck failed");

    rep.local_bound_min = std::numeric_limits<double>::infinity();
    if (atlas) {
        // alpha^m |Wbar|_g^2 > 1 on the inner tube, with Wbar the horizontal
        // frame normalized against the glued form
        const Chart& ch = g.chart;
        const int n = ch.dim;
        const double inner_radius = 3.0 * atlas->epsilon / 5.0;
        for (std::size_t node = 0; node < ch.node_count(); ++node) {
            if (!(atlas->dist.values[static_cast<Eigen::Index>(node)] < inner_radius)) continue;
            Eigen::MatrixXd fiber(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) fiber(i, j) = atlas->fiber_proj(node, i * n + j);
            const Eigen::MatrixXd horiz = Eigen::MatrixXd::Identity(n, n) - fiber;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(horiz);
            Eigen::MatrixXd basis(n, m);
            for (int c = 0; c < m; ++c) basis.col(c) = es.eigenvectors().col(n - 1 - c);
            exterior::SimpleFrame w{n, m, basis, 1.0};
            const double value = exterior::evaluate(phi.at(node), w);
            if (value == 0.0) continue;
            const double norm = exterior::simple_norm(w, g.at(node)) / std::abs(value);
            rep.local_bound_min =
                std::min(rep.local_bound_min, std::pow(rep.alpha, m) * norm * norm);
        }
        if (rep.local_bound_min <= 1.0)
            throw std::runtime_error("select_alpha: localized bound failed on the inner tube");
    }
    return rep;
}

CalibrationPair horizontal_change(const std::shared_ptr<const TubularAtlas>& atlas,
                                  const FormField& phi, const ConstructionParams& params) {
    const Chart& ch = atlas->chart();
    const int n = ch.dim;
    const int m = atlas->base.dim;
    const Prelude pre = run_prelude(atlas, phi, params);
    if (pre.already_calibrated)
        return idempotent_pair(atlas, phi, CalibrationPair::Kind::horizontal, params.margin);

    const AlphaReport alpha = select_alpha(pre.glued, atlas->metric, params.margin, params.budget,
                                           1.0, atlas);
    const double svol_pow = std::pow(pre.s / pre.vol, 2.0 / m);
    const SigmaBlend sigma{BumpProfile(atlas->epsilon / 5.0, 2.0 * atlas->epsilon / 5.0), m};
    const double a = alpha.alpha;

    auto metric_held = atlas->metric;
    auto ghat_eval = [atlas, sigma, svol_pow, a, n, metric_held](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = atlas->chart().wrap_point(px);
        if (atlas->well_outside(p)) return metric_held.gram_at(p);
        const TubularAtlas::Local loc = atlas->locate(p);
        const auto [first, second] = sigma(loc.dist);
        if (first == 0.0) return metric_held.gram_at(p); // g_hat == g outside, bit for bit
        const Eigen::MatrixXd gp = metric_held.gram_at(p);
        const Eigen::MatrixXd gfoot = metric_held.gram_at(loc.foot);
        const Eigen::MatrixXd h = loc.tangent.transpose() * gfoot * loc.tangent;
        const Eigen::MatrixXd pullback = loc.dtdp.transpose() * h * loc.dtdp;
        const Eigen::MatrixXd& fiber = loc.fiber_projector;
        const Eigen::MatrixXd horiz = Eigen::MatrixXd::Identity(n, n) - fiber;
        const Eigen::MatrixXd gh = horiz.transpose() * gp * horiz;
        const Eigen::MatrixXd gv = fiber.transpose() * gp * fiber;
        const Eigen::MatrixXd gtilde =
            first * (svol_pow + loc.dist * loc.dist) * pullback + second * a * gh + a * gv;
        return Eigen::MatrixXd(gtilde / a);
    };

    CalibrationPair pair;
    pair.g_hat = fields::sample_metric(ch, ghat_eval);
    pair.phi_hat = scale_form(pre.glued, params.form_scale * std::pow(a, -0.5 * m));
    pair.calibrated = {atlas->base};
    pair.atlases = {atlas};
    pair.construction = CalibrationPair::Kind::horizontal;
    pair.epsilon = atlas->epsilon;
    pair.alpha = a;
    pair.margin = params.margin;
    return pair;
}

CalibrationPair conformal_change(const std::shared_ptr<const TubularAtlas>& atlas,
                                 const FormField& phi, const ConstructionParams& params) {
    return conformal_change(atlas, atlas->metric, phi, params);
}

CalibrationPair conformal_change(const std::shared_ptr<const TubularAtlas>& atlas,
                                 const MetricField& ambient, const FormField& phi,
                                 const ConstructionParams& params) {
    const Chart& ch = atlas->chart();
    const int m = atlas->base.dim;
    const Prelude pre = run_prelude(atlas, phi, params);
    if (pre.already_calibrated)
        return idempotent_pair(atlas, phi, CalibrationPair::Kind::conformal, params.margin);

    const AlphaReport alpha =
        select_alpha(pre.glued, ambient, params.margin, params.budget, 1.0, atlas);
    const double a = alpha.alpha;
    const SigmaBlend sigma{BumpProfile(atlas->epsilon / 5.0, 2.0 * atlas->epsilon / 5.0), m};
    const double scale = pre.s / fields::volume(atlas->base, ambient);

    MetricField ambient_held = ambient;
    auto ghat_eval = [atlas, sigma, a, m, scale, ambient_held](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = atlas->chart().wrap_point(px);
        if (atlas->well_outside(p)) return ambient_held.gram_at(p);
        const TubularAtlas::Local loc = atlas->locate(p);
        const auto [first, second] = sigma(loc.dist);
        if (first == 0.0) return ambient_held.gram_at(p);
        const Eigen::MatrixXd gp = ambient_held.gram_at(p);
        const double c = pullback_comass(loc, ambient_held.gram_at(loc.foot), gp, scale);
        const double factor =
            (first * (1.0 + loc.dist * loc.dist) * std::pow(c, 2.0 / m) + second * a) / a;
        return Eigen::MatrixXd(factor * gp);
    };

    CalibrationPair pair;
    pair.g_hat = fields::sample_metric(ch, ghat_eval);
    pair.phi_hat = scale_form(pre.glued, params.form_scale * std::pow(a, -0.5 * m));
    pair.calibrated = {atlas->base};
    pair.atlases = {atlas};
    pair.construction = CalibrationPair::Kind::conformal;
    pair.epsilon = atlas->epsilon;
    pair.alpha = a;
    pair.margin = params.margin;
    return pair;
}

FormField eliminate_on_tube(const FormField& phi,
                            const std::shared_ptr<const TubularAtlas>& other) {
    const Chart& ch = other->chart();
    const int n = ch.dim;
    const int k = phi.degree;
    if (k == other->base.dim) {
        const double period = fields::integrate_form(phi, other->base);
        if (std::abs(period) > 1e-8)
            throw std::runtime_error(
                "eliminate_on_tube: nonzero period over the other component; form is not exact "
                "there");
    }
    auto theta = std::make_shared<FormField>(tubular::homotopy_solve(other, phi));
    const BumpProfile rho_tilde(4.0 * other->epsilon / 5.0, other->epsilon);
    const FormEval phi_fn = form_eval(phi);

    auto evaluator = [other, theta, rho_tilde, phi_fn, n, k](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = other->chart().wrap_point(px);
        const Eigen::VectorXd base = phi_fn(p);
        if (other->well_outside(p)) return base;
        const TubularAtlas::Local loc = other->locate(p);
        if (!(loc.dist < other->epsilon)) return base;
        const double rv = rho_tilde(loc.dist);
        const double rd = rho_tilde.deriv(loc.dist);
        Eigen::VectorXd out = (1.0 - rv) * base;
        if (rd != 0.0) {
            MultiCovector grad{n, 1, rd * dist_gradient(*other, loc, p)};
            MultiCovector thx{n, k - 1, theta->analytic(p)};
            out -= exterior::wedge(grad, thx).coeffs;
        }
        return out;
    };
    return fields::sample_form(ch, k, evaluator);
}

MetricField bar_metric(const std::shared_ptr<const TubularAtlas>& atlas, double s) {
    const Chart& ch = atlas->chart();
    const int n = ch.dim;
    const int m = atlas->base.dim;
    const double svol_pow = std::pow(s / fields::volume(atlas->base, atlas->metric), 2.0 / m);
    auto metric_held = atlas->metric;
    auto eval = [atlas, svol_pow, n, metric_held](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = atlas->chart().wrap_point(px);
        if (atlas->well_outside(p)) return metric_held.gram_at(p);
        const TubularAtlas::Local loc = atlas->locate(p);
        if (!(loc.dist < atlas->epsilon)) return metric_held.gram_at(p);
        const Eigen::MatrixXd gp = metric_held.gram_at(p);
        const Eigen::MatrixXd gfoot = metric_held.gram_at(loc.foot);
        const Eigen::MatrixXd h = loc.tangent.transpose() * gfoot * loc.tangent;
        const Eigen::MatrixXd pullback = loc.dtdp.transpose() * h * loc.dtdp;
        const Eigen::MatrixXd& fiber = loc.fiber_projector;
        return Eigen::MatrixXd(svol_pow * pullback + fiber.transpose() * gp * fiber);
    };
    return fields::sample_metric(ch, eval);
}

std::vector<CalibrationPair> multi_calibration(const std::vector<Submanifold>& collection,
                                               const MetricField& g, double eps,
                                               const ConstructionParams& params) {
    if (collection.empty()) throw std::invalid_argument("multi_calibration: empty collection");
    const Chart& ch = g.chart;
    const int m = collection.front().dim;
    for (const auto& c : collection)
        if (c.dim != m)
            throw std::invalid_argument("multi_calibration: one level per call (mixed dimensions)");

    std::vector<std::shared_ptr<const TubularAtlas>> atlases;
    for (const auto& c : collection) atlases.push_back(tubular::build_tubular(c, g, eps));

    // tubes must be pairwise disjoint
    for (std::size_t i = 0; i + 1 < atlases.size(); ++i)
        for (std::size_t j = i + 1; j < atlases.size(); ++j)
            for (std::size_t node = 0; node < ch.node_count(); ++node)
                if (atlases[i]->dist.values[static_cast<Eigen::Index>(node)] < eps &&
                    atlases[j]->dist.values[static_cast<Eigen::Index>(node)] < eps)
                    throw std::runtime_error("multi_calibration: epsilon tubes overlap");

    if (collection.size() == 1) {
        std::vector<const Submanifold*> ptrs{&collection[0]};
        const auto duals = fields::solve_dual_forms(ptrs, ch);
        return {conformal_change(atlases[0], duals[0], params)};
    }

    std::vector<const Submanifold*> ptrs;
    for (const auto& c : collection) ptrs.push_back(&c);

    const int s_count = static_cast<int>(collection.size());
    bool independent = true;
    std::vector<FormField> duals;
    try {
        duals = fields::solve_dual_forms(ptrs, ch);
    } catch (const std::runtime_error&) {
        independent = false;
    }

    const SigmaBlend sigma{BumpProfile(eps / 5.0, 2.0 * eps / 5.0), m};

    if (independent) {
        // one calibration per component; each dual form is flattened to zero on
        // the other components' tubes so that sign combinations stay bounded
        std::vector<FormField> glued;
        std::vector<double> scales; // s_i / Vol_g(M_i)
        double sup = 0.0;
        for (int j = 0; j < s_count; ++j) {
            FormField flattened = duals[j];
            for (int i = 0; i < s_count; ++i)
                if (i != j) flattened = eliminate_on_tube(flattened, atlases[i]);
            glued.push_back(glue_form(flattened, atlases[j]));
            scales.push_back(1.0 / fields::volume(collection[j], g));
            const auto fc = comass_field(glued.back(), g, params.budget);
            if (!fc.flagged.empty())
                throw std::runtime_error("multi_calibration: flagged comass nodes");
            sup = std::max(sup, fc.sup);
        }
        const double alpha = std::pow(s_count * sup / (1.0 - params.margin), 2.0 / m);

        auto atl_held = std::make_shared<std::vector<std::shared_ptr<const TubularAtlas>>>(atlases);
        auto scales_held = std::make_shared<std::vector<double>>(scales);
        MetricField g_held = g;
        auto ghat_eval = [atl_held, scales_held, sigma, alpha, m, g_held](const Eigen::VectorXd& px) {
            const Eigen::VectorXd p = (*atl_held)[0]->chart().wrap_point(px);
            for (std::size_t i = 0; i < atl_held->size(); ++i) {
                const auto& atlas = (*atl_held)[i];
                if (atlas->well_outside(p)) continue;
                const TubularAtlas::Local loc = atlas->locate(p);
                const auto [first, second] = sigma(loc.dist);
                if (first == 0.0) continue;
                const Eigen::MatrixXd gp = g_held.gram_at(p);
                const double c = pullback_comass(loc, g_held.gram_at(loc.foot), gp,
                                                 (*scales_held)[i]);
                const double factor =
                    (first * (1.0 + loc.dist * loc.dist) * std::pow(c, 2.0 / m) + second * alpha) /
                    alpha;
                return Eigen::MatrixXd(factor * gp);
            }
            return g_held.gram_at(p);
        };
        const MetricField ghat = fields::sample_metric(ch, ghat_eval);

        std::vector<CalibrationPair> pairs;
        for (int j = 0; j < s_count; ++j) {
            CalibrationPair pair;
            pair.g_hat = ghat;
            pair.phi_hat = scale_form(glued[j], params.form_scale * std::pow(alpha, -0.5 * m));
            pair.calibrated = {collection[j]};
            pair.atlases = {atlases[j]};
            pair.construction = CalibrationPair::Kind::multi;
            pair.epsilon = eps;
            pair.alpha = alpha;
            pair.margin = params.margin;
            pairs.push_back(std::move(pair));
        }
        return pairs;
    }

    // dependent classes: a single shared calibration built from one form with
    // positive periods on every component (convex hull condition)
    const Eigen::MatrixXd periods = fields::period_matrix(ptrs, ch);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(periods, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd c = svd.solve(Eigen::VectorXd::Ones(s_count));
    const Eigen::VectorXd achieved = periods * c;
    for (int i = 0; i < s_count; ++i)
        if (!(achieved[i] > 1e-9))
            throw std::runtime_error(
                "multi_calibration: representatives do not span / violate spanning hypothesis");
    FormField phi;
    phi.chart = ch;
    phi.degree = m;
    phi.values = c.transpose().replicate(static_cast<Eigen::Index>(ch.node_count()), 1);
    phi.analytic = [c](const Eigen::VectorXd&) { return Eigen::VectorXd(c); };

    std::vector<GlueCorrection> corrections;
    std::vector<double> scales;
    for (int i = 0; i < s_count; ++i) {
        corrections.push_back(make_glue_correction(phi, atlases[i]));
        scales.push_back(corrections.back().s / fields::volume(collection[i], g));
    }
    const FormField glued = assemble_glued(phi, corrections);
    const auto fc = comass_field(glued, g, params.budget);
    if (!fc.flagged.empty()) throw std::runtime_error("multi_calibration: flagged comass nodes");
    const double alpha = std::pow(fc.sup / (1.0 - params.margin), 2.0 / m);

    auto atl_held = std::make_shared<std::vector<std::shared_ptr<const TubularAtlas>>>(atlases);
    auto scales_held = std::make_shared<std::vector<double>>(scales);
    MetricField g_held = g;
    auto ghat_eval = [atl_held, scales_held, sigma, alpha, m, g_held](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = (*atl_held)[0]->chart().wrap_point(px);
        for (std::size_t i = 0; i < atl_held->size(); ++i) {
            const auto& atlas = (*atl_held)[i];
            if (atlas->well_outside(p)) continue;
            const TubularAtlas::Local loc = atlas->locate(p);
            const auto [first, second] = sigma(loc.dist);
            if (first == 0.0) continue;
            const Eigen::MatrixXd gp = g_held.gram_at(p);
            const double cc = pullback_comass(loc, g_held.gram_at(loc.foot), gp, (*scales_held)[i]);
            const double factor =
                (first * (1.0 + loc.dist * loc.dist) * std::pow(cc, 2.0 / m) + second * alpha) /
                alpha;
            return Eigen::MatrixXd(factor * gp);
        }
        return g_held.gram_at(p);
    };

    CalibrationPair pair;
    pair.g_hat = fields::sample_metric(ch, ghat_eval);
    pair.phi_hat = scale_form(glued, params.form_scale * std::pow(alpha, -0.5 * m));
    pair.calibrated = collection;
    pair.atlases = atlases;
    pair.construction = CalibrationPair::Kind::multi;
    pair.epsilon = eps;
    pair.alpha = alpha;
    pair.margin = params.margin;
    return {pair};
}

MeanCurvaturePrescription prescribe_mean_curvature(const Submanifold& m, const MetricField& g,
                                                   const NormalField& xi, double eps) {
    const auto atlas = tubular::build_tubular(m, g, eps);
    const Chart& ch = g.chart;
    const int n = ch.dim;
    const int md = m.dim;

    const Eigen::MatrixXd h_samples = verify::mean_curvature(m, g);
    auto h_four = std::make_shared<std::vector<ParamFourier>>(n);
    std::array<int, 4> res{};
    for (int a = 0; a < md; ++a) res[a] = m.param_res[a];
    std::vector<double> column(m.param_count());
    for (int k = 0; k < n; ++k) {
        for (std::size_t u = 0; u < m.param_count(); ++u)
            column[u] = h_samples(static_cast<Eigen::Index>(u), k);
        (*h_four)[k].forward(column, md, res);
    }

    const BumpProfile rho(3.0 * eps / 5.0, 4.0 * eps / 5.0);
    MetricField g_held = g;
    auto f_eval = [atlas, h_four, xi, rho, g_held, n, md](const Eigen::VectorXd& px) {
        const Eigen::VectorXd p = atlas->chart().wrap_point(px);
        if (atlas->well_outside(p)) return 1.0;
        const TubularAtlas::Local loc = atlas->locate(p);
        const double rv = rho(loc.dist);
        if (rv == 0.0 || !(loc.dist < atlas->epsilon)) return 1.0;
        double t[4];
        for (int a = 0; a < md; ++a) t[a] = loc.t[a];
        Eigen::VectorXd hval(n);
        for (int k = 0; k < n; ++k) hval[k] = (*h_four)[k].eval(t);
        const Eigen::VectorXd xival = xi(t);
        const Eigen::MatrixXd gram = g_held.gram_at(loc.foot);
        const double inner = (xival - hval).dot(gram * loc.y);
        return 1.0 - rv * (2.0 / md) * inner;
    };

    MeanCurvaturePrescription out;
    out.factor = fields::sample_scalar(ch, f_eval);
    out.min_factor = out.factor.values.minCoeff();
    if (!(out.min_factor > 0.0))
        throw std::runtime_error(
            "prescribe_mean_curvature: conformal factor not positive; shrink epsilon");
    return out;
}

MultiLevelResult build_multilevel(const std::vector<std::vector<Submanifold>>& levels,
                                  const MetricField& g, double eps,
                                  const ConstructionParams& params) {
    if (levels.empty()) throw std::invalid_argument("build_multilevel: no levels");
    const Chart& ch = g.chart;

    // sort level indices by dimension, highest first
    std::vector<int> order(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return levels[a].front().dim > levels[b].front().dim;
    });

    // all atlases under the original metric: later metrics agree with it on
    // every other level's tube
    std::vector<std::vector<std::shared_ptr<const TubularAtlas>>> atlases(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i)
        for (const auto& c : levels[i]) atlases[i].push_back(tubular::build_tubular(c, g, eps));

    MultiLevelResult out;
    MetricField current = g;
    for (int li : order) {
        const auto& comps = levels[li];
        const int m = comps.front().dim;
        std::vector<const Submanifold*> ptrs;
        for (const auto& c : comps) ptrs.push_back(&c);
        auto duals = fields::solve_dual_forms(ptrs, ch);
        if (comps.size() != 1)
            throw std::invalid_argument(
                "build_multilevel: one component per level supported in this construction");
        FormField phi = duals[0];
        // flatten over the lower-dimensional levels' tubes; over higher levels
        // the comass is controlled by alpha instead (a k-form need not be
        // exact on a tube around a higher-dimensional component)
        for (std::size_t j = 0; j < levels.size(); ++j) {
            if (static_cast<int>(j) == li) continue;
            if (levels[j].front().dim >= m) continue;
            for (const auto& other : atlases[j]) phi = eliminate_on_tube(phi, other);
        }
        // scale down so the dual form is already short under the current metric
        const auto fc = comass_field(phi, current, params.budget);
        if (!fc.flagged.empty()) throw std::runtime_error("build_multilevel: flagged comass nodes");
        const double scale = (1.0 - params.margin) / fc.sup;
        phi = scale_form(phi, scale);

        CalibrationPair pair = conformal_change(atlases[li][0], current, phi, params);
        current = pair.g_hat;
        out.pairs.push_back(std::move(pair));
    }
    out.g_hat = current;
    return out;
}

} // namespace tame::forge
