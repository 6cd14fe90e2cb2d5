#include "effreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "effreg/error.hpp"
#include "effreg/score.hpp"
#include "effreg/stats.hpp"

namespace effreg {

namespace {

constexpr double EULER_GAMMA = 0.57721566490153286061;
constexpr double COND_LIMIT = 1e12;

Theta unpack_phi(const Eigen::VectorXd& phi) {
    const Eigen::Index k = phi.size() - 1;
    return Theta(phi.head(k), std::exp(phi(k)));
}

Eigen::VectorXd pack_phi(const Theta& theta) {
    Eigen::VectorXd phi(theta.q());
    phi.head(theta.beta.size()) = theta.beta;
    phi(theta.beta.size()) = std::log(theta.v);
    return phi;
}

// Numeric leaves of a serialized error model, in a fixed traversal order.
// Used as a mode-agnostic nuisance descriptor for the convergence check.
void json_numeric_leaves(const nlohmann::json& j, std::vector<double>& out) {
    if (j.is_number()) {
        out.push_back(j.get<double>());
    } else if (j.is_array()) {
        for (const auto& e : j) json_numeric_leaves(e, out);
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            json_numeric_leaves(it.value(), out);
    }
}

double xi_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
    return d;
}

ErrorModelPtr refresh_error(const FitConfig& cfg, std::span<const double> resid,
                            const Theta& theta, const ErrorModelPtr& prev) {
    switch (cfg.error_mode) {
    case ErrorMode::Normal:
        return normal_error(theta.v);
    case ErrorMode::Gumbel:
        return fit_gumbel(resid);
    case ErrorMode::Mixture:
        if (prev && prev->kind() == "mixture")
            return fit_mixture_warm(resid, mixture_params(*prev),
                                    cfg.mixture_restarts);
        return fit_mixture(resid, cfg.mixture_restarts);
    case ErrorMode::Kernel:
        return kde_error(resid, silverman_bandwidth(resid));
    case ErrorMode::CustomParametric:
        if (!cfg.custom_refresh)
            throw InputError(
                "solve_efficient: CustomParametric mode requires custom_refresh");
        return cfg.custom_refresh(resid);
    }
    throw InputError("solve_efficient: unknown error mode");
}

// Mean efficient score as a function of phi = (beta, log v), with the
// Normal-mode plug-in variance tied to theta.v.
struct GEvaluator {
    const Dataset& data;
    const MeanModel& model;
    ErrorMode mode;
    ErrorModelPtr error; // fixed nuisance for non-Normal modes

    Eigen::VectorXd operator()(const Eigen::VectorXd& phi) const {
        const Theta th = unpack_phi(phi);
        const ErrorModelPtr e =
            (mode == ErrorMode::Normal) ? normal_error(th.v) : error;
        const ScoreContext ctx = make_score_context(model, e, th, data);
        return mean_score(data, ctx);
    }
};

// Central-difference Jacobian with one-sided fallback when an evaluation
// leaves the score's domain.
template <typename F>
Eigen::MatrixXd fd_jacobian(const F& f, const Eigen::VectorXd& phi,
                            const Eigen::VectorXd& g0, double rel_step) {
    const Eigen::Index q = phi.size();
    Eigen::MatrixXd jac(g0.size(), q);
    for (Eigen::Index j = 0; j < q; ++j) {
        const double h = rel_step * std::max(1.0, std::abs(phi(j)));
        Eigen::VectorXd p = phi;
        bool ok_plus = true, ok_minus = true;
        Eigen::VectorXd gp, gm;
        p(j) = phi(j) + h;
        try {
            gp = f(p);
            ok_plus = gp.allFinite();
        } catch (const Error&) {
            ok_plus = false;
        }
        p(j) = phi(j) - h;
        try {
            gm = f(p);
            ok_minus = gm.allFinite();
        } catch (const Error&) {
            ok_minus = false;
        }
        if (ok_plus && ok_minus)
            jac.col(j) = (gp - gm) / (2.0 * h);
        else if (ok_plus)
            jac.col(j) = (gp - g0) / h;
        else if (ok_minus)
            jac.col(j) = (g0 - gm) / h;
        else {
            std::ostringstream os;
            os << "solve_efficient: score not evaluable on either side of "
                  "parameter "
               << j << " (step " << h << ")";
            throw SingularError(os.str());
        }
    }
    return jac;
}

double sup_norm(const Eigen::VectorXd& v) {
    return v.cwiseAbs().maxCoeff();
}

Theta initial_theta(const Dataset& data, const MeanModel& model,
                    const FitConfig& cfg) {
    Theta theta = [&] {
        switch (model.kind()) {
        case MeanModel::Kind::Linear:
            return ols_fit(data, model);
        case MeanModel::Kind::Exponential:
            return cfg.beta_init ? nls_fit(data, model, *cfg.beta_init)
                                 : nls_fit(data, model);
        case MeanModel::Kind::Custom:
            if (!cfg.beta_init)
                throw InputError(
                    "solve_efficient: custom mean model requires beta_init");
            return nls_fit(data, model, *cfg.beta_init);
        }
        throw InputError("solve_efficient: unknown mean model kind");
    }();
    // Exact-fit data gives v = 0; floor it relative to the response scale so
    // the score is evaluable.
    const double yvar = variance_mle(as_span(data.y));
    theta.v = std::max(theta.v, 1e-12 * std::max(1.0, yvar));
    return theta;
}

} // namespace

std::string error_mode_name(ErrorMode mode) {
    switch (mode) {
    case ErrorMode::Normal: return "normal";
    case ErrorMode::Gumbel: return "gumbel";
    case ErrorMode::Mixture: return "mixture";
    case ErrorMode::Kernel: return "kernel";
    case ErrorMode::CustomParametric: return "custom";
    }
    return "unknown";
}

ErrorMode error_mode_from_name(const std::string& name) {
    if (name == "normal") return ErrorMode::Normal;
    if (name == "gumbel") return ErrorMode::Gumbel;
    if (name == "mixture") return ErrorMode::Mixture;
    if (name == "kernel") return ErrorMode::Kernel;
    if (name == "custom") return ErrorMode::CustomParametric;
    throw InputError("unknown error mode '" + name +
                     "' (expected normal|gumbel|mixture|kernel|custom)");
}

FitResult solve_efficient(const Dataset& data, const MeanModel& model,
                          const FitConfig& cfg) {
    if (!(cfg.tol_theta > 0.0 && cfg.tol_score > 0.0 && cfg.jacobian_step > 0.0))
        throw InputError("solve_efficient: tolerances must be positive");
    if (cfg.max_outer_iters < 1 || cfg.max_newton_iters < 1)
        throw InputError("solve_efficient: iteration limits must be >= 1");
    if (model.kind() == MeanModel::Kind::Linear && model.intercept() &&
        model.k() == 1)
        throw InputError(
            "solve_efficient: intercept-only design rejected (the efficient "
            "score for beta vanishes without covariate gradients)");
    if (data.n() <= model.k() + 1)
        throw InputError("solve_efficient: need n > k+1 observations");

    Theta theta = initial_theta(data, model, cfg);

    ErrorModelPtr error;
    std::vector<double> prev_xi;
    bool have_prev_xi = false;
    double last_step = std::numeric_limits<double>::infinity();
    std::uint64_t clamps = 0;
    std::vector<double> hist;
    bool converged = false;
    int outer = 0;
    int newton_steps = 0;
    std::string message;

    // Spectral fallback state (previous phi and score).
    Eigen::VectorXd bb_phi, bb_g;
    bool have_bb = false;

    for (outer = 0; outer < cfg.max_outer_iters; ++outer) {
        const Eigen::VectorXd resid = residuals(data, model, theta.beta);
        if (error) clamps += error->clamp_count();
        error = refresh_error(cfg, as_span(resid), theta, error);

        std::vector<double> xi;
        json_numeric_leaves(error->to_json(), xi);
        const double xi_change =
            have_prev_xi ? xi_distance(prev_xi, xi)
                         : std::numeric_limits<double>::infinity();
        prev_xi = std::move(xi);
        have_prev_xi = true;

        const GEvaluator eval{data, model, cfg.error_mode, error};
        Eigen::VectorXd phi = pack_phi(theta);
        Eigen::VectorXd g = eval(phi);
        const double gnorm = sup_norm(g);
        hist.push_back(gnorm);

        if (!std::isfinite(gnorm)) {
            message = "mean score became non-finite";
            break;
        }
        if (gnorm <= cfg.tol_score &&
            (outer == 0 ||
             (last_step < cfg.tol_theta && xi_change < cfg.tol_theta))) {
            converged = true;
            break;
        }
        if (newton_steps >= cfg.max_newton_iters) {
            message = "Newton step budget exhausted";
            break;
        }

        // One damped Newton step on phi.
        const Eigen::MatrixXd jac =
            fd_jacobian(eval, phi, g, cfg.jacobian_step);
        Eigen::VectorXd direction;
        bool used_fallback = false;
        if (!jac.allFinite()) {
            std::ostringstream os;
            os << "solve_efficient: non-finite Jacobian at iteration " << outer;
            throw SingularError(os.str());
        }
        {
            const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
                jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const double smax = svd.singularValues()(0);
            const double smin =
                svd.singularValues()(svd.singularValues().size() - 1);
            if (!(smax > 0.0)) {
                std::ostringstream os;
                os << "solve_efficient: singular Jacobian (all singular values "
                      "zero) at iteration "
                   << outer;
                throw SingularError(os.str());
            }
            if (smin > 0.0 && smax / smin <= COND_LIMIT) {
                direction = svd.solve(-g);
            } else {
                // Spectral (Barzilai-Borwein) fallback on an
                // ill-conditioned Jacobian.
                used_fallback = true;
                double step_scale = 1.0 / std::max(1.0, gnorm);
                if (have_bb) {
                    const Eigen::VectorXd dphi = phi - bb_phi;
                    const Eigen::VectorXd dg = g - bb_g;
                    const double denom = dg.squaredNorm();
                    if (denom > 0.0) {
                        const double s = std::abs(dphi.dot(dg)) / denom;
                        if (std::isfinite(s) && s > 0.0) step_scale = s;
                    }
                }
                direction = -step_scale * g;
            }
        }

        bb_phi = phi;
        bb_g = g;
        have_bb = true;

        bool accepted = false;
        Eigen::VectorXd trial_phi;
        for (int pass = 0; pass < 2 && !accepted; ++pass) {
            Eigen::VectorXd d = direction;
            if (pass == 1) {
                if (used_fallback) break; // already a gradient-type step
                d = -g / std::max(1.0, gnorm);
            }
            double s = 1.0;
            for (int halving = 0; halving <= 20; ++halving, s *= 0.5) {
                trial_phi = phi + s * d;
                Eigen::VectorXd gt;
                try {
                    gt = eval(trial_phi);
                } catch (const Error&) {
                    continue;
                }
                if (gt.allFinite() && sup_norm(gt) < gnorm) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            if (gnorm <= cfg.tol_score) {
                // Already at a root; further steps are noise-level.
                converged = true;
            } else {
                message =
                    "line search found no descent direction after 20 halvings";
            }
            break;
        }

        ++newton_steps;
        const Theta next = unpack_phi(trial_phi);
        last_step = std::max(sup_norm(next.beta - theta.beta),
                             std::abs(next.v - theta.v));
        theta = next;
    }

    if (!converged && message.empty())
        message = "outer iteration limit reached";

    if (error) {
        clamps += error->clamp_count();
    } else {
        // max_outer_iters >= 1 guarantees at least one refresh.
        throw InputError("solve_efficient: internal state error");
    }

    FitResult res(theta, model, cfg);
    res.residuals = residuals(data, model, theta.beta);
    res.error_model = error;
    res.iterations = outer;
    res.newton_steps = newton_steps;
    res.converged = converged;
    res.clamp_count = clamps;
    res.score_norm_history = hist;
    res.final_score_norm = hist.empty() ? 0.0 : hist.back();
    res.message = message;

    const bool use_bound = cfg.error_mode == ErrorMode::Kernel ||
                           cfg.error_mode == ErrorMode::CustomParametric;
    try {
        res.covariance =
            use_bound ? covariance_bound(data, res) : covariance_sandwich(data, res);
        res.covariance_method = use_bound ? "bound" : "sandwich";
    } catch (const Error& e) {
        if (converged) throw;
        const Eigen::Index q = theta.q();
        res.covariance = Eigen::MatrixXd::Constant(
            q, q, std::numeric_limits<double>::quiet_NaN());
        res.covariance_method = "unavailable";
        res.message += std::string("; covariance unavailable: ") + e.what();
    }
    res.se = res.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    res.ci95 = confidence_intervals(res, 0.95);
    return res;
}

Eigen::MatrixXd covariance_bound(const Dataset& data, const FitResult& fit) {
    const ScoreContext ctx =
        make_score_context(fit.model, fit.error_model, fit.theta, data);
    const Eigen::MatrixXd m =
        average_outer_product(score_matrix(data, ctx));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double emax = ev(ev.size() - 1);
    if (!(ev(0) > 0.0) || !(emax / ev(0) < 1e14)) {
        std::ostringstream os;
        os << "covariance_bound: score second-moment matrix close to singular;"
              " eigenvalues:";
        for (Eigen::Index i = 0; i < ev.size(); ++i) os << " " << ev(i);
        throw SingularError(os.str());
    }
    const Eigen::MatrixXd inv = es.eigenvectors() *
                                ev.cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();
    Eigen::MatrixXd cov = inv / static_cast<double>(data.n());
    return 0.5 * (cov + cov.transpose());
}

namespace {

// Per-observation maximum-likelihood scores for the nuisance parameters,
// in the internal coordinates used by the sandwich stacking.
struct NuisanceSpec {
    Eigen::VectorXd xi;
    std::function<ErrorModelPtr(const Eigen::VectorXd&)> rebuild;
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> score;
};

NuisanceSpec make_nuisance(const FitResult& fit) {
    NuisanceSpec spec;
    switch (fit.config.error_mode) {
    case ErrorMode::Gumbel: {
        const double lambda = gumbel_params(*fit.error_model).lambda;
        spec.xi = Eigen::VectorXd::Constant(1, lambda);
        spec.rebuild = [](const Eigen::VectorXd& xi) {
            return gumbel_error(xi(0));
        };
        spec.score = [](double eps, const Eigen::VectorXd& xi) {
            const double lam = xi(0);
            double z = eps / lam - EULER_GAMMA;
            if (z > 700.0) z = 700.0;
            Eigen::VectorXd s(1);
            s(0) = -1.0 / lam - (eps / (lam * lam)) * (1.0 - std::exp(z));
            return s;
        };
        break;
    }
    case ErrorMode::Mixture: {
        const MixtureParams p = mixture_params(*fit.error_model);
        spec.xi = Eigen::VectorXd(5);
        spec.xi << p.p1, p.m1, p.m2, std::log(p.s1), std::log(p.s2);
        spec.rebuild = [](const Eigen::VectorXd& xi) {
            const double p1 = xi(0);
            const double p2 = 1.0 - p1;
            const double m1 = xi(1);
            const double m2 = xi(2);
            const double m0 = p1 * m1 + p2 * m2;
            return mixture_error(
                {p1, p2, m0, m1, m2, std::exp(xi(3)), std::exp(xi(4))});
        };
        // Score of the uncentered two-component likelihood in
        // (p1, m1, m2, log s1, log s2); EM stationarity zeroes its sum.
        spec.score = [](double eps, const Eigen::VectorXd& xi) {
            const double p1 = xi(0);
            const double s1 = std::exp(xi(3));
            const double s2 = std::exp(xi(4));
            const double u1 = (eps - xi(1)) / s1;
            const double u2 = (eps - xi(2)) / s2;
            const double f1 = normal_pdf(u1) / s1;
            const double f2 = normal_pdf(u2) / s2;
            double fu = p1 * f1 + (1.0 - p1) * f2;
            if (fu < 1e-300) fu = 1e-300;
            Eigen::VectorXd s(5);
            s(0) = (f1 - f2) / fu;
            s(1) = p1 * f1 * u1 / s1 / fu;
            s(2) = (1.0 - p1) * f2 * u2 / s2 / fu;
            s(3) = p1 * f1 * (u1 * u1 - 1.0) / fu;
            s(4) = (1.0 - p1) * f2 * (u2 * u2 - 1.0) / fu;
            return s;
        };
        break;
    }
    default:
        break; // no nuisance block
    }
    return spec;
}

} // namespace

Eigen::MatrixXd covariance_sandwich(const Dataset& data, const FitResult& fit) {
    const Eigen::Index q = fit.theta.q();
    const Eigen::Index k = q - 1;
    const ErrorMode mode = fit.config.error_mode;
    const NuisanceSpec nu = make_nuisance(fit);
    const Eigen::Index r = nu.xi.size();
    const Eigen::Index dim = q + r;

    // Stacked parameter vector (beta, v, xi) in natural coordinates.
    Eigen::VectorXd p0(dim);
    p0.head(k) = fit.theta.beta;
    p0(k) = fit.theta.v;
    if (r > 0) p0.tail(r) = nu.xi;

    const auto stacked_mean = [&](const Eigen::VectorXd& p) {
        const Theta th(p.head(k), p(k));
        ErrorModelPtr err;
        if (r > 0)
            err = nu.rebuild(p.tail(r));
        else if (mode == ErrorMode::Normal)
            err = normal_error(th.v);
        else
            err = fit.error_model; // frozen plug-in (kernel / custom)
        const ScoreContext ctx = make_score_context(fit.model, err, th, data);
        Eigen::VectorXd h(dim);
        h.head(q) = mean_score(data, ctx);
        if (r > 0) {
            const Eigen::VectorXd resid = residuals(data, fit.model, th.beta);
            Eigen::MatrixXd xs(data.n(), r);
            for (Eigen::Index i = 0; i < data.n(); ++i)
                xs.row(i) = nu.score(resid(i), p.tail(r)).transpose();
            h.tail(r) = column_means(xs);
        }
        return h;
    };

    const Eigen::VectorXd h0 = stacked_mean(p0);
    const Eigen::MatrixXd a =
        fd_jacobian(stacked_mean, p0, h0, fit.config.jacobian_step);

    // Per-observation stacked scores for B.
    const ScoreContext ctx0 =
        make_score_context(fit.model, fit.error_model, fit.theta, data);
    Eigen::MatrixXd stacked(data.n(), dim);
    stacked.leftCols(q) = score_matrix(data, ctx0);
    if (r > 0) {
        const Eigen::VectorXd resid =
            residuals(data, fit.model, fit.theta.beta);
        for (Eigen::Index i = 0; i < data.n(); ++i)
            stacked.row(i).tail(r) = nu.score(resid(i), nu.xi).transpose();
    }
    const Eigen::MatrixXd b = average_outer_product(stacked);

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
        std::ostringstream os;
        os << "covariance_sandwich: stacked score Jacobian singular; singular "
              "values:";
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            os << " " << svd.singularValues()(i);
        throw SingularError(os.str());
    }
    const Eigen::MatrixXd ainv_b = lu.solve(b);
    Eigen::MatrixXd full =
        lu.solve(ainv_b.transpose()).transpose() / static_cast<double>(data.n());
    Eigen::MatrixXd cov = full.topLeftCorner(q, q);
    return 0.5 * (cov + cov.transpose());
}

std::vector<std::array<double, 2>> confidence_intervals(const FitResult& fit,
                                                        double level) {
    if (!(level > 0.0 && level < 1.0))
        throw DomainError("confidence_intervals: level must lie in (0,1)");
    const double z = inv_normal_cdf(0.5 + 0.5 * level);
    const Eigen::Index q = fit.theta.q();
    std::vector<std::array<double, 2>> out(static_cast<std::size_t>(q));
    for (Eigen::Index j = 0; j < q; ++j) {
        const double est =
            (j < q - 1) ? fit.theta.beta(j) : fit.theta.v;
        const double half = z * fit.se(j);
        out[static_cast<std::size_t>(j)] = {est - half, est + half};
    }
    return out;
}

nlohmann::json fit_result_json(const FitResult& fit) {
    nlohmann::json j;
    j["theta"] = {{"beta", std::vector<double>(fit.theta.beta.data(),
                                               fit.theta.beta.data() +
                                                   fit.theta.beta.size())},
                  {"v", fit.theta.v}};
    j["se"] = std::vector<double>(fit.se.data(), fit.se.data() + fit.se.size());
    nlohmann::json ci = nlohmann::json::array();
    for (const auto& c : fit.ci95) ci.push_back({c[0], c[1]});
    j["ci95"] = ci;
    nlohmann::json cov = nlohmann::json::array();
    for (Eigen::Index i = 0; i < fit.covariance.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c)
            row.push_back(fit.covariance(i, c));
        cov.push_back(row);
    }
    j["covariance"] = cov;
    j["covariance_method"] = fit.covariance_method;
    j["error_model"] = fit.error_model ? fit.error_model->to_json()
                                       : nlohmann::json(nullptr);
    j["error_mode"] = error_mode_name(fit.config.error_mode);
    j["iterations"] = fit.iterations;
    j["newton_steps"] = fit.newton_steps;
    j["converged"] = fit.converged;
    j["clamp_count"] = fit.clamp_count;
    j["final_score_norm"] = fit.final_score_norm;
    j["score_norm_history"] = fit.score_norm_history;
    j["message"] = fit.message;
    return j;
}

} // namespace effreg
