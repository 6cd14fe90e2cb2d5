#include "effreg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "effreg/csv.hpp"
#include "effreg/diagnose.hpp"
#include "effreg/error.hpp"
#include "effreg/parallel.hpp"
#include "effreg/stats.hpp"

namespace effreg {

namespace {

constexpr double NAN_D = std::numeric_limits<double>::quiet_NaN();

double json_number(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field) || !j.at(field).is_number())
        throw InputError("scenario: missing or non-numeric field '" + field +
                         "'");
    return j.at(field).get<double>();
}

double json_number_or(const nlohmann::json& j, const std::string& field,
                      double fallback) {
    if (!j.contains(field)) return fallback;
    if (!j.at(field).is_number())
        throw InputError("scenario: non-numeric field '" + field + "'");
    return j.at(field).get<double>();
}

std::string json_string(const nlohmann::json& j, const std::string& field) {
    if (!j.contains(field) || !j.at(field).is_string())
        throw InputError("scenario: missing or non-string field '" + field +
                         "'");
    return j.at(field).get<std::string>();
}

// Mean scale factor of the skew-t: E[Z] = b_nu * delta for the standardized
// variate, with b_nu = sqrt(nu/pi) Gamma((nu-1)/2) / Gamma(nu/2).
double skew_t_bnu(double nu) {
    if (!(nu > 1.0))
        throw DomainError("skew-t mean requires nu > 1");
    return std::sqrt(nu / M_PI) *
           std::exp(std::lgamma(0.5 * (nu - 1.0)) - std::lgamma(0.5 * nu));
}

} // namespace

// ---------------------------------------------------------------------------
// CovariateLaw

Eigen::Index CovariateLaw::columns() const {
    switch (kind) {
    case Kind::Gamma: return 1;
    case Kind::NormalIid: return dim;
    case Kind::Fixed: return fixed.cols();
    }
    return 0;
}

Eigen::MatrixXd CovariateLaw::sample(Eigen::Index n, CounterRng& rng) const {
    if (n <= 0) throw InputError("covariate law: sample size must be positive");
    switch (kind) {
    case Kind::Gamma: {
        Eigen::MatrixXd x(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = rng.gamma(shape, scale);
        return x;
    }
    case Kind::NormalIid: {
        if (dim <= 0)
            throw InputError("covariate law: 'dim' must be positive");
        Eigen::MatrixXd x(n, dim);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < dim; ++j) x(i, j) = rng.normal();
        return x;
    }
    case Kind::Fixed: {
        if (fixed.rows() != n) {
            std::ostringstream os;
            os << "covariate law: fixed design has " << fixed.rows()
               << " rows but n=" << n << " was requested";
            throw InputError(os.str());
        }
        return fixed;
    }
    }
    throw InputError("covariate law: unknown kind");
}

nlohmann::json CovariateLaw::to_json() const {
    switch (kind) {
    case Kind::Gamma:
        return {{"kind", "gamma"}, {"shape", shape}, {"scale", scale}};
    case Kind::NormalIid:
        return {{"kind", "normal_iid"}, {"dim", dim}};
    case Kind::Fixed: {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < fixed.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index j = 0; j < fixed.cols(); ++j)
                row.push_back(fixed(i, j));
            rows.push_back(std::move(row));
        }
        return {{"kind", "fixed"}, {"x", std::move(rows)}};
    }
    }
    throw InputError("covariate law: unknown kind");
}

CovariateLaw CovariateLaw::from_json(const nlohmann::json& j) {
    CovariateLaw law;
    const std::string kind = json_string(j, "kind");
    if (kind == "gamma") {
        law.kind = Kind::Gamma;
        law.shape = json_number_or(j, "shape", 2.5);
        law.scale = json_number_or(j, "scale", 1.5);
        if (!(law.shape > 0.0) || !(law.scale > 0.0))
            throw InputError(
                "covariate law: 'shape' and 'scale' must be positive");
    } else if (kind == "normal_iid") {
        law.kind = Kind::NormalIid;
        law.dim = static_cast<Eigen::Index>(json_number_or(j, "dim", 1));
        if (law.dim <= 0)
            throw InputError("covariate law: 'dim' must be positive");
    } else if (kind == "fixed") {
        law.kind = Kind::Fixed;
        if (!j.contains("x") || !j.at("x").is_array() || j.at("x").empty())
            throw InputError(
                "covariate law: fixed design needs a non-empty array 'x'");
        const auto& rows = j.at("x");
        const std::size_t ncol = rows.at(0).size();
        if (ncol == 0)
            throw InputError("covariate law: fixed design rows must be "
                             "non-empty arrays");
        law.fixed.resize(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(ncol));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows.at(i);
            if (!row.is_array() || row.size() != ncol)
                throw InputError(
                    "covariate law: fixed design rows must all have the "
                    "same length");
            for (std::size_t c = 0; c < ncol; ++c) {
                if (!row.at(c).is_number())
                    throw InputError(
                        "covariate law: fixed design entries must be numeric");
                law.fixed(static_cast<Eigen::Index>(i),
                          static_cast<Eigen::Index>(c)) =
                    row.at(c).get<double>();
            }
        }
    } else {
        throw InputError("covariate law: unknown kind '" + kind +
                         "' (expected gamma|normal_iid|fixed)");
    }
    return law;
}

// ---------------------------------------------------------------------------
// Error-law moments

double SkewTSpec::mean() const {
    const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
    return xi + omega * skew_t_bnu(nu) * delta;
}

double SkewTSpec::variance() const {
    if (!(nu > 2.0)) throw DomainError("skew-t variance requires nu > 2");
    const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
    const double bd = skew_t_bnu(nu) * delta;
    return omega * omega * (nu / (nu - 2.0) - bd * bd);
}

double PerturbedSkewTSpec::mean() const {
    const double gm = gamma_shape * gamma_scale - shift;
    return weight_skewt * skew_t.mean() + (1.0 - weight_skewt) * gm;
}

double PerturbedSkewTSpec::variance() const {
    const double stm = skew_t.mean();
    const double stv = skew_t.variance();
    const double gm = gamma_shape * gamma_scale - shift;
    const double gv = gamma_shape * gamma_scale * gamma_scale;
    const double second = weight_skewt * (stv + stm * stm) +
                          (1.0 - weight_skewt) * (gv + gm * gm);
    const double m = mean();
    return second - m * m;
}

double ErrorLaw::mean() const {
    switch (kind) {
    case Kind::Normal:
    case Kind::Gumbel:
    case Kind::Mixture: return 0.0;
    case Kind::SkewT: return skew_t.mean();
    case Kind::PerturbedSkewT: return perturbed.mean();
    }
    return 0.0;
}

double ErrorLaw::variance() const {
    switch (kind) {
    case Kind::Normal: return v;
    case Kind::Gumbel: return M_PI * M_PI * lambda * lambda / 6.0;
    case Kind::Mixture: return mixture_error(mu)->variance();
    case Kind::SkewT: return skew_t.variance();
    case Kind::PerturbedSkewT: return perturbed.variance();
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Samplers

std::vector<double> sample_gumbel(double lambda, std::size_t n,
                                  CounterRng& rng) {
    if (!(lambda > 0.0)) throw DomainError("gumbel sampler: lambda must be positive");
    std::vector<double> out(n);
    for (auto& e : out) e = rng.gumbel_min(lambda);
    return out;
}

std::vector<double> sample_mixture(const std::vector<double>& mu,
                                   std::size_t n, CounterRng& rng) {
    const MixtureParams p = mixture_params(*mixture_error(mu));
    std::vector<double> out(n);
    for (auto& e : out) {
        const double u = rng.uniform();
        const double z = rng.normal();
        const double draw =
            u < p.p1 ? p.m1 + p.s1 * z : p.m2 + p.s2 * z;
        e = draw - p.m0;
    }
    return out;
}

std::vector<double> sample_skew_t(double xi, double omega, double alpha,
                                  double nu, std::size_t n, CounterRng& rng) {
    std::vector<double> out(n);
    for (auto& e : out) e = rng.skew_t(xi, omega, alpha, nu);
    return out;
}

std::vector<double> sample_perturbed_skew_t(const PerturbedSkewTSpec& spec,
                                            std::size_t n, CounterRng& rng) {
    if (!(spec.weight_skewt >= 0.0 && spec.weight_skewt <= 1.0))
        throw DomainError(
            "perturbed skew-t sampler: mixing weight must lie in [0, 1]");
    std::vector<double> out(n);
    for (auto& e : out) {
        const double u = rng.uniform();
        if (u < spec.weight_skewt) {
            e = rng.skew_t(spec.skew_t.xi, spec.skew_t.omega,
                           spec.skew_t.alpha, spec.skew_t.nu);
        } else {
            e = rng.gamma(spec.gamma_shape, spec.gamma_scale) - spec.shift;
        }
    }
    return out;
}

std::vector<double> ErrorLaw::sample(std::size_t n, CounterRng& rng) const {
    switch (kind) {
    case Kind::Normal: {
        if (!(v > 0.0)) throw DomainError("normal error law: v must be positive");
        const double sd = std::sqrt(v);
        std::vector<double> out(n);
        for (auto& e : out) e = sd * rng.normal();
        return out;
    }
    case Kind::Gumbel: return sample_gumbel(lambda, n, rng);
    case Kind::Mixture: return sample_mixture(mu, n, rng);
    case Kind::SkewT:
        return sample_skew_t(skew_t.xi, skew_t.omega, skew_t.alpha, skew_t.nu,
                             n, rng);
    case Kind::PerturbedSkewT: return sample_perturbed_skew_t(perturbed, n, rng);
    }
    throw InputError("error law: unknown kind");
}

std::string ErrorLaw::kind_name() const {
    switch (kind) {
    case Kind::Normal: return "normal";
    case Kind::Gumbel: return "gumbel";
    case Kind::Mixture: return "mixture";
    case Kind::SkewT: return "skew_t";
    case Kind::PerturbedSkewT: return "perturbed_skew_t";
    }
    return "unknown";
}

nlohmann::json ErrorLaw::to_json() const {
    switch (kind) {
    case Kind::Normal: return {{"kind", "normal"}, {"v", v}};
    case Kind::Gumbel: return {{"kind", "gumbel"}, {"lambda", lambda}};
    case Kind::Mixture: return {{"kind", "mixture"}, {"mu", mu}};
    case Kind::SkewT:
        return {{"kind", "skew_t"},
                {"xi", skew_t.xi},
                {"omega", skew_t.omega},
                {"alpha", skew_t.alpha},
                {"nu", skew_t.nu}};
    case Kind::PerturbedSkewT:
        return {{"kind", "perturbed_skew_t"},
                {"weight_skewt", perturbed.weight_skewt},
                {"skew_t",
                 {{"xi", perturbed.skew_t.xi},
                  {"omega", perturbed.skew_t.omega},
                  {"alpha", perturbed.skew_t.alpha},
                  {"nu", perturbed.skew_t.nu}}},
                {"gamma_shape", perturbed.gamma_shape},
                {"gamma_scale", perturbed.gamma_scale},
                {"shift", perturbed.shift}};
    }
    throw InputError("error law: unknown kind");
}

ErrorLaw ErrorLaw::from_json(const nlohmann::json& j) {
    ErrorLaw law;
    const std::string kind = json_string(j, "kind");
    if (kind == "normal") {
        law.kind = Kind::Normal;
        law.v = json_number(j, "v");
        if (!(law.v > 0.0))
            throw InputError("error law: 'v' must be positive");
    } else if (kind == "gumbel") {
        law.kind = Kind::Gumbel;
        law.lambda = json_number(j, "lambda");
        if (!(law.lambda > 0.0))
            throw InputError("error law: 'lambda' must be positive");
    } else if (kind == "mixture") {
        law.kind = Kind::Mixture;
        if (!j.contains("mu") || !j.at("mu").is_array() ||
            j.at("mu").size() != 7)
            throw InputError(
                "error law: mixture needs a 7-element numeric array 'mu' "
                "(p1, p2, m0, m1, m2, s1, s2)");
        law.mu.clear();
        for (const auto& e : j.at("mu")) {
            if (!e.is_number())
                throw InputError("error law: 'mu' entries must be numeric");
            law.mu.push_back(e.get<double>());
        }
        mixture_error(law.mu); // validates the parameter vector
    } else if (kind == "skew_t") {
        law.kind = Kind::SkewT;
        law.skew_t.xi = json_number(j, "xi");
        law.skew_t.omega = json_number(j, "omega");
        law.skew_t.alpha = json_number(j, "alpha");
        law.skew_t.nu = json_number(j, "nu");
        if (!(law.skew_t.omega > 0.0))
            throw InputError("error law: 'omega' must be positive");
        if (!(law.skew_t.nu > 2.0))
            throw InputError("error law: 'nu' must exceed 2");
    } else if (kind == "perturbed_skew_t") {
        law.kind = Kind::PerturbedSkewT;
        law.perturbed.weight_skewt = json_number_or(j, "weight_skewt", 0.7);
        if (!(law.perturbed.weight_skewt >= 0.0 &&
              law.perturbed.weight_skewt <= 1.0))
            throw InputError("error law: 'weight_skewt' must lie in [0, 1]");
        if (!j.contains("skew_t") || !j.at("skew_t").is_object())
            throw InputError("error law: perturbed_skew_t needs a 'skew_t' "
                             "object");
        const auto& st = j.at("skew_t");
        law.perturbed.skew_t.xi = json_number(st, "xi");
        law.perturbed.skew_t.omega = json_number(st, "omega");
        law.perturbed.skew_t.alpha = json_number(st, "alpha");
        law.perturbed.skew_t.nu = json_number(st, "nu");
        if (!(law.perturbed.skew_t.omega > 0.0))
            throw InputError("error law: 'omega' must be positive");
        if (!(law.perturbed.skew_t.nu > 2.0))
            throw InputError("error law: 'nu' must exceed 2");
        law.perturbed.gamma_shape = json_number_or(j, "gamma_shape", 2.5);
        law.perturbed.gamma_scale = json_number_or(j, "gamma_scale", 3.0);
        law.perturbed.shift = json_number_or(j, "shift", 7.5);
        if (!(law.perturbed.gamma_shape > 0.0) ||
            !(law.perturbed.gamma_scale > 0.0))
            throw InputError(
                "error law: 'gamma_shape' and 'gamma_scale' must be positive");
    } else {
        throw InputError(
            "error law: unknown kind '" + kind +
            "' (expected normal|gumbel|mixture|skew_t|perturbed_skew_t)");
    }
    return law;
}

// ---------------------------------------------------------------------------
// Scenario JSON

namespace {

nlohmann::json mean_model_to_json(const MeanModel& model) {
    switch (model.kind()) {
    case MeanModel::Kind::Linear:
        return {{"kind", "linear"},
                {"covariates", model.l()},
                {"intercept", model.intercept()}};
    case MeanModel::Kind::Exponential: return {{"kind", "exponential"}};
    case MeanModel::Kind::Custom:
        throw InputError("scenario: custom mean models have no JSON form");
    }
    throw InputError("scenario: unknown mean model kind");
}

MeanModel mean_model_from_json(const nlohmann::json& j) {
    const std::string kind = json_string(j, "kind");
    if (kind == "linear") {
        const auto covariates =
            static_cast<Eigen::Index>(json_number(j, "covariates"));
        if (covariates <= 0)
            throw InputError("scenario: 'covariates' must be positive");
        bool intercept = true;
        if (j.contains("intercept")) {
            if (!j.at("intercept").is_boolean())
                throw InputError("scenario: 'intercept' must be boolean");
            intercept = j.at("intercept").get<bool>();
        }
        return MeanModel::linear(covariates, intercept);
    }
    if (kind == "exponential") return MeanModel::exponential();
    throw InputError("scenario: unknown mean model kind '" + kind +
                     "' (expected linear|exponential)");
}

} // namespace

nlohmann::json SimScenario::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["mean_model"] = mean_model_to_json(mean_model);
    j["beta_true"] = std::vector<double>(
        beta_true.data(), beta_true.data() + beta_true.size());
    j["covariate_law"] = covariate_law.to_json();
    j["error_law"] = error_law.to_json();
    j["n"] = n;
    j["reps"] = reps;
    j["seed"] = seed;
    return j;
}

SimScenario SimScenario::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("scenario: expected a JSON object");
    if (!j.contains("mean_model") || !j.at("mean_model").is_object())
        throw InputError("scenario: missing object field 'mean_model'");
    if (!j.contains("covariate_law") || !j.at("covariate_law").is_object())
        throw InputError("scenario: missing object field 'covariate_law'");
    if (!j.contains("error_law") || !j.at("error_law").is_object())
        throw InputError("scenario: missing object field 'error_law'");
    if (!j.contains("beta_true") || !j.at("beta_true").is_array() ||
        j.at("beta_true").empty())
        throw InputError(
            "scenario: missing non-empty array field 'beta_true'");

    MeanModel model = mean_model_from_json(j.at("mean_model"));
    Eigen::VectorXd beta(static_cast<Eigen::Index>(j.at("beta_true").size()));
    for (std::size_t i = 0; i < j.at("beta_true").size(); ++i) {
        if (!j.at("beta_true").at(i).is_number())
            throw InputError("scenario: 'beta_true' entries must be numeric");
        beta(static_cast<Eigen::Index>(i)) =
            j.at("beta_true").at(i).get<double>();
    }
    if (beta.size() != model.k()) {
        std::ostringstream os;
        os << "scenario: 'beta_true' has " << beta.size()
           << " entries but the mean model has " << model.k()
           << " parameters";
        throw InputError(os.str());
    }

    SimScenario s{json_string(j, "name"),
                  std::move(model),
                  std::move(beta),
                  CovariateLaw::from_json(j.at("covariate_law")),
                  ErrorLaw::from_json(j.at("error_law")),
                  static_cast<Eigen::Index>(json_number(j, "n")),
                  static_cast<int>(json_number(j, "reps")),
                  static_cast<std::uint64_t>(json_number(j, "seed"))};
    if (s.n <= 0) throw InputError("scenario: 'n' must be positive");
    if (s.reps <= 0) throw InputError("scenario: 'reps' must be positive");
    if (s.covariate_law.columns() != s.mean_model.l()) {
        std::ostringstream os;
        os << "scenario: covariate law provides " << s.covariate_law.columns()
           << " column(s) but the mean model expects " << s.mean_model.l();
        throw InputError(os.str());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Monte Carlo study

namespace {

struct RepOutcome {
    bool ok = false;
    Eigen::VectorXd est;
    Eigen::VectorXd se;
    std::vector<std::uint8_t> cover;
    std::uint8_t sw_state = 0; // 0 = not evaluated, 1 = retained, 2 = rejected
};

std::vector<std::string> parameter_names(const MeanModel& model) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < model.k(); ++i)
        names.push_back("beta" + std::to_string(i + 1));
    names.push_back("v");
    return names;
}

} // namespace

SimReport run_study(const SimScenario& scenario,
                    const std::vector<ErrorMode>& modes,
                    const FitConfig& cfg) {
    if (modes.empty())
        throw InputError("simulation study: at least one error mode required");
    if (scenario.reps < 1)
        throw InputError("simulation study: 'reps' must be at least 1");
    if (scenario.n <= scenario.mean_model.k() + 1)
        throw InputError("simulation study: n must exceed k + 1");
    if (scenario.covariate_law.columns() != scenario.mean_model.l())
        throw InputError(
            "simulation study: covariate law columns do not match the mean "
            "model");
    if (scenario.beta_true.size() != scenario.mean_model.k())
        throw InputError(
            "simulation study: beta_true length does not match the mean "
            "model");
    for (const ErrorMode m : modes)
        if (m == ErrorMode::CustomParametric && !cfg.custom_refresh)
            throw InputError(
                "simulation study: custom error mode needs a refresh "
                "callback");

    const Eigen::Index k = scenario.mean_model.k();
    const Eigen::Index q = k + 1;
    const auto reps = static_cast<std::size_t>(scenario.reps);
    const std::size_t n_modes = modes.size();

    // Coverage truth: beta_true plus the error-law variance. A nonzero
    // error mean is absorbed exactly by a linear intercept, so it is added
    // there; the centered laws leave this a no-op.
    Eigen::VectorXd truth(q);
    truth.head(k) = scenario.beta_true;
    const bool shift_intercept =
        scenario.mean_model.kind() == MeanModel::Kind::Linear &&
        scenario.mean_model.intercept();
    if (shift_intercept) truth(0) += scenario.error_law.mean();
    truth(k) = scenario.error_law.variance();

    // One slot per (replication, mode); slot writes keep the parallel fill
    // deterministic.
    std::vector<std::vector<RepOutcome>> outcomes(
        n_modes, std::vector<RepOutcome>(reps));

    parallel_for(reps, [&](std::size_t rep_begin, std::size_t rep_end) {
      for (std::size_t r = rep_begin; r < rep_end; ++r) {
        CounterRng rng(scenario.seed, r);
        const Eigen::MatrixXd x = scenario.covariate_law.sample(scenario.n, rng);
        const std::vector<double> eps =
            scenario.error_law.sample(static_cast<std::size_t>(scenario.n), rng);
        Eigen::VectorXd y(scenario.n);
        for (Eigen::Index i = 0; i < scenario.n; ++i)
            y(i) = scenario.mean_model.evaluate(x.row(i).transpose(),
                                                scenario.beta_true) +
                   eps[static_cast<std::size_t>(i)];
        const Dataset data{x, y};

        for (std::size_t mi = 0; mi < n_modes; ++mi) {
            RepOutcome& out = outcomes[mi][r];
            FitConfig rep_cfg = cfg;
            rep_cfg.error_mode = modes[mi];
            try {
                const FitResult fit =
                    solve_efficient(data, scenario.mean_model, rep_cfg);
                if (!fit.converged) continue;
                out.est = fit.theta.beta;
                out.est.conservativeResize(q);
                out.est(k) = fit.theta.v;
                out.se = fit.se;
                out.cover.resize(static_cast<std::size_t>(q));
                for (Eigen::Index p = 0; p < q; ++p) {
                    const auto& ci = fit.ci95[static_cast<std::size_t>(p)];
                    out.cover[static_cast<std::size_t>(p)] =
                        (ci[0] <= truth(p) && truth(p) <= ci[1]) ? 1 : 0;
                }
                if (scenario.n >= 3 && scenario.n <= 5000) {
                    const ShapiroResult sw =
                        shapiro_wilk(as_span(fit.residuals));
                    out.sw_state = sw.p < 0.05 ? 2 : 1;
                }
                out.ok = true;
            } catch (const Error&) {
                // failed replication: excluded from aggregates, counted below
            }
        }
      }
    });

    SimReport report{scenario, {}, {}, false};
    const std::vector<std::string> names = parameter_names(scenario.mean_model);

    for (std::size_t mi = 0; mi < n_modes; ++mi) {
        ModeReport mode_report;
        mode_report.mode = error_mode_name(modes[mi]);

        std::vector<const RepOutcome*> good;
        good.reserve(reps);
        std::size_t sw_evaluated = 0, sw_rejected = 0;
        for (const RepOutcome& out : outcomes[mi]) {
            if (!out.ok) continue;
            good.push_back(&out);
            if (out.sw_state != 0) {
                ++sw_evaluated;
                if (out.sw_state == 2) ++sw_rejected;
            }
        }
        mode_report.reps_used = static_cast<int>(good.size());
        mode_report.failures = static_cast<int>(reps - good.size());
        mode_report.sw_reject_rate =
            sw_evaluated > 0 ? static_cast<double>(sw_rejected) /
                                   static_cast<double>(sw_evaluated)
                             : NAN_D;
        if (good.size() < 2) report.insufficient_replications = true;

        std::vector<double> col(good.size());
        for (Eigen::Index p = 0; p < q; ++p) {
            ParamSummary ps;
            ps.name = names[static_cast<std::size_t>(p)];
            ps.truth = truth(p);
            if (good.empty()) {
                ps.estimate = ps.se1 = ps.se2 = ps.cvg95 = NAN_D;
            } else {
                for (std::size_t g = 0; g < good.size(); ++g)
                    col[g] = good[g]->est(p);
                ps.estimate = median(col);
                ps.se1 = good.size() >= 2 ? sample_sd(col) : NAN_D;
                for (std::size_t g = 0; g < good.size(); ++g)
                    col[g] = good[g]->se(p);
                ps.se2 = median(col);
                double covered = 0.0;
                for (const RepOutcome* out : good)
                    covered += out->cover[static_cast<std::size_t>(p)];
                ps.cvg95 = covered / static_cast<double>(good.size());
            }
            mode_report.params.push_back(std::move(ps));
        }
        report.mode_names.push_back(mode_report.mode);
        report.modes.push_back(std::move(mode_report));
    }
    return report;
}

std::string SimReport::to_csv() const {
    std::ostringstream os;
    os << "scenario,mode,parameter,truth,estimate,se1,se2,cvg95,reps_used,"
          "failures,sw_reject_rate\n";
    for (const ModeReport& mode : modes) {
        for (const ParamSummary& p : mode.params) {
            os << scenario.name << ',' << mode.mode << ',' << p.name << ','
               << format_double(p.truth) << ',' << format_double(p.estimate)
               << ',' << format_double(p.se1) << ',' << format_double(p.se2)
               << ',' << format_double(p.cvg95) << ',' << mode.reps_used << ','
               << mode.failures << ',' << format_double(mode.sw_reject_rate)
               << '\n';
        }
    }
    return os.str();
}

nlohmann::json SimReport::metadata() const {
    nlohmann::json j;
    j["scenario"] = scenario.to_json();
    j["modes"] = mode_names;
    j["aggregation"] = {
        {"estimate", "median over successful replications"},
        {"se1", "sample standard deviation (divisor n-1) of estimates"},
        {"se2", "median of estimated standard errors"},
        {"coverage_level", 0.95},
        {"shapiro_alpha", 0.05},
        {"failure_policy", "failed or non-converged replications are "
                           "excluded from aggregates and counted"}};
    j["rng"] = {{"kind", "counter_splitmix64"},
                {"stream", "replication index"},
                {"common_random_numbers",
                 "each replication's dataset is shared across modes"},
                {"gamma_parameterization", "shape_scale"}};
    nlohmann::json se2_source;
    for (const std::string& m : mode_names)
        se2_source[m] = (m == "kernel" || m == "custom") ? "bound" : "sandwich";
    j["se2_source"] = se2_source;
    j["truth"] = {
        {"beta", "data-generating coefficients, error mean folded into a "
                 "linear intercept"},
        {"v", "error-law variance"}};
    j["insufficient_replications"] = insufficient_replications;
    return j;
}

} // namespace effreg
