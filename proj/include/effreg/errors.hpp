#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace effreg {

// Zero-mean error density interface consumed by the efficient score:
// density ratio f'/f, variance, third/fourth central moments, and the CDF
// pair used by quantile diagnostics. Implementations are immutable after
// construction and safe to share across threads; the only mutable state is
// the clamp counter tracking density floors hit inside score_ratio.
class ErrorModel {
public:
    virtual ~ErrorModel() = default;

    virtual std::string kind() const = 0;

    // f'(eps) / f(eps); denominators are floored at 1e-12 where division
    // could overflow, and each floor event increments the clamp counter.
    virtual double score_ratio(double eps) const = 0;

    virtual double pdf(double eps) const = 0;
    virtual double pdf_deriv(double eps) const = 0;
    virtual double cdf(double eps) const = 0;

    // Quantile function. Default: bisection on cdf to absolute 1e-10.
    virtual double inverse_cdf(double p) const;

    // Central moments. Kernel estimates do not own a variance (v is a
    // parameter of interest); they throw DomainError from variance().
    virtual double variance() const = 0;
    virtual double mu3() const = 0;
    virtual double mu4() const = 0;
    virtual bool has_closed_form_moments() const = 0;
    virtual bool has_own_variance() const { return true; }

    virtual nlohmann::json to_json() const = 0;

    std::uint64_t clamp_count() const { return clamps_.load(); }
    void reset_clamp_count() const { clamps_.store(0); }

protected:
    // Bracket for the default bisection inverse.
    virtual void quantile_bracket(double& lo, double& hi) const;

    mutable std::atomic<std::uint64_t> clamps_{0};
};

using ErrorModelPtr = std::shared_ptr<const ErrorModel>;

// N(0, v): score_ratio -eps/v, mu3 = 0, mu4 = 3 v^2.
ErrorModelPtr normal_error(double v);

// Centered minimum extreme value law with scale lambda:
// f = (1/lambda) exp{z - e^z}, z = (eps - lambda*gamma_E)/lambda.
// v = pi^2 lambda^2 / 6, mu3 = -2 lambda^3 zeta(3); mu4 from adaptive
// quadrature (the authoritative value; both closed-form candidates are
// recorded in the serialized metadata).
ErrorModelPtr gumbel_error(double lambda);

// Two-component normal mixture, mu = (p1, p2, m0, m1, m2, s1, s2) with
// m0 = p1 m1 + p2 m2; the density is centered by m0 so the implied error
// mean is exactly zero.
ErrorModelPtr mixture_error(const std::vector<double>& mu);

// Gaussian-kernel density over residual centers with bandwidth h.
// mu3/mu4 are the sample moments of the centers; no own variance.
ErrorModelPtr kde_error(std::span<const double> residuals, double h);

// Access to concrete parameters without downcasts.
struct GumbelParams { double lambda; };
struct MixtureParams { double p1, p2, m0, m1, m2, s1, s2; };
GumbelParams gumbel_params(const ErrorModel& model);
MixtureParams mixture_params(const ErrorModel& model);
double kde_bandwidth(const ErrorModel& model);
std::span<const double> kde_centers(const ErrorModel& model);

// Maximum likelihood scale for the centered minimum extreme value family.
// Precondition n >= 10; throws on zero spread or a search that never
// stabilizes (the message carries the last bracket).
ErrorModelPtr fit_gumbel(std::span<const double> residuals);

// EM fit of a two-component normal mixture with k-means-style
// initialization and random restarts; components ordered m1 <= m2 and the
// result recentered to mean zero. Precondition n >= 20. Sigma floor
// 1e-3 * sd(residuals); a collapsed component fails the restart, and an
// error names the component if every restart collapses.
ErrorModelPtr fit_mixture(std::span<const double> residuals, int restarts);

// Same, also returning the log-likelihood trace of the winning EM run
// (non-decreasing by construction; exposed for verification).
std::pair<ErrorModelPtr, std::vector<double>>
fit_mixture_traced(std::span<const double> residuals, int restarts);

// EM fit warm-started from a previous mixture solution (uncentered means).
// Falls back to the restarted fit if the warm run collapses.
ErrorModelPtr fit_mixture_warm(std::span<const double> residuals,
                               const MixtureParams& init, int restarts);

// h = {4 sigma_hat^5 / (3n)}^{1/5} with the n-1 sample standard deviation.
double silverman_bandwidth(std::span<const double> residuals);

// E[t(eps)^2] = mu4 - v^2 - mu3^2 / v; throws unless positive.
double moment_t_squared(double mu4, double v, double mu3);
double moment_t_squared(const ErrorModel& model);

// Round trip for serialized error models.
ErrorModelPtr error_model_from_json(const nlohmann::json& j);

} // namespace effreg
