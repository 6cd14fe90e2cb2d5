#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "effreg/model.hpp"
#include "effreg/rng.hpp"
#include "effreg/solver.hpp"

namespace effreg {

// Covariate generator for simulated designs.
struct CovariateLaw {
    enum class Kind { Gamma, NormalIid, Fixed };

    Kind kind = Kind::Gamma;
    double shape = 2.5;
    double scale = 1.5;
    Eigen::Index dim = 1;   // NormalIid column count
    Eigen::MatrixXd fixed;  // Fixed design rows

    Eigen::Index columns() const;
    Eigen::MatrixXd sample(Eigen::Index n, CounterRng& rng) const;

    nlohmann::json to_json() const;
    static CovariateLaw from_json(const nlohmann::json& j);
};

// Skew-t location/scale/slant/degrees-of-freedom, in the parameterization
// ST(xi, omega^2, alpha, nu) with omega stored unsquared.
struct SkewTSpec {
    double xi = 0.0;
    double omega = 1.0;
    double alpha = 0.0;
    double nu = 10.0;

    double mean() const;      // xi + omega * b_nu * delta
    double variance() const;  // omega^2 (nu/(nu-2) - (b_nu delta)^2), nu > 2
};

// 70/30-style contamination: skew-t with probability weight_skewt, else a
// shifted gamma.
struct PerturbedSkewTSpec {
    double weight_skewt = 0.7;
    SkewTSpec skew_t;
    double gamma_shape = 2.5;
    double gamma_scale = 3.0;
    double shift = 7.5;

    double mean() const;
    double variance() const;
};

// Error-law generator for the Monte Carlo harness.
struct ErrorLaw {
    enum class Kind { Normal, Gumbel, Mixture, SkewT, PerturbedSkewT };

    Kind kind = Kind::Normal;
    double v = 1.0;              // Normal
    double lambda = 1.5;         // Gumbel
    std::vector<double> mu;      // Mixture 7-vector
    SkewTSpec skew_t;            // SkewT
    PerturbedSkewTSpec perturbed; // PerturbedSkewT

    // Exact mean and variance of the law (the truth used for coverage).
    double mean() const;
    double variance() const;

    std::vector<double> sample(std::size_t n, CounterRng& rng) const;

    nlohmann::json to_json() const;
    static ErrorLaw from_json(const nlohmann::json& j);
    std::string kind_name() const;
};

// Samplers exposed individually for moment verification.
std::vector<double> sample_gumbel(double lambda, std::size_t n, CounterRng& rng);
std::vector<double> sample_mixture(const std::vector<double>& mu, std::size_t n,
                                   CounterRng& rng);
std::vector<double> sample_skew_t(double xi, double omega, double alpha,
                                  double nu, std::size_t n, CounterRng& rng);
std::vector<double> sample_perturbed_skew_t(const PerturbedSkewTSpec& spec,
                                            std::size_t n, CounterRng& rng);

struct SimScenario {
    std::string name;
    MeanModel mean_model;
    Eigen::VectorXd beta_true;
    CovariateLaw covariate_law;
    ErrorLaw error_law;
    Eigen::Index n = 0;
    int reps = 0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static SimScenario from_json(const nlohmann::json& j);
};

struct ParamSummary {
    std::string name;
    double truth = 0.0;
    double estimate = 0.0; // median over successful replications
    double se1 = 0.0;      // sd (n-1) of estimates
    double se2 = 0.0;      // median of estimated standard errors
    double cvg95 = 0.0;    // fraction of 95% CIs covering the truth
};

struct ModeReport {
    std::string mode;
    std::vector<ParamSummary> params;
    int reps_used = 0;
    int failures = 0; // thrown or non-converged replications
    // Shapiro-Wilk rejection rate at alpha = 0.05, computed on this mode's
    // fit residuals (NaN when n is outside the supported test range).
    double sw_reject_rate = 0.0;
};

struct SimReport {
    SimScenario scenario;
    std::vector<std::string> mode_names;
    std::vector<ModeReport> modes;
    bool insufficient_replications = false;

    std::string to_csv() const;
    nlohmann::json metadata() const;
};

// Runs reps independent replications per mode with common random numbers:
// the dataset of replication r comes from counter stream r of the scenario
// seed and is shared across modes. Replication failures (exceptions or
// non-converged fits) are excluded from aggregates and counted.
SimReport run_study(const SimScenario& scenario,
                    const std::vector<ErrorMode>& modes, const FitConfig& cfg);

} // namespace effreg
