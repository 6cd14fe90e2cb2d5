#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "effreg/errors.hpp"
#include "effreg/model.hpp"

namespace effreg {

// How the unknown error density is plugged into the efficient score.
// Normal ties the plug-in variance to theta.v; Gumbel and Mixture re-fit
// their parameters from current residuals every outer iteration; Kernel
// rebuilds the density estimate from current residuals; CustomParametric
// delegates the refresh to a user callback.
enum class ErrorMode { Normal, Gumbel, Mixture, Kernel, CustomParametric };

std::string error_mode_name(ErrorMode mode);
ErrorMode error_mode_from_name(const std::string& name);

struct FitConfig {
    int max_outer_iters = 50;
    int max_newton_iters = 100;
    double tol_theta = 1e-8;
    double tol_score = 1e-8;
    double jacobian_step = 1e-6;
    ErrorMode error_mode = ErrorMode::Normal;
    int mixture_restarts = 5;
    // Initial beta; required for Custom mean models, optional otherwise.
    std::optional<Eigen::VectorXd> beta_init;
    // Error-model refresh for CustomParametric mode.
    std::function<ErrorModelPtr(std::span<const double>)> custom_refresh;
};

struct FitResult {
    FitResult(Theta theta_in, MeanModel model_in, FitConfig config_in)
        : theta(std::move(theta_in)),
          model(std::move(model_in)),
          config(std::move(config_in)) {}

    Theta theta;
    MeanModel model;
    FitConfig config;

    Eigen::MatrixXd covariance;         // q x q, symmetric PSD
    Eigen::VectorXd se;                 // sqrt of covariance diagonal
    std::vector<std::array<double, 2>> ci95;
    Eigen::VectorXd residuals;
    ErrorModelPtr error_model;

    int iterations = 0;                 // outer refresh/Newton cycles
    int newton_steps = 0;
    bool converged = false;
    std::uint64_t clamp_count = 0;
    double final_score_norm = 0.0;
    std::vector<double> score_norm_history; // sup-norm after each refresh
    std::string covariance_method;      // "sandwich" or "bound"
    std::string message;
};

// Solves the sample efficient-score equation for theta = (beta, v).
// Outer loop: refresh nuisance error parameters from current residuals,
// then one damped Newton step on (beta, log v) with a central-difference
// Jacobian (spectral fallback when the Jacobian condition exceeds 1e12).
// Non-convergence returns a flagged result; a singular Jacobian throws
// SingularError with a condition report; intercept-only designs are
// rejected.
FitResult solve_efficient(const Dataset& data, const MeanModel& model,
                          const FitConfig& cfg);

// n^{-1} (sample average of S_eff S_eff^T at theta-hat)^{-1}.
// Throws SingularError with an eigenvalue report if the average is
// near singular.
Eigen::MatrixXd covariance_bound(const Dataset& data, const FitResult& fit);

// Sandwich covariance n^{-1} A^{-1} B A^{-T} for the stacked (theta, xi)
// estimating system: xi is lambda for Gumbel mode and the uncentered
// (p1, m1, m2, log s1, log s2) for Mixture mode, with the corresponding
// maximum-likelihood scores stacked under the efficient score. Normal mode
// has no extra xi (the plug-in variance is theta.v); Kernel and
// CustomParametric freeze the fitted error model. The theta block of the
// full inverse is returned, symmetrized.
Eigen::MatrixXd covariance_sandwich(const Dataset& data, const FitResult& fit);

// theta_j +/- z_{(1+level)/2} * se_j with the implemented normal quantile.
std::vector<std::array<double, 2>> confidence_intervals(const FitResult& fit,
                                                        double level);

nlohmann::json fit_result_json(const FitResult& fit);

} // namespace effreg
