#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>

namespace effreg {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// Observed sample for Y = m(X; beta) + eps. Rejects non-finite entries.
struct Dataset {
    Eigen::MatrixXd x; // n rows, l covariate columns
    Eigen::VectorXd y; // n responses

    Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in);

    Eigen::Index n() const { return y.size(); }
    Eigen::Index l() const { return x.cols(); }
};

// Parameter vector theta = (beta, v), v > 0.
struct Theta {
    Eigen::VectorXd beta;
    double v;

    Theta(Eigen::VectorXd beta_in, double v_in);

    Eigen::Index q() const { return beta.size() + 1; }
};

// Mean function m(x; beta) with analytic gradient in beta.
class MeanModel {
public:
    enum class Kind { Linear, Exponential, Custom };

    using EvalFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;
    using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

    // Linear mean over n_covariates columns, optionally with an intercept as
    // the leading coefficient.
    static MeanModel linear(Eigen::Index n_covariates, bool intercept);

    // m(x; beta) = beta1 * exp(beta2 * x), scalar covariate, k = 2.
    static MeanModel exponential();

    // User-supplied value/gradient pair.
    static MeanModel custom(Eigen::Index k, Eigen::Index l, EvalFn eval, GradFn grad);

    Kind kind() const { return kind_; }
    Eigen::Index k() const { return k_; }
    Eigen::Index l() const { return l_; }
    bool intercept() const { return intercept_; }

    double evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const;

    // Throws DomainError naming expected vs actual dimensions.
    void check_dims(const Dataset& data, const Eigen::VectorXd& beta) const;

private:
    MeanModel(Kind kind, Eigen::Index k, Eigen::Index l, bool intercept,
              EvalFn eval, GradFn grad);

    Kind kind_;
    Eigen::Index k_;
    Eigen::Index l_;
    bool intercept_;
    EvalFn eval_;
    GradFn grad_;
};

// eps_i = y_i - m(x_i; beta), in observation order.
Eigen::VectorXd residuals(const Dataset& data, const MeanModel& model,
                          const Eigen::VectorXd& beta);

// Per-observation gradient rows m'_beta(x_i; beta), n x k.
Eigen::MatrixXd gradient_matrix(const Dataset& data, const MeanModel& model,
                                const Eigen::VectorXd& beta);

// Least squares for a linear mean; v = mean squared residual (divisor n).
Theta ols_fit(const Dataset& data, bool intercept);
Theta ols_fit(const Dataset& data, const MeanModel& model);

// Damped Gauss-Newton least squares for any mean model. Used to initialize
// the efficient-score solver for nonlinear means. The exponential kind gets
// a log-linear warm start from the positive responses.
Theta nls_fit(const Dataset& data, const MeanModel& model);
Theta nls_fit(const Dataset& data, const MeanModel& model,
              const Eigen::VectorXd& beta0);

} // namespace effreg
