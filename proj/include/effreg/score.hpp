#pragma once

#include <Eigen/Dense>

#include "effreg/errors.hpp"
#include "effreg/model.hpp"

namespace effreg {

// Everything the per-observation score needs at a fixed parameter state.
// All v occurrences in the score formulas use theta.v (the parameter of
// interest), while mu3/mu4 come from the error model; mixing them any other
// way makes the v estimating equation degenerate.
struct ScoreContext {
    const MeanModel* model;
    ErrorModelPtr error;
    Theta theta;
    Eigen::VectorXd mean_gradient_avg; // sample average of m'_beta rows
    double mu3;                        // error-model third central moment
    double t_second_moment;            // E[t(eps)^2] at theta.v

    Eigen::Index q() const { return theta.q(); }
};

struct ScoreValue {
    Eigen::VectorXd s_beta;
    double s_v;
};

// mean_gradient_avg is the pairwise-summed sample mean of gradient rows;
// recompute the context whenever beta or the error model changes.
ScoreContext make_score_context(const MeanModel& model, ErrorModelPtr error,
                                const Theta& theta, const Dataset& data);

// t(eps) = eps^2 - v - mu3 * eps / v.
double t_of_eps(double eps, double v, double mu3);

// Efficient score:
//   s_beta = -(f'/f)(eps) [m'_beta - avg(m'_beta)]
//            + (eps/v - mu3 t/(v E[t^2])) avg(m'_beta)
//   s_v = t / E[t^2]
ScoreValue efficient_score(const Eigen::VectorXd& x, double y,
                           const ScoreContext& ctx);

// Alternative score: s_beta = m'_beta (eps/v - mu3 t/(v E[t^2])), same s_v.
ScoreValue efficient_score_type2(const Eigen::VectorXd& x, double y,
                                 const ScoreContext& ctx);

// Per-observation efficient scores stacked as an n x q matrix (row i is the
// score at observation i). Rows are filled in parallel; any reduction over
// them must use fixed-order pairwise sums for thread-count stability.
Eigen::MatrixXd score_matrix(const Dataset& data, const ScoreContext& ctx);
Eigen::MatrixXd score_matrix_type2(const Dataset& data, const ScoreContext& ctx);

// Pairwise column means of score_matrix: the estimating function G(theta).
Eigen::VectorXd mean_score(const Dataset& data, const ScoreContext& ctx);

// Deterministic column means / scaled cross-product helpers shared with the
// solver's covariance estimators.
Eigen::VectorXd column_means(const Eigen::MatrixXd& m);
Eigen::MatrixXd average_outer_product(const Eigen::MatrixXd& m);

// Sample estimate of M1 - M2 = avg(S_eff S_eff^T) - avg(S_eff2 S_eff2^T),
// symmetrized; nonnegative definite up to Monte Carlo noise with a zero
// v row/column.
Eigen::MatrixXd efficiency_gap(const MeanModel& model, ErrorModelPtr error,
                               const Theta& theta, const Dataset& data);

} // namespace effreg
