#include "effreg/score.hpp"

#include <cmath>

#include "effreg/error.hpp"
#include "effreg/parallel.hpp"
#include "effreg/stats.hpp"

namespace effreg {

double t_of_eps(double eps, double v, double mu3) {
    if (!(v > 0.0)) throw DomainError("t_of_eps: v must be positive");
    return eps * eps - v - mu3 * eps / v;
}

Eigen::VectorXd column_means(const Eigen::MatrixXd& m) {
    Eigen::VectorXd out(m.cols());
    const auto n = static_cast<std::size_t>(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        out(j) = pairwise_sum({m.col(j).data(), n}) / static_cast<double>(n);
    return out;
}

Eigen::MatrixXd average_outer_product(const Eigen::MatrixXd& m) {
    const auto n = static_cast<std::size_t>(m.rows());
    const Eigen::Index q = m.cols();
    Eigen::MatrixXd out(q, q);
    std::vector<double> buf(n);
    for (Eigen::Index a = 0; a < q; ++a) {
        for (Eigen::Index b = a; b < q; ++b) {
            for (std::size_t i = 0; i < n; ++i)
                buf[i] = m(static_cast<Eigen::Index>(i), a) *
                         m(static_cast<Eigen::Index>(i), b);
            const double val = pairwise_sum(buf) / static_cast<double>(n);
            out(a, b) = val;
            out(b, a) = val;
        }
    }
    return out;
}

ScoreContext make_score_context(const MeanModel& model, ErrorModelPtr error,
                                const Theta& theta, const Dataset& data) {
    model.check_dims(data, theta.beta);
    if (!error) throw DomainError("make_score_context: null error model");
    const Eigen::MatrixXd grads = gradient_matrix(data, model, theta.beta);
    ScoreContext ctx{&model, std::move(error), theta,
                     column_means(grads), 0.0, 0.0};
    ctx.mu3 = ctx.error->mu3();
    ctx.t_second_moment =
        moment_t_squared(ctx.error->mu4(), theta.v, ctx.mu3);
    return ctx;
}

namespace {

// Shared scalar pieces of both score variants.
struct ScoreParts {
    double eps;
    double common; // eps/v - mu3 t / (v E[t^2])
    double s_v;
};

ScoreParts score_parts(const Eigen::VectorXd& x, double y,
                       const ScoreContext& ctx) {
    const double eps = y - ctx.model->evaluate(x, ctx.theta.beta);
    const double v = ctx.theta.v;
    const double t = t_of_eps(eps, v, ctx.mu3);
    const double t2 = ctx.t_second_moment;
    return {eps, eps / v - ctx.mu3 * t / (v * t2), t / t2};
}

} // namespace

ScoreValue efficient_score(const Eigen::VectorXd& x, double y,
                           const ScoreContext& ctx) {
    const ScoreParts p = score_parts(x, y, ctx);
    const Eigen::VectorXd g = ctx.model->gradient(x, ctx.theta.beta);
    const double ratio = ctx.error->score_ratio(p.eps);
    return {-ratio * (g - ctx.mean_gradient_avg) +
                p.common * ctx.mean_gradient_avg,
            p.s_v};
}

ScoreValue efficient_score_type2(const Eigen::VectorXd& x, double y,
                                 const ScoreContext& ctx) {
    const ScoreParts p = score_parts(x, y, ctx);
    const Eigen::VectorXd g = ctx.model->gradient(x, ctx.theta.beta);
    return {p.common * g, p.s_v};
}

namespace {

template <typename ScoreFn>
Eigen::MatrixXd fill_score_matrix(const Dataset& data, const ScoreContext& ctx,
                                  ScoreFn&& fn) {
    const Eigen::Index n = data.n();
    const Eigen::Index q = ctx.q();
    Eigen::MatrixXd out(n, q);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const Eigen::VectorXd xi = data.x.row(row).transpose();
            const ScoreValue s = fn(xi, data.y(row), ctx);
            out.row(row).head(q - 1) = s.s_beta.transpose();
            out(row, q - 1) = s.s_v;
        }
    });
    return out;
}

} // namespace

Eigen::MatrixXd score_matrix(const Dataset& data, const ScoreContext& ctx) {
    return fill_score_matrix(data, ctx,
                             [](const Eigen::VectorXd& x, double y,
                                const ScoreContext& c) {
                                 return efficient_score(x, y, c);
                             });
}

Eigen::MatrixXd score_matrix_type2(const Dataset& data,
                                   const ScoreContext& ctx) {
    return fill_score_matrix(data, ctx,
                             [](const Eigen::VectorXd& x, double y,
                                const ScoreContext& c) {
                                 return efficient_score_type2(x, y, c);
                             });
}

Eigen::VectorXd mean_score(const Dataset& data, const ScoreContext& ctx) {
    return column_means(score_matrix(data, ctx));
}

Eigen::MatrixXd efficiency_gap(const MeanModel& model, ErrorModelPtr error,
                               const Theta& theta, const Dataset& data) {
    const ScoreContext ctx = make_score_context(model, std::move(error), theta, data);
    const Eigen::MatrixXd m1 = average_outer_product(score_matrix(data, ctx));
    const Eigen::MatrixXd m2 =
        average_outer_product(score_matrix_type2(data, ctx));
    Eigen::MatrixXd gap = m1 - m2;
    return 0.5 * (gap + gap.transpose());
}

} // namespace effreg
