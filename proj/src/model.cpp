#include "effreg/model.hpp"
#include "effreg/error.hpp"
#include "effreg/stats.hpp"

#include <cmath>
#include <sstream>

namespace effreg {

Dataset::Dataset(Eigen::MatrixXd x_in, Eigen::VectorXd y_in)
    : x(std::move(x_in)), y(std::move(y_in)) {
    if (y.size() < 2) throw DomainError("Dataset: need at least 2 observations");
    if (x.rows() != y.size()) {
        std::ostringstream os;
        os << "Dataset: covariate rows (" << x.rows() << ") != responses ("
           << y.size() << ")";
        throw DomainError(os.str());
    }
    if (!x.allFinite() || !y.allFinite())
        throw DomainError("Dataset: non-finite entry rejected");
}

Theta::Theta(Eigen::VectorXd beta_in, double v_in)
    : beta(std::move(beta_in)), v(v_in) {
    if (!(v > 0.0)) throw DomainError("Theta: v must be positive");
    if (!beta.allFinite()) throw DomainError("Theta: non-finite beta");
}

MeanModel::MeanModel(Kind kind, Eigen::Index k, Eigen::Index l, bool intercept,
                     EvalFn eval, GradFn grad)
    : kind_(kind), k_(k), l_(l), intercept_(intercept),
      eval_(std::move(eval)), grad_(std::move(grad)) {}

MeanModel MeanModel::linear(Eigen::Index n_covariates, bool intercept) {
    if (n_covariates < 0) throw DomainError("MeanModel::linear: negative covariate count");
    const Eigen::Index k = n_covariates + (intercept ? 1 : 0);
    if (k == 0) throw DomainError("MeanModel::linear: empty parameter vector");
    auto eval = [intercept](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
        if (intercept) return b(0) + x.dot(b.tail(b.size() - 1));
        return x.dot(b);
    };
    auto grad = [intercept](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
        Eigen::VectorXd g(b.size());
        if (intercept) {
            g(0) = 1.0;
            g.tail(b.size() - 1) = x;
        } else {
            g = x;
        }
        return g;
    };
    return MeanModel(Kind::Linear, k, n_covariates, intercept, eval, grad);
}

MeanModel MeanModel::exponential() {
    auto eval = [](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
        return b(0) * std::exp(b(1) * x(0));
    };
    auto grad = [](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
        const double e = std::exp(b(1) * x(0));
        Eigen::VectorXd g(2);
        g(0) = e;
        g(1) = b(0) * x(0) * e;
        return g;
    };
    return MeanModel(Kind::Exponential, 2, 1, false, eval, grad);
}

MeanModel MeanModel::custom(Eigen::Index k, Eigen::Index l, EvalFn eval, GradFn grad) {
    if (k < 1 || l < 1) throw DomainError("MeanModel::custom: k and l must be >= 1");
    if (!eval || !grad) throw DomainError("MeanModel::custom: missing closure");
    return MeanModel(Kind::Custom, k, l, false, std::move(eval), std::move(grad));
}

double MeanModel::evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const {
    return eval_(x, beta);
}

Eigen::VectorXd MeanModel::gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const {
    return grad_(x, beta);
}

void MeanModel::check_dims(const Dataset& data, const Eigen::VectorXd& beta) const {
    if (beta.size() != k_ || data.l() != l_) {
        std::ostringstream os;
        os << "MeanModel: expected k=" << k_ << ", l=" << l_ << "; got beta size "
           << beta.size() << ", covariate columns " << data.l();
        throw DomainError(os.str());
    }
}

Eigen::VectorXd residuals(const Dataset& data, const MeanModel& model,
                          const Eigen::VectorXd& beta) {
    model.check_dims(data, beta);
    Eigen::VectorXd r(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i)
        r(i) = data.y(i) - model.evaluate(data.x.row(i).transpose(), beta);
    if (!r.allFinite()) throw DomainError("residuals: non-finite value");
    return r;
}

Eigen::MatrixXd gradient_matrix(const Dataset& data, const MeanModel& model,
                                const Eigen::VectorXd& beta) {
    model.check_dims(data, beta);
    Eigen::MatrixXd g(data.n(), model.k());
    for (Eigen::Index i = 0; i < data.n(); ++i)
        g.row(i) = model.gradient(data.x.row(i).transpose(), beta).transpose();
    return g;
}

namespace {

Theta least_squares_theta(const Dataset& data, const Eigen::MatrixXd& design) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols()) {
        // First permuted-away column is the one that failed the pivot.
        const auto& perm = qr.colsPermutation();
        const Eigen::Index bad = perm.indices()(qr.rank());
        std::ostringstream os;
        os << "ols_fit: design matrix is rank deficient (rank " << qr.rank()
           << " of " << design.cols() << "); offending column " << bad;
        throw SingularError(os.str());
    }
    Eigen::VectorXd beta = qr.solve(data.y);
    Eigen::VectorXd r = data.y - design * beta;
    const double v = r.squaredNorm() / static_cast<double>(data.n());
    // Zero-noise designs give v = 0; keep theta valid with a tiny floor.
    return Theta(std::move(beta), v > 0.0 ? v : 1e-300);
}

} // namespace

Theta ols_fit(const Dataset& data, bool intercept) {
    const Eigen::Index n = data.n();
    const Eigen::Index k = data.l() + (intercept ? 1 : 0);
    if (n <= k) throw DomainError("ols_fit: need more observations than parameters");
    Eigen::MatrixXd design(n, k);
    if (intercept) {
        design.col(0).setOnes();
        design.rightCols(data.l()) = data.x;
    } else {
        design = data.x;
    }
    return least_squares_theta(data, design);
}

Theta ols_fit(const Dataset& data, const MeanModel& model) {
    if (model.kind() != MeanModel::Kind::Linear)
        throw DomainError("ols_fit: mean model is not linear");
    return ols_fit(data, model.intercept());
}

namespace {

Eigen::VectorXd exponential_warm_start(const Dataset& data) {
    // Log-linear fit over positive responses: ln y ~ ln b1 + b2 x.
    std::vector<double> xs, ls;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.y(i) > 0.0) {
            xs.push_back(data.x(i, 0));
            ls.push_back(std::log(data.y(i)));
        }
    }
    Eigen::VectorXd b0(2);
    if (xs.size() < 3) {
        b0 << 1.0, -0.1;
        return b0;
    }
    const double n = static_cast<double>(xs.size());
    const double mx = pairwise_sum(xs) / n;
    const double ml = pairwise_sum(ls) / n;
    double sxx = 0.0, sxl = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxl += (xs[i] - mx) * (ls[i] - ml);
    }
    if (sxx <= 0.0) {
        b0 << 1.0, -0.1;
        return b0;
    }
    const double slope = sxl / sxx;
    b0 << std::exp(ml - slope * mx), slope;
    return b0;
}

} // namespace

Theta nls_fit(const Dataset& data, const MeanModel& model,
              const Eigen::VectorXd& beta0) {
    model.check_dims(data, beta0);
    if (data.n() <= model.k())
        throw DomainError("nls_fit: need more observations than parameters");
    Eigen::VectorXd beta = beta0;
    Eigen::VectorXd r = data.y;
    for (Eigen::Index i = 0; i < data.n(); ++i)
        r(i) -= model.evaluate(data.x.row(i).transpose(), beta);
    double ssr = r.squaredNorm();

    for (int it = 0; it < 100; ++it) {
        const Eigen::MatrixXd j = gradient_matrix(data, model, beta);
        Eigen::MatrixXd jtj = j.transpose() * j;
        // Levenberg damping keeps steps sane near rank deficiency.
        jtj.diagonal().array() += 1e-10 * (1.0 + jtj.diagonal().maxCoeff());
        const Eigen::VectorXd delta = jtj.ldlt().solve(j.transpose() * r);
        if (!delta.allFinite()) break;

        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < 25; ++h) {
            const Eigen::VectorXd cand = beta + step * delta;
            Eigen::VectorXd rc(data.n());
            bool finite = true;
            for (Eigen::Index i = 0; i < data.n(); ++i) {
                rc(i) = data.y(i) - model.evaluate(data.x.row(i).transpose(), cand);
                if (!std::isfinite(rc(i))) { finite = false; break; }
            }
            if (finite && rc.squaredNorm() < ssr) {
                beta = cand;
                r = rc;
                ssr = rc.squaredNorm();
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        if (step * delta.cwiseAbs().maxCoeff() <
            1e-10 * (1.0 + beta.cwiseAbs().maxCoeff()))
            break;
    }
    const double v = ssr / static_cast<double>(data.n());
    return Theta(beta, v > 0.0 ? v : 1e-300);
}

Theta nls_fit(const Dataset& data, const MeanModel& model) {
    if (model.kind() == MeanModel::Kind::Linear) return ols_fit(data, model);
    if (model.kind() == MeanModel::Kind::Exponential)
        return nls_fit(data, model, exponential_warm_start(data));
    throw DomainError("nls_fit: custom models need an explicit starting point");
}

} // namespace effreg
