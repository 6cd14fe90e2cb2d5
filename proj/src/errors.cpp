#include "effreg/errors.hpp"
#include "effreg/error.hpp"
#include "effreg/quadrature.hpp"
#include "effreg/rng.hpp"
#include "effreg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace effreg {

namespace {

constexpr double EULER_GAMMA = 0.57721566490153286061;
constexpr double ZETA3 = 1.20205690315959428540;
constexpr double PDF_FLOOR = 1e-12;
constexpr double PI = 3.14159265358979323846;

} // namespace

void ErrorModel::quantile_bracket(double& lo, double& hi) const {
    lo = -1.0;
    hi = 1.0;
}

double ErrorModel::inverse_cdf(double p) const {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("inverse_cdf: p outside (0,1)");
    double lo, hi;
    quantile_bracket(lo, hi);
    double width = hi - lo;
    int grow = 0;
    while (cdf(lo) > p && grow++ < 200) lo -= width;
    while (cdf(hi) < p && grow++ < 200) hi += width;
    if (grow >= 200) {
        std::ostringstream os;
        os << "inverse_cdf: failed to bracket p=" << p << " (last bracket ["
           << lo << ", " << hi << "])";
        throw ConvergenceError(os.str());
    }
    // Bisection to absolute tolerance 1e-10.
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

class NormalError final : public ErrorModel {
public:
    explicit NormalError(double v) : v_(v), sd_(std::sqrt(v)) {}

    std::string kind() const override { return "normal"; }

    double score_ratio(double eps) const override { return -eps / v_; }

    double pdf(double eps) const override { return normal_pdf(eps / sd_) / sd_; }

    double pdf_deriv(double eps) const override {
        return -(eps / v_) * pdf(eps);
    }

    double cdf(double eps) const override { return normal_cdf(eps / sd_); }

    double inverse_cdf(double p) const override {
        return sd_ * effreg::inv_normal_cdf(p);
    }

    double variance() const override { return v_; }
    double mu3() const override { return 0.0; }
    double mu4() const override { return 3.0 * v_ * v_; }
    bool has_closed_form_moments() const override { return true; }

    nlohmann::json to_json() const override {
        return {{"kind", "normal"}, {"v", v_}};
    }

private:
    double v_;
    double sd_;
};

class GumbelError final : public ErrorModel {
public:
    GumbelError(double lambda, double mu4_quadrature)
        : lambda_(lambda), mu4_(mu4_quadrature) {}

    std::string kind() const override { return "gumbel"; }

    double z_of(double eps) const { return eps / lambda_ - EULER_GAMMA; }

    double score_ratio(double eps) const override {
        double z = z_of(eps);
        if (z > 700.0) {
            // exp would overflow; far right tail cannot occur for finite
            // density mass, so clamp and count.
            clamps_.fetch_add(1);
            z = 700.0;
        }
        return (1.0 - std::exp(z)) / lambda_;
    }

    double pdf(double eps) const override {
        const double z = z_of(eps);
        return std::exp(z - std::exp(z)) / lambda_;
    }

    double pdf_deriv(double eps) const override {
        const double z = z_of(eps);
        return (1.0 - std::exp(z)) * std::exp(z - std::exp(z)) /
               (lambda_ * lambda_);
    }

    double cdf(double eps) const override {
        return -std::expm1(-std::exp(z_of(eps)));
    }

    double inverse_cdf(double p) const override {
        if (!(p > 0.0 && p < 1.0))
            throw DomainError("inverse_cdf: p outside (0,1)");
        return lambda_ * (EULER_GAMMA + std::log(-std::log1p(-p)));
    }

    double variance() const override {
        return PI * PI * lambda_ * lambda_ / 6.0;
    }
    double mu3() const override {
        return -2.0 * lambda_ * lambda_ * lambda_ * ZETA3;
    }
    double mu4() const override { return mu4_; }
    bool has_closed_form_moments() const override { return true; }

    nlohmann::json to_json() const override {
        const double l4 = std::pow(lambda_, 4);
        return {{"kind", "gumbel"},
                {"lambda", lambda_},
                {"mu4_quadrature", mu4_},
                // Two closed-form candidates exist for the fourth moment;
                // the quadrature value above is authoritative.
                {"mu4_closed_kurtosis", 3.0 * std::pow(PI, 4) * l4 / 20.0},
                {"mu4_closed_alternative", std::pow(PI, 4) * l4 / 15.0}};
    }

    double lambda() const { return lambda_; }

protected:
    void quantile_bracket(double& lo, double& hi) const override {
        lo = -20.0 * lambda_;
        hi = 5.0 * lambda_;
    }

private:
    double lambda_;
    double mu4_;
};

class NormalMixtureError final : public ErrorModel {
public:
    explicit NormalMixtureError(const std::vector<double>& mu) {
        if (mu.size() != 7)
            throw DomainError("mixture_error: mu must have 7 entries");
        p1_ = mu[0]; p2_ = mu[1]; m0_ = mu[2];
        m1_ = mu[3]; m2_ = mu[4]; s1_ = mu[5]; s2_ = mu[6];
        if (!(p1_ > 0.0 && p1_ < 1.0 && p2_ > 0.0 && p2_ < 1.0))
            throw DomainError("mixture_error: weights must lie in (0,1)");
        if (std::abs(p1_ + p2_ - 1.0) > 1e-10)
            throw DomainError("mixture_error: weights must sum to 1");
        if (!(s1_ > 0.0 && s2_ > 0.0))
            throw DomainError("mixture_error: standard deviations must be positive");
        const double scale = 1.0 + std::abs(m1_) + std::abs(m2_);
        if (std::abs(m0_ - (p1_ * m1_ + p2_ * m2_)) > 1e-8 * scale)
            throw DomainError("mixture_error: m0 must equal p1*m1 + p2*m2");
        a1_ = m1_ - m0_;
        a2_ = m2_ - m0_;
    }

    std::string kind() const override { return "mixture"; }

    double comp_pdf(double eps, double a, double s) const {
        return normal_pdf((eps - a) / s) / s;
    }

    double pdf(double eps) const override {
        return p1_ * comp_pdf(eps, a1_, s1_) + p2_ * comp_pdf(eps, a2_, s2_);
    }

    double pdf_deriv(double eps) const override {
        const double f1 = comp_pdf(eps, a1_, s1_);
        const double f2 = comp_pdf(eps, a2_, s2_);
        return -p1_ * (eps - a1_) / (s1_ * s1_) * f1 -
               p2_ * (eps - a2_) / (s2_ * s2_) * f2;
    }

    double score_ratio(double eps) const override {
        double f = pdf(eps);
        if (f < PDF_FLOOR) {
            clamps_.fetch_add(1);
            f = PDF_FLOOR;
        }
        return pdf_deriv(eps) / f;
    }

    double cdf(double eps) const override {
        return p1_ * normal_cdf((eps - a1_) / s1_) +
               p2_ * normal_cdf((eps - a2_) / s2_);
    }

    double variance() const override {
        return p1_ * (a1_ * a1_ + s1_ * s1_) + p2_ * (a2_ * a2_ + s2_ * s2_);
    }

    double mu3() const override {
        return p1_ * (std::pow(a1_, 3) + 3.0 * a1_ * s1_ * s1_) +
               p2_ * (std::pow(a2_, 3) + 3.0 * a2_ * s2_ * s2_);
    }

    double mu4() const override {
        return p1_ * (std::pow(a1_, 4) + 6.0 * a1_ * a1_ * s1_ * s1_ +
                      3.0 * std::pow(s1_, 4)) +
               p2_ * (std::pow(a2_, 4) + 6.0 * a2_ * a2_ * s2_ * s2_ +
                      3.0 * std::pow(s2_, 4));
    }

    bool has_closed_form_moments() const override { return true; }

    nlohmann::json to_json() const override {
        return {{"kind", "mixture"},
                {"p1", p1_}, {"p2", p2_}, {"m0", m0_},
                {"m1", m1_}, {"m2", m2_}, {"s1", s1_}, {"s2", s2_}};
    }

    MixtureParams params() const {
        return {p1_, p2_, m0_, m1_, m2_, s1_, s2_};
    }

protected:
    void quantile_bracket(double& lo, double& hi) const override {
        const double smax = std::max(s1_, s2_);
        lo = std::min(a1_, a2_) - 12.0 * smax;
        hi = std::max(a1_, a2_) + 12.0 * smax;
    }

private:
    double p1_, p2_, m0_, m1_, m2_, s1_, s2_;
    double a1_, a2_;
};

class KernelDensityError final : public ErrorModel {
public:
    KernelDensityError(std::span<const double> residuals, double h)
        : centers_(residuals.begin(), residuals.end()), h_(h) {
        if (!(h_ > 0.0)) throw DomainError("kde_error: bandwidth must be positive");
        if (centers_.size() < 2) throw DomainError("kde_error: need n >= 2 centers");
        mu3_ = raw_moment(centers_, 3);
        mu4_ = raw_moment(centers_, 4);
        lo_ = *std::min_element(centers_.begin(), centers_.end());
        hi_ = *std::max_element(centers_.begin(), centers_.end());
    }

    std::string kind() const override { return "kernel"; }

    // Single pass shared by pdf, derivative, and score ratio.
    void sums(double eps, double& s0, double& s1) const {
        s0 = 0.0;
        s1 = 0.0;
        for (const double c : centers_) {
            const double u = (eps - c) / h_;
            const double e = std::exp(-0.5 * u * u);
            s0 += e;
            s1 += u * e;
        }
    }

    double pdf(double eps) const override {
        double s0, s1;
        sums(eps, s0, s1);
        const double n = static_cast<double>(centers_.size());
        return s0 * 0.3989422804014326779 / (n * h_);
    }

    double pdf_deriv(double eps) const override {
        double s0, s1;
        sums(eps, s0, s1);
        const double n = static_cast<double>(centers_.size());
        return -s1 * 0.3989422804014326779 / (n * h_ * h_);
    }

    double score_ratio(double eps) const override {
        double s0, s1;
        sums(eps, s0, s1);
        const double n = static_cast<double>(centers_.size());
        double f = s0 * 0.3989422804014326779 / (n * h_);
        const double fp = -s1 * 0.3989422804014326779 / (n * h_ * h_);
        if (f < PDF_FLOOR) {
            clamps_.fetch_add(1);
            f = PDF_FLOOR;
        }
        return fp / f;
    }

    double cdf(double eps) const override {
        double s = 0.0;
        for (const double c : centers_) s += normal_cdf((eps - c) / h_);
        return s / static_cast<double>(centers_.size());
    }

    double variance() const override {
        throw DomainError(
            "kernel error model does not define a variance; v is a solved parameter");
    }
    double mu3() const override { return mu3_; }
    double mu4() const override { return mu4_; }
    bool has_closed_form_moments() const override { return false; }
    bool has_own_variance() const override { return false; }

    nlohmann::json to_json() const override {
        nlohmann::json j{{"kind", "kernel"},
                         {"h", h_},
                         {"n_centers", centers_.size()}};
        if (centers_.size() <= 10000) j["centers"] = centers_;
        return j;
    }

    double bandwidth() const { return h_; }
    std::span<const double> centers() const { return centers_; }

protected:
    void quantile_bracket(double& lo, double& hi) const override {
        lo = lo_ - 12.0 * h_;
        hi = hi_ + 12.0 * h_;
    }

private:
    std::vector<double> centers_;
    double h_;
    double mu3_, mu4_;
    double lo_, hi_;
};

} // namespace

ErrorModelPtr normal_error(double v) {
    if (!(v > 0.0)) throw DomainError("normal_error: v must be positive");
    return std::make_shared<NormalError>(v);
}

ErrorModelPtr gumbel_error(double lambda) {
    if (!(lambda > 0.0)) throw DomainError("gumbel_error: lambda must be positive");
    const double sigma = PI * lambda / std::sqrt(6.0);
    auto pdf = [lambda](double e) {
        const double z = e / lambda - EULER_GAMMA;
        return std::exp(z - std::exp(z)) / lambda;
    };
    const double tol = 1e-9 * std::max(1.0, std::pow(lambda, 4));
    const double mu4 = integrate_tailed(
        [&](double e) { return std::pow(e, 4) * pdf(e); }, 0.0, sigma, tol);
    return std::make_shared<GumbelError>(lambda, mu4);
}

ErrorModelPtr mixture_error(const std::vector<double>& mu) {
    return std::make_shared<NormalMixtureError>(mu);
}

ErrorModelPtr kde_error(std::span<const double> residuals, double h) {
    return std::make_shared<KernelDensityError>(residuals, h);
}

GumbelParams gumbel_params(const ErrorModel& model) {
    const auto* g = dynamic_cast<const GumbelError*>(&model);
    if (!g) throw DomainError("gumbel_params: model is not gumbel");
    return {g->lambda()};
}

MixtureParams mixture_params(const ErrorModel& model) {
    const auto* m = dynamic_cast<const NormalMixtureError*>(&model);
    if (!m) throw DomainError("mixture_params: model is not a mixture");
    return m->params();
}

double kde_bandwidth(const ErrorModel& model) {
    const auto* k = dynamic_cast<const KernelDensityError*>(&model);
    if (!k) throw DomainError("kde_bandwidth: model is not a kernel density");
    return k->bandwidth();
}

std::span<const double> kde_centers(const ErrorModel& model) {
    const auto* k = dynamic_cast<const KernelDensityError*>(&model);
    if (!k) throw DomainError("kde_centers: model is not a kernel density");
    return k->centers();
}

namespace {

double gumbel_loglik(std::span<const double> r, double lambda) {
    double ll = 0.0;
    for (const double e : r) {
        const double z = e / lambda - EULER_GAMMA;
        ll += -std::log(lambda) + z - std::exp(z);
    }
    return ll;
}

} // namespace

ErrorModelPtr fit_gumbel(std::span<const double> residuals) {
    if (residuals.size() < 10)
        throw DomainError("fit_gumbel: need n >= 10 residuals");
    const double var = variance_mle(residuals);
    if (!(var > 0.0)) throw DomainError("fit_gumbel: zero-spread residuals");

    // Moment start mapping the sample variance to the scale.
    const double lam0 = std::sqrt(6.0 * var) / PI;
    double lo = lam0 / 8.0;
    double hi = lam0 * 8.0;

    const double invphi = 0.6180339887498948482;
    for (int attempt = 0; attempt < 3; ++attempt) {
        double a = lo, b = hi;
        double c = b - invphi * (b - a);
        double d = a + invphi * (b - a);
        double fc = gumbel_loglik(residuals, c);
        double fd = gumbel_loglik(residuals, d);
        for (int it = 0; it < 200 && (b - a) > 1e-11 * lam0; ++it) {
            if (fc > fd) {
                b = d; d = c; fd = fc;
                c = b - invphi * (b - a);
                fc = gumbel_loglik(residuals, c);
            } else {
                a = c; c = d; fc = fd;
                d = a + invphi * (b - a);
                fd = gumbel_loglik(residuals, d);
            }
        }
        const double lam = 0.5 * (a + b);
        // An interior optimum is accepted; an endpoint means the bracket
        // missed the maximum, so widen and retry.
        if (lam > lo * 1.05 && lam < hi / 1.05) return gumbel_error(lam);
        lo /= 8.0;
        hi *= 8.0;
    }
    std::ostringstream os;
    os << "fit_gumbel: scale search did not stabilize; last bracket ["
       << lo << ", " << hi << "]";
    throw ConvergenceError(os.str());
}

namespace {

struct EmState {
    double p1, m1, m2, s1, s2;
};

// One EM run from a given start; returns false if a component collapses.
bool run_em(std::span<const double> r, EmState& st, double sfloor,
            std::vector<double>* trace, double& final_ll,
            int* collapsed_component) {
    const std::size_t n = r.size();
    std::vector<double> w(n);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < 3000; ++it) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f1 =
                st.p1 * normal_pdf((r[i] - st.m1) / st.s1) / st.s1;
            const double f2 =
                (1.0 - st.p1) * normal_pdf((r[i] - st.m2) / st.s2) / st.s2;
            const double tot = f1 + f2;
            if (!(tot > 0.0)) {
                *collapsed_component = (st.s1 < st.s2) ? 1 : 2;
                return false;
            }
            w[i] = f1 / tot;
            ll += std::log(tot);
        }
        if (trace) trace->push_back(ll);
        if (ll - prev_ll < 1e-8 &&
            ll >= prev_ll - 1e-9 * (1.0 + std::abs(prev_ll))) {
            final_ll = ll;
            return true;
        }
        prev_ll = ll;

        double sw = 0.0, swr1 = 0.0, swr2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            swr1 += w[i] * r[i];
            swr2 += (1.0 - w[i]) * r[i];
        }
        const double nw2 = static_cast<double>(n) - sw;
        if (sw < 1e-4 * n || nw2 < 1e-4 * n) {
            *collapsed_component = (sw < nw2) ? 1 : 2;
            return false;
        }
        st.p1 = sw / static_cast<double>(n);
        st.m1 = swr1 / sw;
        st.m2 = swr2 / nw2;
        double v1 = 0.0, v2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v1 += w[i] * (r[i] - st.m1) * (r[i] - st.m1);
            v2 += (1.0 - w[i]) * (r[i] - st.m2) * (r[i] - st.m2);
        }
        st.s1 = std::sqrt(v1 / sw);
        st.s2 = std::sqrt(v2 / nw2);
        if (st.s1 < sfloor) {
            *collapsed_component = 1;
            return false;
        }
        if (st.s2 < sfloor) {
            *collapsed_component = 2;
            return false;
        }
    }
    final_ll = prev_ll;
    return true;
}

EmState two_means_init(std::span<const double> r, double seed1, double seed2,
                       double sfloor) {
    double c1 = seed1, c2 = seed2;
    if (c1 == c2) c2 = c1 + sfloor + 1e-6;
    const std::size_t n = r.size();
    for (int it = 0; it < 50; ++it) {
        double sum1 = 0.0, sum2 = 0.0;
        std::size_t n1 = 0, n2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(r[i] - c1) <= std::abs(r[i] - c2)) {
                sum1 += r[i];
                ++n1;
            } else {
                sum2 += r[i];
                ++n2;
            }
        }
        if (n1 == 0 || n2 == 0) break;
        const double nc1 = sum1 / n1, nc2 = sum2 / n2;
        if (nc1 == c1 && nc2 == c2) break;
        c1 = nc1;
        c2 = nc2;
    }
    EmState st;
    st.m1 = c1;
    st.m2 = c2;
    double sum1 = 0.0, sum2 = 0.0, v1 = 0.0, v2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(r[i] - c1) <= std::abs(r[i] - c2)) {
            v1 += (r[i] - c1) * (r[i] - c1);
            ++n1;
        } else {
            v2 += (r[i] - c2) * (r[i] - c2);
            ++n2;
        }
    }
    (void)sum1;
    (void)sum2;
    st.p1 = std::clamp(static_cast<double>(n1) / n, 0.05, 0.95);
    st.s1 = std::max(std::sqrt(v1 / std::max<std::size_t>(n1, 1)), 2.0 * sfloor);
    st.s2 = std::max(std::sqrt(v2 / std::max<std::size_t>(n2, 1)), 2.0 * sfloor);
    return st;
}

} // namespace

std::pair<ErrorModelPtr, std::vector<double>>
fit_mixture_traced(std::span<const double> residuals, int restarts) {
    if (residuals.size() < 20)
        throw DomainError("fit_mixture: need n >= 20 residuals");
    if (restarts < 1) throw DomainError("fit_mixture: need at least 1 restart");
    const double sd = sample_sd(residuals);
    if (!(sd > 0.0)) throw DomainError("fit_mixture: zero-spread residuals");
    const double sfloor = 1e-3 * sd;

    std::vector<double> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end());

    // Deterministic restart seeds: quantile pair first, then random pairs
    // from a fixed-key stream.
    CounterRng rng(0x9E3779B97F4A7C15ull, 7);
    bool have_best = false;
    double best_ll = -std::numeric_limits<double>::infinity();
    EmState best{};
    std::vector<double> best_trace;
    int last_collapsed = 1;

    for (int restart = 0; restart < restarts; ++restart) {
        double seed1, seed2;
        if (restart == 0) {
            seed1 = quantile_sorted(sorted, 0.25);
            seed2 = quantile_sorted(sorted, 0.75);
        } else {
            const std::size_t i = rng.next_u64() % residuals.size();
            std::size_t j = rng.next_u64() % residuals.size();
            if (j == i) j = (j + 1) % residuals.size();
            seed1 = residuals[i];
            seed2 = residuals[j];
        }
        EmState st = two_means_init(residuals, seed1, seed2, sfloor);
        std::vector<double> trace;
        double ll = 0.0;
        int collapsed = 0;
        if (!run_em(residuals, st, sfloor, &trace, ll, &collapsed)) {
            last_collapsed = collapsed;
            continue;
        }
        if (!have_best || ll > best_ll) {
            have_best = true;
            best_ll = ll;
            best = st;
            best_trace = std::move(trace);
        }
    }
    if (!have_best) {
        std::ostringstream os;
        os << "fit_mixture: component " << last_collapsed
           << " collapsed in every restart";
        throw DomainError(os.str());
    }

    if (best.m1 > best.m2) {
        std::swap(best.m1, best.m2);
        std::swap(best.s1, best.s2);
        best.p1 = 1.0 - best.p1;
    }
    const double p1 = best.p1;
    const double p2 = 1.0 - best.p1;
    const double m0 = p1 * best.m1 + p2 * best.m2;
    auto model = mixture_error({p1, p2, m0, best.m1, best.m2, best.s1, best.s2});
    return {model, best_trace};
}

ErrorModelPtr fit_mixture(std::span<const double> residuals, int restarts) {
    return fit_mixture_traced(residuals, restarts).first;
}

ErrorModelPtr fit_mixture_warm(std::span<const double> residuals,
                               const MixtureParams& init, int restarts) {
    if (residuals.size() < 20)
        throw DomainError("fit_mixture: need n >= 20 residuals");
    const double sd = sample_sd(residuals);
    if (!(sd > 0.0)) throw DomainError("fit_mixture: zero-spread residuals");
    const double sfloor = 1e-3 * sd;

    EmState st{init.p1, init.m1, init.m2, init.s1, init.s2};
    st.s1 = std::max(st.s1, 2.0 * sfloor);
    st.s2 = std::max(st.s2, 2.0 * sfloor);
    double ll = 0.0;
    int collapsed = 0;
    if (run_em(residuals, st, sfloor, nullptr, ll, &collapsed)) {
        if (st.m1 > st.m2) {
            std::swap(st.m1, st.m2);
            std::swap(st.s1, st.s2);
            st.p1 = 1.0 - st.p1;
        }
        const double p1 = st.p1;
        const double p2 = 1.0 - st.p1;
        const double m0 = p1 * st.m1 + p2 * st.m2;
        return mixture_error({p1, p2, m0, st.m1, st.m2, st.s1, st.s2});
    }
    return fit_mixture(residuals, restarts);
}

double silverman_bandwidth(std::span<const double> residuals) {
    const double sd = sample_sd(residuals);
    if (!(sd > 0.0)) throw DomainError("silverman_bandwidth: zero-spread sample");
    const double n = static_cast<double>(residuals.size());
    return std::pow(4.0 * std::pow(sd, 5) / (3.0 * n), 0.2);
}

double moment_t_squared(double mu4, double v, double mu3) {
    if (!(v > 0.0)) throw DomainError("moment_t_squared: v must be positive");
    const double value = mu4 - v * v - mu3 * mu3 / v;
    if (!(value > 0.0)) {
        std::ostringstream os;
        os << "moment_t_squared: inconsistent moments (mu4=" << mu4 << ", v="
           << v << ", mu3=" << mu3 << " give " << value << ")";
        throw DomainError(os.str());
    }
    return value;
}

double moment_t_squared(const ErrorModel& model) {
    return moment_t_squared(model.mu4(), model.variance(), model.mu3());
}

ErrorModelPtr error_model_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "normal") return normal_error(j.at("v").get<double>());
    if (kind == "gumbel") return gumbel_error(j.at("lambda").get<double>());
    if (kind == "mixture") {
        return mixture_error({j.at("p1").get<double>(), j.at("p2").get<double>(),
                              j.at("m0").get<double>(), j.at("m1").get<double>(),
                              j.at("m2").get<double>(), j.at("s1").get<double>(),
                              j.at("s2").get<double>()});
    }
    if (kind == "kernel") {
        if (!j.contains("centers"))
            throw InputError("error_model_from_json: kernel model stored without centers");
        const auto centers = j.at("centers").get<std::vector<double>>();
        return kde_error(centers, j.at("h").get<double>());
    }
    throw InputError("error_model_from_json: unknown kind '" + kind + "'");
}

} // namespace effreg
