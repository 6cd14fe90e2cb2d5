// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is self-contained and uses only the library and
// in-code fixtures, so the binary runs without environment setup.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "effreg/diagnose.hpp"
#include "effreg/error.hpp"
#include "effreg/errors.hpp"
#include "effreg/model.hpp"
#include "effreg/quadrature.hpp"
#include "effreg/rng.hpp"
#include "effreg/score.hpp"
#include "effreg/simulate.hpp"
#include "effreg/solver.hpp"
#include "effreg/stats.hpp"

using namespace effreg;

namespace {

const std::vector<double> MIX_MU{0.6, 0.4, 0.0, -2.0, 3.0, 0.6, 0.7};

int failures = 0;

void report(int id, const std::string& label, bool pass,
            const std::string& detail = "") {
    std::printf("[%s] %2d. %s%s%s\n", pass ? "PASS" : "FAIL", id,
                label.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <typename Fn>
void criterion(int id, const std::string& label, Fn fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(id, label, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

Dataset linear_dataset(std::size_t n, const Eigen::VectorXd& beta, double v,
                       std::uint64_t seed) {
    CounterRng rng(seed, 0);
    const Eigen::Index l = beta.size() - 1;
    Eigen::MatrixXd x(n, l);
    Eigen::VectorXd y(n);
    MeanModel m = MeanModel::linear(l, true);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index ii = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < l; ++j) x(ii, j) = rng.normal();
        y(ii) = m.evaluate(x.row(ii).transpose(), beta) +
                std::sqrt(v) * rng.normal();
    }
    return Dataset{std::move(x), std::move(y)};
}

SimScenario gumbel_scenario(Eigen::Index n, int reps, std::uint64_t seed) {
    Eigen::VectorXd beta(2);
    beta << 12.0, -0.5;
    CovariateLaw cov; // gamma(2.5, 1.5) default
    ErrorLaw err;
    err.kind = ErrorLaw::Kind::Gumbel;
    err.lambda = 1.5;
    return SimScenario{"gumbel", MeanModel::exponential(), beta, cov, err,
                       n,        reps,                     seed};
}

SimScenario mixture_scenario(Eigen::Index n, int reps, std::uint64_t seed) {
    Eigen::VectorXd beta(2);
    beta << 12.0, -0.5;
    CovariateLaw cov;
    ErrorLaw err;
    err.kind = ErrorLaw::Kind::Mixture;
    err.mu = MIX_MU;
    return SimScenario{"mixture", MeanModel::exponential(), beta, cov, err,
                       n,         reps,                     seed};
}

// True-density plug-in: a custom parametric refresh that ignores the
// residuals and always returns the exact error model.
FitConfig true_pdf_config(ErrorModelPtr truth) {
    FitConfig cfg;
    cfg.error_mode = ErrorMode::CustomParametric;
    cfg.custom_refresh = [truth](std::span<const double>) { return truth; };
    return cfg;
}

void crit1() {
    const std::string label =
        "normal mode reproduces ordinary least squares (20 datasets, n=100)";
    Eigen::VectorXd beta(3);
    beta << 5.0, 1.0, 1.8;
    MeanModel model = MeanModel::linear(2, true);
    FitConfig cfg;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Dataset data = linear_dataset(100, beta, 2.0, seed);
        FitResult fit = solve_efficient(data, model, cfg);
        if (!fit.converged) {
            report(1, label, false, "fit did not converge");
            return;
        }
        Theta ls = ols_fit(data, true);
        worst = std::max(worst,
                         (fit.theta.beta - ls.beta).lpNorm<Eigen::Infinity>());
    }
    report(1, label, worst <= 1e-8, "max |beta - ols| = " + fmt(worst));
}

void crit2() {
    const std::string label =
        "analytic error variances: 3.7011 (scale-1.5 extreme value), 6.4120 "
        "(two-component mixture)";
    const double gv = gumbel_error(1.5)->variance();
    const double mv = mixture_error(MIX_MU)->variance();
    const bool pass =
        std::abs(gv - 3.7011) <= 5e-5 && std::abs(mv - 6.4120) <= 5e-5;
    report(2, label, pass, fmt(gv) + ", " + fmt(mv));
}

void crit3() {
    const std::string label =
        "score orthogonality at 1e6 draws (E[t]=0, E[eps t]=0, E[S]=0, "
        "X-bin means)";
    struct Case {
        std::string name;
        ErrorModelPtr model;
        std::uint64_t seed;
    };
    std::vector<Case> cases;
    cases.push_back({"normal", normal_error(1.0), 3001});
    cases.push_back({"gumbel", gumbel_error(1.5), 3002});
    cases.push_back({"mixture", mixture_error(MIX_MU), 3013});

    const std::size_t n = 1000000;
    Eigen::VectorXd beta(2);
    beta << 2.0, -0.7;
    MeanModel mean_model = MeanModel::linear(1, true);
    std::string fail;

    for (const Case& c : cases) {
        CounterRng rng(c.seed, 0);
        std::vector<double> eps(n);
        if (c.name == "normal")
            for (auto& e : eps) e = rng.normal();
        else if (c.name == "gumbel")
            eps = sample_gumbel(1.5, n, rng);
        else
            eps = sample_mixture(MIX_MU, n, rng);

        const double v = c.model->variance();
        const double mu3 = c.model->mu3();

        // moment identities for t(eps)
        std::vector<double> t(n), et(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = t_of_eps(eps[i], v, mu3);
            et[i] = eps[i] * t[i];
        }
        const double rn = std::sqrt(static_cast<double>(n));
        if (std::abs(mean(t)) > 3.0 * sample_sd(t) / rn)
            fail += c.name + ": E[t] off; ";
        if (std::abs(mean(et)) > 3.0 * sample_sd(et) / rn)
            fail += c.name + ": E[eps t] off; ";

        // regression monte carlo for the full score
        Eigen::MatrixXd x(n, 1);
        Eigen::VectorXd y(n);
        CounterRng rng2(c.seed, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Index ii = static_cast<Eigen::Index>(i);
            x(ii, 0) = rng2.normal();
            y(ii) = beta(0) + beta(1) * x(ii, 0) + eps[i];
        }
        Dataset data{std::move(x), std::move(y)};
        Theta theta{beta, v};
        ScoreContext ctx = make_score_context(mean_model, c.model, theta, data);
        Eigen::MatrixXd scores = score_matrix(data, ctx);

        for (Eigen::Index j = 0; j < 3; ++j) {
            const double avg = column_means(scores)(j);
            const double sd = std::sqrt(scores.col(j).array().square().mean() -
                                        avg * avg);
            if (std::abs(avg) > 3.0 * sd / rn) {
                fail += c.name + ": E[S_" + std::to_string(j) + "] off; ";
            }
        }

        // 20 equal-count X bins: every score column centered within 3 SEs
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) {
                      return data.x(static_cast<Eigen::Index>(a), 0) <
                             data.x(static_cast<Eigen::Index>(b), 0);
                  });
        const int bins = 20;
        for (Eigen::Index j = 0; j < 3 && fail.empty(); ++j) {
            for (int b = 0; b < bins; ++b) {
                const std::size_t lo = n * static_cast<std::size_t>(b) / bins;
                const std::size_t hi =
                    n * (static_cast<std::size_t>(b) + 1) / bins;
                std::vector<double> chunk;
                chunk.reserve(hi - lo);
                for (std::size_t i = lo; i < hi; ++i)
                    chunk.push_back(
                        scores(static_cast<Eigen::Index>(order[i]), j));
                const double m = mean(chunk);
                const double se = sample_sd(chunk) /
                                  std::sqrt(static_cast<double>(chunk.size()));
                if (std::abs(m) > 3.0 * se) {
                    fail += c.name + ": X-bin " + std::to_string(b) +
                            " col " + std::to_string(j) + " off; ";
                    break;
                }
            }
        }
        if (!fail.empty()) break;
    }
    report(3, label, fail.empty(), fail);
}

void crit4() {
    const std::string label =
        "efficiency gap nonnegative definite with null variance row (n=1e5)";
    const std::size_t n = 100000;
    CounterRng rng(4001, 0);
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    Eigen::VectorXd beta(2);
    beta << 12.0, -0.5;
    MeanModel model = MeanModel::exponential();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index ii = static_cast<Eigen::Index>(i);
        x(ii, 0) = rng.gamma(2.5, 1.5);
        y(ii) = model.evaluate(x.row(ii).transpose(), beta) +
                rng.gumbel_min(1.5);
    }
    Dataset data{std::move(x), std::move(y)};
    ErrorModelPtr err = gumbel_error(1.5);
    Theta theta{beta, err->variance()};
    Eigen::MatrixXd gap = efficiency_gap(model, err, theta, data);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gap);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    bool pass = lo >= -1e-3 * hi && hi > 0.0;
    std::string detail = "eigs [" + fmt(lo) + ", " + fmt(hi) + "]";

    // v row: each entry within 4 SEs of zero
    ScoreContext ctx = make_score_context(model, err, theta, data);
    Eigen::MatrixXd s1 = score_matrix(data, ctx);
    Eigen::MatrixXd s2 = score_matrix_type2(data, ctx);
    const Eigen::Index q = gap.rows();
    for (Eigen::Index j = 0; j < q; ++j) {
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Index ii = static_cast<Eigen::Index>(i);
            w[i] = s1(ii, q - 1) * (s1(ii, j) - s2(ii, j));
        }
        const double se = sample_sd(w) / std::sqrt(static_cast<double>(n));
        if (std::abs(gap(q - 1, j)) > std::max(4.0 * se, 1e-12)) {
            pass = false;
            detail += "; v-row entry " + std::to_string(j) + " = " +
                      fmt(gap(q - 1, j)) + " exceeds noise " + fmt(4.0 * se);
        }
    }
    report(4, label, pass, detail);
}

void crit5() {
    const std::string label =
        "skewed-scenario table reproduction (n=1000, reps=200, true pdf)";
    SimScenario scen = gumbel_scenario(1000, 200, 501);
    FitConfig cfg = true_pdf_config(gumbel_error(1.5));
    SimReport rep = run_study(scen, {ErrorMode::CustomParametric}, cfg);
    const auto& p = rep.modes[0].params;

    const double targets[3] = {12.0054, -0.5002, 3.6837};
    bool pass = true;
    std::string detail;
    for (int j = 0; j < 3; ++j) {
        const auto& ps = p[static_cast<std::size_t>(j)];
        if (std::abs(ps.estimate - targets[j]) > 0.05) {
            pass = false;
            detail += ps.name + " est " + fmt(ps.estimate) + " vs " +
                      fmt(targets[j]) + "; ";
        }
        const double ratio = ps.se1 / ps.se2;
        if (!(ratio >= 0.85 && ratio <= 1.15)) {
            pass = false;
            detail += ps.name + " se1/se2 " + fmt(ratio) + "; ";
        }
        if (!(ps.cvg95 >= 0.91 && ps.cvg95 <= 0.985)) {
            pass = false;
            detail += ps.name + " cvg " + fmt(ps.cvg95) + "; ";
        }
    }
    if (detail.empty())
        detail = "est (" + fmt(p[0].estimate) + ", " + fmt(p[1].estimate) +
                 ", " + fmt(p[2].estimate) + "), cvg (" + fmt(p[0].cvg95) +
                 ", " + fmt(p[1].cvg95) + ", " + fmt(p[2].cvg95) + ")";
    report(5, label, pass, detail);
}

void crit6() {
    const std::string label =
        "bimodal scenario: normal-mode spread >= 3x true-pdf spread (n=500)";
    SimScenario scen = mixture_scenario(500, 200, 504);
    FitConfig cfg = true_pdf_config(mixture_error(MIX_MU));
    SimReport rep = run_study(
        scen, {ErrorMode::Normal, ErrorMode::CustomParametric}, cfg);
    const double se1_normal = rep.modes[0].params[0].se1;
    const double se1_true = rep.modes[1].params[0].se1;
    const bool pass = se1_normal >= 3.0 * se1_true;
    report(6, label, pass,
           "se1(beta1): normal " + fmt(se1_normal) + " vs true " +
               fmt(se1_true));
}

void crit7() {
    const std::string label =
        "kernel mode attains the bound: SE1 within 15% of true pdf (n=1000)";
    SimScenario scen = mixture_scenario(1000, 200, 505);
    FitConfig cfg = true_pdf_config(mixture_error(MIX_MU));
    SimReport rep = run_study(
        scen, {ErrorMode::CustomParametric, ErrorMode::Kernel}, cfg);
    bool pass = true;
    std::string detail;
    for (std::size_t j = 0; j < rep.modes[0].params.size(); ++j) {
        const double se_true = rep.modes[0].params[j].se1;
        const double se_kernel = rep.modes[1].params[j].se1;
        const double rel = std::abs(se_kernel - se_true) / se_true;
        detail += rep.modes[0].params[j].name + " " + fmt(se_kernel) + "/" +
                  fmt(se_true) + " ";
        if (rel > 0.15) pass = false;
    }
    report(7, label, pass, detail);
}

void crit8() {
    const std::string label =
        "normality rejected on skewed/bimodal residuals (n=200, >=98%)";
    FitConfig cfg;
    SimReport g = run_study(gumbel_scenario(200, 200, 801),
                            {ErrorMode::Normal}, cfg);
    SimReport m = run_study(mixture_scenario(200, 200, 802),
                            {ErrorMode::Normal}, cfg);
    const double rg = g.modes[0].sw_reject_rate;
    const double rm = m.modes[0].sw_reject_rate;
    const bool pass = rg >= 0.98 && rm >= 0.98;
    report(8, label, pass,
           "reject rates " + fmt(rg) + " (skewed), " + fmt(rm) + " (bimodal)");
}

void crit9() {
    const std::string label =
        "skew-t scenarios: exact variances and consistent covered fits "
        "(n=300, reps=200)";
    bool pass = true;
    std::string detail;

    // exact-variance monte carlo checks at 1e6 draws
    {
        CounterRng rng(9001, 0);
        std::vector<double> s = sample_skew_t(-2.46, 3.0, 3.0, 10.0, 1000000, rng);
        const double var1 = sample_variance(s);
        if (std::abs(var1 - 5.19) > 0.05) {
            pass = false;
            detail += "skew-t var " + fmt(var1) + "; ";
        }
        PerturbedSkewTSpec spec;
        spec.skew_t = SkewTSpec{-2.46, 3.0, 3.0, 10.0};
        CounterRng rng2(9002, 0);
        std::vector<double> sp = sample_perturbed_skew_t(spec, 1000000, rng2);
        const double var2 = sample_variance(sp);
        if (std::abs(var2 - 10.39) > 0.08) {
            pass = false;
            detail += "perturbed var " + fmt(var2) + "; ";
        }
    }

    // kernel-mode fits of both scenarios
    Eigen::VectorXd beta(3);
    beta << 5.0, 1.0, 1.8;
    CovariateLaw cov;
    cov.kind = CovariateLaw::Kind::NormalIid;
    cov.dim = 2;
    MeanModel model = MeanModel::linear(2, true);

    ErrorLaw st;
    st.kind = ErrorLaw::Kind::SkewT;
    st.skew_t = SkewTSpec{-2.46, 3.0, 3.0, 10.0};
    ErrorLaw pst;
    pst.kind = ErrorLaw::Kind::PerturbedSkewT;
    pst.perturbed.skew_t = SkewTSpec{-2.46, 3.0, 3.0, 10.0};

    FitConfig cfg;
    struct ScenCase {
        std::string name;
        ErrorLaw law;
        std::uint64_t seed;
    };
    const std::vector<ScenCase> scen_cases{{"skewt", st, 506},
                                           {"perturbed", pst, 516}};
    for (const auto& [name, law, seed] : scen_cases) {
        SimScenario scen{name, model, beta, cov, law, 300, 200, seed};
        SimReport rep = run_study(scen, {ErrorMode::Kernel}, cfg);
        const auto& p = rep.modes[0].params;
        // the consistency targets are the mean parameters; their medians
        // and their coverage are the pinned quantities
        const double want[3] = {5.0, 1.0, 1.8};
        for (std::size_t j = 0; j < 3; ++j) {
            if (std::abs(p[j].estimate - want[j]) > 0.05) {
                pass = false;
                detail += name + " " + p[j].name + " est " +
                          fmt(p[j].estimate) + "; ";
            }
            if (!(p[j].cvg95 >= 0.91 && p[j].cvg95 <= 0.985)) {
                pass = false;
                detail += name + " " + p[j].name + " cvg " +
                          fmt(p[j].cvg95) + "; ";
            }
        }
        detail += name + " cvg (" + fmt(p[0].cvg95) + ", " + fmt(p[1].cvg95) +
                  ", " + fmt(p[2].cvg95) + "); ";
    }
    report(9, label, pass, detail);
}

void crit10() {
    const std::string label =
        "numerical hygiene: analytic gradients/scores match finite "
        "differences; KDE mass 1";
    bool pass = true;
    std::string detail;
    CounterRng rng(10001, 0);

    // mean-model gradients at random points
    std::vector<MeanModel> models;
    models.push_back(MeanModel::linear(3, true));
    models.push_back(MeanModel::linear(2, false));
    models.push_back(MeanModel::exponential());
    models.push_back(MeanModel::custom(
        2, 1,
        [](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
            return b(0) * std::sin(b(1) * x(0));
        },
        [](const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
            Eigen::VectorXd g(2);
            g(0) = std::sin(b(1) * x(0));
            g(1) = b(0) * x(0) * std::cos(b(1) * x(0));
            return g;
        }));
    for (const MeanModel& m : models) {
        for (int trial = 0; trial < 25 && pass; ++trial) {
            Eigen::VectorXd x(m.l()), b(m.k());
            for (Eigen::Index i = 0; i < m.l(); ++i) x(i) = rng.normal();
            for (Eigen::Index i = 0; i < m.k(); ++i)
                b(i) = 0.5 + rng.uniform();
            Eigen::VectorXd g = m.gradient(x, b);
            for (Eigen::Index j = 0; j < m.k(); ++j) {
                const double h =
                    1e-6 * std::max(1.0, std::abs(b(j)));
                Eigen::VectorXd bp = b, bm = b;
                bp(j) += h;
                bm(j) -= h;
                const double fd =
                    (m.evaluate(x, bp) - m.evaluate(x, bm)) / (2.0 * h);
                const double scale = std::max(1.0, std::abs(fd));
                if (std::abs(g(j) - fd) > 1e-4 * scale) {
                    pass = false;
                    detail += "gradient mismatch; ";
                }
            }
        }
    }

    // score_ratio vs d/de log f
    std::vector<double> centers(60);
    for (auto& c : centers) c = rng.normal();
    std::vector<ErrorModelPtr> errs{normal_error(1.3), gumbel_error(1.5),
                                    mixture_error(MIX_MU),
                                    kde_error(centers, 0.4)};
    for (const auto& ep : errs) {
        for (double e = -3.0; e <= 3.0; e += 0.217) {
            if (ep->pdf(e) < 1e-8) continue;
            const double h = 1e-6;
            const double fd =
                (std::log(ep->pdf(e + h)) - std::log(ep->pdf(e - h))) /
                (2.0 * h);
            const double an = ep->score_ratio(e);
            if (std::abs(an - fd) > 1e-4 * std::max(1.0, std::abs(fd))) {
                pass = false;
                detail += ep->kind() + " score mismatch at " + fmt(e) + "; ";
                break;
            }
        }
    }

    // KDE total mass for 50 random residual sets
    double worst_mass_err = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 20 + static_cast<std::size_t>(
                                       180.0 * rng.uniform());
        std::vector<double> resid(n);
        const int law = trial % 3;
        for (auto& r : resid) {
            if (law == 0)
                r = rng.normal() * (1.0 + 0.5 * rng.uniform());
            else if (law == 1)
                r = rng.gumbel_min(1.5);
            else
                r = rng.uniform() < 0.6 ? -2.0 + 0.6 * rng.normal()
                                        : 3.0 + 0.7 * rng.normal();
        }
        const double h = silverman_bandwidth(resid);
        ErrorModelPtr kde = kde_error(resid, h);
        const auto [mn, mx] =
            std::minmax_element(resid.begin(), resid.end());
        const double mass = adaptive_simpson(
            [&](double e) { return kde->pdf(e); }, *mn - 10.0 * h,
            *mx + 10.0 * h, 1e-7);
        worst_mass_err = std::max(worst_mass_err, std::abs(mass - 1.0));
    }
    if (worst_mass_err > 1e-3) {
        pass = false;
        detail += "kde mass error " + fmt(worst_mass_err) + "; ";
    }
    report(10, label, pass,
           detail.empty() ? "max kde mass deviation " + fmt(worst_mass_err)
                          : detail);
}

void crit11() {
    const std::string label =
        "byte-identical simulation reports across 1, 2, and 8 worker threads";
    SimScenario scen = gumbel_scenario(200, 10, 1101);
    FitConfig cfg;
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "2", "8"}) {
        setenv("EFFREG_THREADS", threads, 1);
        SimReport rep =
            run_study(scen, {ErrorMode::Normal, ErrorMode::Gumbel}, cfg);
        outputs.push_back(rep.to_csv() + rep.metadata().dump(2));
    }
    unsetenv("EFFREG_THREADS");
    const bool pass = outputs[0] == outputs[1] && outputs[1] == outputs[2];
    report(11, label, pass,
           pass ? "" : "outputs differ across thread counts");
}

} // namespace

int main() {
    criterion(1, "ols equivalence", crit1);
    criterion(2, "analytic variances", crit2);
    criterion(3, "score orthogonality", crit3);
    criterion(4, "efficiency gap", crit4);
    criterion(5, "table reproduction", crit5);
    criterion(6, "inefficiency ordering", crit6);
    criterion(7, "kernel bound attainment", crit7);
    criterion(8, "normality rejection", crit8);
    criterion(9, "skew-t scenarios", crit9);
    criterion(10, "numerical hygiene", crit10);
    criterion(11, "thread determinism", crit11);
    std::printf("%d of 11 criteria passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
