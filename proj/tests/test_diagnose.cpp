#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "effreg/diagnose.hpp"
#include "effreg/error.hpp"
#include "effreg/errors.hpp"
#include "effreg/rng.hpp"
#include "effreg/stats.hpp"

using namespace effreg;

namespace {

std::vector<double> normal_scores(std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = inv_normal_cdf((static_cast<double>(i + 1) - 0.375) /
                              (static_cast<double>(n) + 0.25));
    return x;
}

} // namespace

TEST_CASE("normality statistic agrees with published reference values") {
    // smallest supported size
    {
        auto r = shapiro_wilk(std::vector<double>{1.0, 2.0, 4.0});
        CHECK(r.w == doctest::Approx(0.9642857142857142).epsilon(5e-7));
        CHECK(r.p == doctest::Approx(0.6368868450289689).epsilon(1e-5));
    }
    {
        auto r = shapiro_wilk(std::vector<double>{0.1, 0.2, 0.5, 0.6, 1.4});
        CHECK(r.w == doctest::Approx(0.8770954477074694).epsilon(5e-7));
        CHECK(r.p == doctest::Approx(0.2963555954211027).epsilon(1e-5));
    }
    {
        std::vector<double> x{-1.8, -1.2, -0.6, -0.2, 0.2, 0.6, 1.2, 1.8};
        auto r = shapiro_wilk(x);
        CHECK(r.w == doctest::Approx(0.9891094031524645).epsilon(5e-7));
        CHECK(r.p == doctest::Approx(0.9935826667814918).epsilon(1e-5));
    }
    {
        // largest size on the small-sample p-value branch
        std::vector<double> x{-2.1, -1.0, -0.4, -0.1, 0.0, 0.2,
                              0.3,  0.9,  1.1,  1.7,  2.5};
        auto r = shapiro_wilk(x);
        CHECK(r.w == doctest::Approx(0.9874651357895471).epsilon(5e-7));
        CHECK(r.p == doctest::Approx(0.9937093936459529).epsilon(1e-5));
    }
    {
        // first size on the large-sample branch, skewed data
        std::vector<double> x{
            -2.7119125182273156, -2.435330868979543,  -2.3704423260428045,
            -2.129586617467199,  -2.0376716535052606, -1.368135770935445,
            1.023568468493905,   1.3161036491085283,  2.1805290565274476,
            2.32444640109652,    2.4842484528759616,  3.173704827189426};
        auto r = shapiro_wilk(x);
        CHECK(r.w == doctest::Approx(0.8422473622053294).epsilon(5e-7));
        CHECK(r.p == doctest::Approx(0.029488662405663085).epsilon(1e-4));
    }
    {
        auto r = shapiro_wilk(normal_scores(50));
        CHECK(r.w == doctest::Approx(0.9984740698028733).epsilon(5e-7));
        CHECK(r.p > 0.99);
    }
    {
        // exponential quantiles: decisively non-normal
        std::vector<double> x(200);
        for (std::size_t i = 0; i < 200; ++i)
            x[i] = -std::log(1.0 - (static_cast<double>(i + 1) - 0.5) / 200.0);
        auto r = shapiro_wilk(x);
        CHECK(r.w == doctest::Approx(0.8237525605585375).epsilon(5e-7));
        CHECK(r.p < 1e-12);
    }
    {
        // uniform quantiles at n = 1000
        std::vector<double> x(1000);
        for (std::size_t i = 0; i < 1000; ++i)
            x[i] = (static_cast<double>(i + 1) - 0.5) / 1000.0;
        auto r = shapiro_wilk(x);
        CHECK(r.w == doctest::Approx(0.9548090258354325).epsilon(5e-7));
        CHECK(r.p < 1e-12);
    }
    {
        // upper end of the supported range
        auto r = shapiro_wilk(normal_scores(5000));
        CHECK(r.w == doctest::Approx(0.9999801339044415).epsilon(5e-7));
        CHECK(r.p >= 0.999);
    }
}

TEST_CASE("normality test guards") {
    CHECK_THROWS_AS((void)shapiro_wilk(std::vector<double>{1.0, 2.0}),
                    DomainError);
    try {
        (void)shapiro_wilk(normal_scores(5001));
        CHECK(false);
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("subsampl") != std::string::npos);
    }
    CHECK_THROWS_AS((void)shapiro_wilk(std::vector<double>(10, 3.0)),
                    DomainError);
}

TEST_CASE("normality statistic is location-scale invariant") {
    std::vector<double> x{-2.1, -1.0, -0.4, -0.1, 0.0, 0.2,
                          0.3,  0.9,  1.1,  1.7,  2.5};
    auto base = shapiro_wilk(x);
    std::vector<double> moved(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) moved[i] = 100.0 + 7.5 * x[i];
    auto shifted = shapiro_wilk(moved);
    CHECK(shifted.w == doctest::Approx(base.w).epsilon(1e-10));
    CHECK(shifted.p == doctest::Approx(base.p).epsilon(1e-10));
}

TEST_CASE("normality test is calibrated under the null") {
    // 10^4 standard normal samples of size 200: the alpha = 0.05 rejection
    // rate stays near its nominal level
    const int trials = 10000;
    const std::size_t n = 200;
    int rejects = 0;
    for (int t = 0; t < trials; ++t) {
        CounterRng rng(606, static_cast<std::uint64_t>(t));
        std::vector<double> x(n);
        for (auto& v : x) v = rng.normal();
        if (shapiro_wilk(x).p < 0.05) ++rejects;
    }
    const double rate = static_cast<double>(rejects) / trials;
    CHECK(rate >= 0.03);
    CHECK(rate <= 0.07);
}

TEST_CASE("normality test has power against the skewed error law") {
    const int trials = 500;
    const std::size_t n = 200;
    int rejects = 0;
    for (int t = 0; t < trials; ++t) {
        CounterRng rng(707, static_cast<std::uint64_t>(t));
        std::vector<double> x(n);
        for (auto& v : x) v = rng.gumbel_min(1.5);
        if (shapiro_wilk(x).p < 0.05) ++rejects;
    }
    CHECK(static_cast<double>(rejects) / trials >= 0.99);
}

TEST_CASE("moment shape statistics") {
    std::vector<double> sym{-2.0, -1.0, 1.0, 2.0};
    auto sk = skew_kurtosis(sym);
    CHECK(std::abs(sk.skewness) < 1e-14);
    // biased moments: m2 = 2.5, m4 = 8.5 -> excess = 8.5/6.25 - 3
    CHECK(sk.excess_kurtosis == doctest::Approx(8.5 / 6.25 - 3.0).epsilon(1e-12));

    // sign equivariance under negation
    std::vector<double> skewed{0.0, 0.1, 0.2, 0.4, 3.0};
    std::vector<double> flipped;
    for (double v : skewed) flipped.push_back(-v);
    CHECK(skew_kurtosis(flipped).skewness ==
          doctest::Approx(-skew_kurtosis(skewed).skewness).epsilon(1e-12));
    CHECK(skew_kurtosis(skewed).skewness > 0.5);

    // large normal sample: both near zero
    CounterRng rng(808, 0);
    std::vector<double> z(1000000);
    for (auto& v : z) v = rng.normal();
    auto zk = skew_kurtosis(z);
    CHECK(std::abs(zk.skewness) < 0.01);
    CHECK(std::abs(zk.excess_kurtosis) < 0.02);

    // skewed error law: moment skewness matches the closed form
    std::vector<double> g(1000000);
    CounterRng rng2(809, 0);
    for (auto& v : g) v = rng2.gumbel_min(1.5);
    CHECK(std::abs(skew_kurtosis(g).skewness - (-1.1395470994046488)) < 0.02);

    CHECK_THROWS_AS((void)skew_kurtosis(std::vector<double>{1.0, 2.0, 3.0}),
                    DomainError);
    CHECK_THROWS_AS((void)skew_kurtosis(std::vector<double>(6, 2.0)),
                    DomainError);
}

TEST_CASE("qq export: identity when residuals equal reference quantiles") {
    // build residuals exactly at the normal plotting quantiles, then the
    // theoretical and sample columns agree after the location/scale fit
    const std::size_t n = 400;
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i)
        q[i] = inv_normal_cdf((static_cast<double>(i) + 0.5) /
                              static_cast<double>(n));
    const double m = mean(q), s = sample_sd(q);
    QqPoints pts = qq_export(q, QqReference::Normal);
    REQUIRE(pts.theoretical.size() == n);
    REQUIRE(pts.sample.size() == n);
    CHECK(pts.reference == "normal");
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double expect =
            m + s * inv_normal_cdf((static_cast<double>(i) + 0.5) /
                                   static_cast<double>(n));
        worst = std::max(worst, std::abs(pts.theoretical[i] - expect));
        worst = std::max(worst, std::abs(pts.sample[i] - q[i]));
    }
    CHECK(worst < 1e-8);
    CHECK(std::is_sorted(pts.sample.begin(), pts.sample.end()));
    CHECK(pts.reference_model["kind"] == "normal_location_scale");
}

TEST_CASE("qq export against the fitted mixture round-trips its cdf") {
    CounterRng rng(909, 0);
    std::vector<double> resid(600);
    for (auto& v : resid) {
        const double u = rng.uniform();
        const double z = rng.normal();
        v = (u < 0.6) ? -2.0 + 0.6 * z : 3.0 + 0.7 * z;
    }
    const double shift = mean(resid);
    for (auto& v : resid) v -= shift;
    QqPoints pts = qq_export(resid, QqReference::FittedMixture);
    CHECK(pts.reference == "mixture");
    ErrorModelPtr ref = error_model_from_json(pts.reference_model);
    const std::size_t n = resid.size();
    for (std::size_t i = 0; i < n; i += 37) {
        const double p =
            (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        CHECK(ref->cdf(pts.theoretical[i]) == doctest::Approx(p).epsilon(1e-6));
    }
}

TEST_CASE("qq export stays near the diagonal for a true normal sample") {
    CounterRng rng(910, 0);
    const std::size_t n = 1000;
    std::vector<double> resid(n);
    for (auto& v : resid) v = rng.normal();
    QqPoints pts = qq_export(resid, QqReference::Normal);
    // central 90 percent of points: theoretical vs sample deviation small
    double worst = 0.0;
    for (std::size_t i = n / 20; i < n - n / 20; ++i)
        worst = std::max(worst,
                         std::abs(pts.theoretical[i] - pts.sample[i]));
    CHECK(worst <= 0.15);
    CHECK_THROWS_AS((void)qq_export(std::vector<double>{0.5}, QqReference::Normal),
                    DomainError);
}

TEST_CASE("qq reference names round trip") {
    for (auto ref : {QqReference::Normal, QqReference::FittedGumbel,
                     QqReference::FittedMixture, QqReference::Kde})
        CHECK(qq_reference_from_name(qq_reference_name(ref)) == ref);
    CHECK_THROWS_AS((void)qq_reference_from_name("cauchy"), InputError);
}

TEST_CASE("histogram widths follow the interquartile rule") {
    // uniform grid on (0,1): IQR 0.4995, width 2*0.4995/10
    const std::size_t n = 1000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    Histogram h = fd_histogram(x);
    CHECK(h.bin_width == doctest::Approx(0.0999).epsilon(1e-12));
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == n);
    CHECK(h.edges.size() == h.counts.size() + 1);
    CHECK(h.edges.front() <= x.front());
    CHECK(h.edges.back() >= x.back());

    Histogram forced = fd_histogram(x, 0.25);
    CHECK(forced.bin_width == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(forced.counts.size() == 4);

    CHECK_THROWS_AS((void)fd_histogram(std::vector<double>(12, 1.0)),
                    DomainError);
    CHECK_THROWS_AS((void)fd_histogram(std::vector<double>{1.0}), DomainError);
}

TEST_CASE("residual diagnostics bundle composes the pieces") {
    CounterRng rng(911, 0);
    std::vector<double> resid(500);
    for (auto& v : resid) v = 2.0 * rng.normal();
    ResidualDiagnostics d = diagnose_residuals(resid, "fit:normal");
    CHECK(d.n == 500);
    CHECK(d.mean == doctest::Approx(mean(resid)).epsilon(1e-12));
    CHECK(d.sd == doctest::Approx(sample_sd(resid)).epsilon(1e-12));
    CHECK(d.shapiro_ok);
    CHECK(d.shapiro_p > 0.001);
    CHECK(d.residual_source == "fit:normal");

    nlohmann::json j = d.to_json();
    CHECK(j["n"] == 500);
    CHECK(j["shapiro"]["ran"] == true);
    CHECK(j["residual_source"] == "fit:normal");

    // oversize samples skip the test with an explanatory note
    std::vector<double> big(5001);
    for (auto& v : big) v = rng.normal();
    ResidualDiagnostics dbig = diagnose_residuals(big, "fit:normal");
    CHECK_FALSE(dbig.shapiro_ok);
    CHECK(dbig.shapiro_note.find("subsampl") != std::string::npos);
    nlohmann::json jb = dbig.to_json();
    CHECK(jb["shapiro"]["w"].is_null());

    CHECK_THROWS_AS(
        (void)diagnose_residuals(std::vector<double>{1.0, 2.0, 3.0}, "x"),
        InputError);
}
