#include "effreg/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "effreg/error.hpp"
#include "effreg/stats.hpp"

namespace effreg {

namespace {

// Horner evaluation, coefficients in ascending order.
double poly(const double* c, int nord, double x) {
    double r = c[nord - 1];
    for (int i = nord - 2; i >= 0; --i) r = r * x + c[i];
    return r;
}

// Royston (1995) AS R94 constant tables.
constexpr double C1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685,
                          -2.706056};
constexpr double C2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633,
                          -3.582633};
constexpr double C3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
constexpr double C4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
constexpr double C5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
constexpr double C6[3] = {-0.4803, -0.082676, 0.0030302};
constexpr double G[2] = {-2.273, 0.459};
constexpr double PI6 = 1.90985931710274381;  // 6/pi
constexpr double STQR = 1.04719755119659775; // asin(sqrt(3)/2)

} // namespace

ShapiroResult shapiro_wilk(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 3 || n > 5000) {
        std::ostringstream os;
        os << "shapiro_wilk: n=" << n
           << " outside the supported range [3, 5000]; consider subsampling";
        throw DomainError(os.str());
    }
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double range = x[n - 1] - x[0];
    if (!(range > 0.0))
        throw DomainError("shapiro_wilk: zero-range (constant) sample");

    const std::size_t n2 = n / 2;
    std::vector<double> a(n2);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        const double an25 = static_cast<double>(n) + 0.25;
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= n2; ++i) {
            a[i - 1] = inv_normal_cdf((static_cast<double>(i) - 0.375) / an25);
            summ2 += a[i - 1] * a[i - 1];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
        const double a1 = poly(C1, 6, rsn) - a[0] / ssumm2;
        std::size_t i1;
        double fac;
        if (n > 5) {
            i1 = 3;
            const double a2 = -a[1] / ssumm2 + poly(C2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            i1 = 2;
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) /
                            (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (std::size_t i = i1; i <= n2; ++i) a[i - 1] = -a[i - 1] / fac;
    }

    // Antisymmetric full weight vector: -a[i] on the lower half, +a on the
    // upper half, zero at an odd-n midpoint.
    const auto weight = [&](std::size_t i) -> double {
        const std::size_t j = n - 1 - i;
        if (i < j) return -a[i];
        if (i > j) return a[j];
        return 0.0;
    };

    // W is the squared correlation between weights and the sorted, scaled
    // sample.
    double sa = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += weight(i);
        sx += x[i] / range;
    }
    sa /= static_cast<double>(n);
    sx /= static_cast<double>(n);
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = weight(i) - sa;
        const double dx = x[i] / range - sx;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    double w = 1.0 - w1;
    w = std::min(std::max(w, 1e-19), 1.0);

    double p;
    if (n == 3) {
        p = PI6 * (std::asin(std::sqrt(w)) - STQR);
    } else {
        double y = std::log(1.0 - w);
        double m, s;
        if (n <= 11) {
            const double an = static_cast<double>(n);
            const double gamma = poly(G, 2, an);
            if (y >= gamma) return {w, 1e-19};
            y = -std::log(gamma - y);
            m = poly(C3, 4, an);
            s = std::exp(poly(C4, 4, an));
        } else {
            const double lx = std::log(static_cast<double>(n));
            m = poly(C5, 4, lx);
            s = std::exp(poly(C6, 3, lx));
        }
        p = 1.0 - normal_cdf((y - m) / s);
    }
    p = std::min(std::max(p, 0.0), 1.0);
    return {w, p};
}

SkewKurt skew_kurtosis(std::span<const double> sample) {
    if (sample.size() < 4)
        throw DomainError("skew_kurtosis: need n >= 4");
    const double m2 = central_moment(sample, 2);
    if (!(m2 > 0.0))
        throw DomainError("skew_kurtosis: zero-variance sample");
    const double m3 = central_moment(sample, 3);
    const double m4 = central_moment(sample, 4);
    return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

QqReference qq_reference_from_name(const std::string& name) {
    if (name == "normal") return QqReference::Normal;
    if (name == "gumbel") return QqReference::FittedGumbel;
    if (name == "mixture") return QqReference::FittedMixture;
    if (name == "kernel") return QqReference::Kde;
    throw InputError("unknown q-q reference '" + name +
                     "' (expected normal|gumbel|mixture|kernel)");
}

std::string qq_reference_name(QqReference ref) {
    switch (ref) {
    case QqReference::Normal: return "normal";
    case QqReference::FittedGumbel: return "gumbel";
    case QqReference::FittedMixture: return "mixture";
    case QqReference::Kde: return "kernel";
    }
    return "unknown";
}

QqPoints qq_export(std::span<const double> residuals, QqReference reference) {
    const std::size_t n = residuals.size();
    if (n < 2) throw DomainError("qq_export: need n >= 2 residuals");
    QqPoints out;
    out.reference = qq_reference_name(reference);
    out.sample.assign(residuals.begin(), residuals.end());
    std::sort(out.sample.begin(), out.sample.end());
    out.theoretical.resize(n);

    switch (reference) {
    case QqReference::Normal: {
        const double m = mean(residuals);
        const double s = sample_sd(residuals);
        if (!(s > 0.0))
            throw DomainError("qq_export: zero-spread residuals");
        for (std::size_t i = 0; i < n; ++i) {
            const double p = (static_cast<double>(i) + 0.5) /
                             static_cast<double>(n);
            out.theoretical[i] = m + s * inv_normal_cdf(p);
        }
        out.reference_model = {{"kind", "normal_location_scale"},
                               {"mean", m},
                               {"sd", s}};
        return out;
    }
    case QqReference::FittedGumbel:
    case QqReference::FittedMixture:
    case QqReference::Kde: {
        ErrorModelPtr model;
        if (reference == QqReference::FittedGumbel)
            model = fit_gumbel(residuals);
        else if (reference == QqReference::FittedMixture)
            model = fit_mixture(residuals, 5);
        else
            model = kde_error(residuals, silverman_bandwidth(residuals));
        for (std::size_t i = 0; i < n; ++i) {
            const double p = (static_cast<double>(i) + 0.5) /
                             static_cast<double>(n);
            out.theoretical[i] = model->inverse_cdf(p);
        }
        out.reference_model = model->to_json();
        return out;
    }
    }
    throw InputError("qq_export: unknown reference");
}

Histogram fd_histogram(std::span<const double> sample,
                       double bin_width_override) {
    const std::size_t n = sample.size();
    if (n < 2) throw DomainError("fd_histogram: need n >= 2");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    if (!(hi > lo)) throw DomainError("fd_histogram: zero-spread sample");

    double width = bin_width_override;
    if (!(width > 0.0)) {
        const double iqr =
            quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
        const double n13 = std::cbrt(static_cast<double>(n));
        if (iqr > 0.0) {
            width = 2.0 * iqr / n13;
        } else {
            const double s = sample_sd(sample);
            if (!(s > 0.0))
                throw DomainError("fd_histogram: zero-spread sample");
            width = 3.49 * s / n13;
        }
    }
    auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    bins = std::min(std::max<std::size_t>(bins, 1),
                    static_cast<std::size_t>(1000000));

    Histogram h;
    h.bin_width = width;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = lo + static_cast<double>(i) * width;
    h.counts.assign(bins, 0);
    for (const double x : sample) {
        auto idx = static_cast<std::size_t>((x - lo) / width);
        if (idx >= bins) idx = bins - 1;
        ++h.counts[idx];
    }
    return h;
}

nlohmann::json ResidualDiagnostics::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["mean"] = mean;
    j["sd"] = sd;
    j["skewness"] = skewness;
    j["excess_kurtosis"] = excess_kurtosis;
    j["shapiro"] = {{"ran", shapiro_ok},
                    {"w", shapiro_ok ? nlohmann::json(shapiro_w)
                                     : nlohmann::json(nullptr)},
                    {"p", shapiro_ok ? nlohmann::json(shapiro_p)
                                     : nlohmann::json(nullptr)},
                    {"note", shapiro_note}};
    j["residual_source"] = residual_source;
    return j;
}

ResidualDiagnostics diagnose_residuals(std::span<const double> residuals,
                                       const std::string& source) {
    if (residuals.size() < 4)
        throw InputError("diagnose_residuals: need n >= 4 residuals");
    ResidualDiagnostics d;
    d.n = residuals.size();
    d.mean = mean(residuals);
    d.sd = sample_sd(residuals);
    const SkewKurt sk = skew_kurtosis(residuals);
    d.skewness = sk.skewness;
    d.excess_kurtosis = sk.excess_kurtosis;
    d.residual_source = source;
    if (residuals.size() > 5000) {
        d.shapiro_ok = false;
        d.shapiro_note =
            "skipped: n > 5000 exceeds the supported test range; consider "
            "subsampling";
    } else {
        const ShapiroResult sw = shapiro_wilk(residuals);
        d.shapiro_ok = true;
        d.shapiro_w = sw.w;
        d.shapiro_p = sw.p;
    }
    return d;
}

} // namespace effreg
