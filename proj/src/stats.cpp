#include "effreg/stats.hpp"
#include "effreg/error.hpp"

#include <algorithm>
#include <cmath>

namespace effreg {

namespace {

// Serial recursive pairwise reduction over a contiguous block.
double pairwise_block(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_block(x, half) + pairwise_block(x + half, n - half);
}

} // namespace

double pairwise_sum(std::span<const double> x) {
    return pairwise_block(x.data(), x.size());
}

double mean(std::span<const double> x) {
    if (x.empty()) throw DomainError("mean: empty sample");
    return pairwise_sum(x) / static_cast<double>(x.size());
}

double central_moment(std::span<const double> x, int order) {
    const double m = mean(x);
    std::vector<double> p(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::pow(x[i] - m, order);
    return pairwise_sum(p) / static_cast<double>(x.size());
}

double variance_mle(std::span<const double> x) {
    return central_moment(x, 2);
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw DomainError("sample_variance: need n >= 2");
    const double n = static_cast<double>(x.size());
    return central_moment(x, 2) * n / (n - 1.0);
}

double sample_sd(std::span<const double> x) {
    return std::sqrt(sample_variance(x));
}

double raw_moment(std::span<const double> x, int order) {
    if (x.empty()) throw DomainError("raw_moment: empty sample");
    std::vector<double> p(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::pow(x[i], order);
    return pairwise_sum(p) / static_cast<double>(x.size());
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile_sorted: empty sample");
    if (p < 0.0 || p > 1.0) throw DomainError("quantile_sorted: p outside [0,1]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double median(std::span<const double> x) {
    if (x.empty()) throw DomainError("median: empty sample");
    std::vector<double> tmp(x.begin(), x.end());
    std::sort(tmp.begin(), tmp.end());
    return quantile_sorted(tmp, 0.5);
}

double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_cdf(double x) {
    static const double inv_sqrt2 = 0.7071067811865475244;
    return 0.5 * std::erfc(-x * inv_sqrt2);
}

double inv_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("inv_normal_cdf: p outside (0,1)");
    if (p == 0.5) return 0.0;

    // Start from the asymptotic tail expansion of the smaller tail, then
    // polish with Newton on the CDF. Converges in a handful of steps over
    // the whole open interval.
    const double q = std::min(p, 1.0 - p);
    double x = -std::sqrt(-2.0 * std::log(q));
    for (int it = 0; it < 60; ++it) {
        const double f = normal_cdf(x) - q;
        const double d = normal_pdf(x);
        if (d <= 0.0) break;
        double step = f / d;
        // Keep the iterate in the left tail and damp wild steps.
        if (step > 2.0) step = 2.0;
        if (step < -2.0) step = -2.0;
        const double x_new = x - step;
        if (std::abs(x_new - x) <= 1e-13 * (1.0 + std::abs(x_new))) {
            x = x_new;
            break;
        }
        x = x_new;
    }
    return (p < 0.5) ? x : -x;
}

} // namespace effreg
