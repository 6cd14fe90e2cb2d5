#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace effreg {

// Fixed-order pairwise summation. Deterministic for a given input order and
// independent of threading, with O(log n) rounding-error growth.
double pairwise_sum(std::span<const double> x);

double mean(std::span<const double> x);

// Central sample moment of given order (divisor n).
double central_moment(std::span<const double> x, int order);

// Variance with divisor n (moment convention used throughout).
double variance_mle(std::span<const double> x);

// Variance with divisor n-1 and its square root.
double sample_variance(std::span<const double> x);
double sample_sd(std::span<const double> x);

// Raw moment (1/n) sum x^order.
double raw_moment(std::span<const double> x, int order);

// Linear-interpolation quantile of a sorted sample, p in [0,1].
double quantile_sorted(std::span<const double> sorted, double p);

// Median (copies and sorts).
double median(std::span<const double> x);

double normal_pdf(double x);

// Standard normal CDF via erfc; absolute error at machine level.
double normal_cdf(double x);

// Inverse standard normal CDF, relative error <= 1e-10 on (0,1).
// Safeguarded Newton on normal_cdf with an asymptotic tail start.
double inv_normal_cdf(double p);

} // namespace effreg
