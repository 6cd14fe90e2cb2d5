#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "effreg/errors.hpp"

namespace effreg {

struct ShapiroResult {
    double w = 0.0;
    double p = 0.0;
};

// Shapiro-Wilk normality test, Royston's AS R94 approximation.
// Supported range 3 <= n <= 5000; outside it an error suggests
// subsampling. Constant samples are rejected as zero-range.
ShapiroResult shapiro_wilk(std::span<const double> sample);

struct SkewKurt {
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

// Moment (biased, divisor n) skewness and excess kurtosis, the
// distribution-shortlisting coordinates. Requires n >= 4 and positive
// spread.
SkewKurt skew_kurtosis(std::span<const double> sample);

enum class QqReference { Normal, FittedGumbel, FittedMixture, Kde };

QqReference qq_reference_from_name(const std::string& name);
std::string qq_reference_name(QqReference ref);

struct QqPoints {
    std::string reference;
    std::vector<double> theoretical; // F^{-1}((i - 0.5) / n)
    std::vector<double> sample;      // sorted residuals
    nlohmann::json reference_model;  // fitted reference parameters
};

// Q-Q pairs against a reference law fitted from the residuals themselves:
// Normal uses the sample mean and n-1 standard deviation; FittedGumbel and
// FittedMixture use their maximum-likelihood fits; Kde uses the Gaussian
// kernel estimate at the Silverman bandwidth (numeric CDF inversion).
QqPoints qq_export(std::span<const double> residuals, QqReference reference);

struct Histogram {
    std::vector<double> edges;       // bin count + 1 edges
    std::vector<std::size_t> counts;
    double bin_width = 0.0;
};

// Freedman-Diaconis histogram (2 IQR n^{-1/3}); falls back to the normal
// reference width when the IQR is zero. bin_width_override > 0 forces a
// width.
Histogram fd_histogram(std::span<const double> sample,
                       double bin_width_override = 0.0);

struct ResidualDiagnostics {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0; // n-1
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    bool shapiro_ok = false; // test ran (n in range, nonzero spread)
    double shapiro_w = 0.0;
    double shapiro_p = 0.0;
    std::string shapiro_note;    // skip reason when shapiro_ok is false
    std::string residual_source; // which fit produced the residuals

    nlohmann::json to_json() const;
};

ResidualDiagnostics diagnose_residuals(std::span<const double> residuals,
                                       const std::string& source);

} // namespace effreg
