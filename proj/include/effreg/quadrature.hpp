#pragma once

#include <functional>

namespace effreg {

// Adaptive Simpson integration to absolute tolerance abs_tol.
// The interval is split into fixed panels first so narrow features
// are not missed by the top-level error estimate.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol);

// Integral of g over the real line for a density-weighted integrand that
// decays in both tails. Integrates a core window [center - 12*sigma,
// center + 12*sigma], then extends outward in 4*sigma blocks until a block
// contributes less than abs_tol. Needed because moment integrands of
// heavier-tailed laws still carry mass beyond the 12-sigma core.
double integrate_tailed(const std::function<double(double)>& g, double center,
                        double sigma, double abs_tol);

} // namespace effreg
