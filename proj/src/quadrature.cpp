#include "effreg/quadrature.hpp"
#include "effreg/error.hpp"

#include <cmath>

namespace effreg {

namespace {

double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double b, double fa, double fm, double fb, double whole,
                     double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double err = left + right - whole;
    if (depth <= 0 || std::abs(err) <= 15.0 * tol) {
        return left + right + err / 15.0;
    }
    return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol) {
    if (!(abs_tol > 0.0)) throw DomainError("adaptive_simpson: tolerance must be positive");
    if (a == b) return 0.0;
    const int panels = 16;
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double pa = a + i * h;
        const double pb = a + (i + 1) * h;
        const double pm = 0.5 * (pa + pb);
        const double fa = f(pa), fm = f(pm), fb = f(pb);
        const double whole = simpson(fa, fm, fb, pb - pa);
        total += adaptive_step(f, pa, pb, fa, fm, fb, whole, abs_tol / panels, 48);
    }
    return total;
}

double integrate_tailed(const std::function<double(double)>& g, double center,
                        double sigma, double abs_tol) {
    if (!(sigma > 0.0)) throw DomainError("integrate_tailed: sigma must be positive");
    double lo = center - 12.0 * sigma;
    double hi = center + 12.0 * sigma;
    double total = adaptive_simpson(g, lo, hi, abs_tol);
    const double block = 4.0 * sigma;
    const double block_tol = abs_tol;
    for (int i = 0; i < 64; ++i) {
        const double piece = adaptive_simpson(g, lo - block, lo, block_tol);
        lo -= block;
        total += piece;
        if (std::abs(piece) < block_tol) break;
    }
    for (int i = 0; i < 64; ++i) {
        const double piece = adaptive_simpson(g, hi, hi + block, block_tol);
        hi += block;
        total += piece;
        if (std::abs(piece) < block_tol) break;
    }
    return total;
}

} // namespace effreg
