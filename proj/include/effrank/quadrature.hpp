#pragma once

// Small numeric toolbox used for the per-family constants: adaptive Simpson
// quadrature (finite intervals and the real line via a tangent substitution)
// and bisection root-finding for monotone equations.

#include <cmath>
#include <functional>

#include "effrank/errors.hpp"

namespace effrank::quad {

namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    // bail out on overflowed panels: refining cannot help once values are
    // non-finite, and NaN comparisons would otherwise force full recursion
    if (!std::isfinite(delta)) return left + right;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

// Absolute tolerance `tol` with a relative floor: panels stop refining once
// the correction is negligible against the whole-interval magnitude.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13, int depth = 55) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    if (!std::isfinite(whole)) return whole;
    const double eff = std::max(tol, 1e-15 * std::fabs(whole));
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, eff, depth);
}

// Integral of f over the real line via x = tan(u); f must decay at least as
// fast as |x|^{-2} so the transformed integrand stays bounded.
inline double integrate_line(const std::function<double(double)>& f, double tol = 1e-13) {
    const double half_pi = 1.57079632679489661923;
    const double eps = 1e-12;
    auto g = [&](double u) {
        const double c = std::cos(u);
        const double x = std::tan(u);
        return f(x) / (c * c);
    };
    return integrate(g, -half_pi + eps, half_pi - eps, tol);
}

// Bisection for g monotone on [lo, hi] with a sign change.
inline double bisect(const std::function<double(double)>& g, double lo, double hi,
                     int iters = 200) {
    double flo = g(lo), fhi = g(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw NumericError("bisect: no sign change on the bracket");
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = g(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace effrank::quad
