#pragma once

// Small numeric helpers: the Gaussian entropy kernel, Gaussian tails via erfc,
// and an adaptive Simpson quadrature used for density checks and the general
// heterodyne acceptance integral.

#include <cmath>
#include <functional>
#include <limits>

namespace cvqkd {

inline constexpr double kPi = 3.14159265358979323846;

// g(lambda) = ((l+1)/2)log2((l+1)/2) - ((l-1)/2)log2((l-1)/2), the von Neumann
// entropy of a thermal mode with symplectic eigenvalue lambda. Removable
// singularity at lambda = 1.
inline double gaussian_g(double lambda) {
    if (lambda <= 1.0 + 1e-12) return 0.0;
    const double lp = 0.5 * (lambda + 1.0);
    const double lm = 0.5 * (lambda - 1.0);
    return lp * std::log2(lp) - lm * std::log2(lm);
}

// P(|X| >= c) for X ~ N(0, v). Uses erfc; never 1-erf.
inline double gaussian_two_tail(double c, double v) {
    if (c <= 0.0) return 1.0;
    return std::erfc(c / std::sqrt(2.0 * v));
}

// P(a <= X <= b) for X ~ N(0, v), written as a difference of erfc tails to
// stay accurate far out in the tail.
inline double gaussian_interval_mass(double a, double b, double v) {
    const double s = std::sqrt(2.0 * v);
    if (a >= 0.0) return 0.5 * (std::erfc(a / s) - std::erfc(b / s));
    if (b <= 0.0) return 0.5 * (std::erfc(-b / s) - std::erfc(-a / s));
    return 1.0 - 0.5 * std::erfc(-a / s) - 0.5 * std::erfc(b / s);
}

inline double gaussian_pdf(double x, double v) {
    return std::exp(-0.5 * x * x / v) / std::sqrt(2.0 * kPi * v);
}

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_depth = 48) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// x*log2(x), 0 at 0.
inline double xlog2x(double x) {
    return x > 0.0 ? x * std::log2(x) : 0.0;
}

}  // namespace cvqkd
