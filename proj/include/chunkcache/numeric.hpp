#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace chunkcache::numeric {

namespace detail {

template <typename F>
double simpson_rec(F& f, double a, double m, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance abs_tol.
template <typename F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-9) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, m, b, fa, fm, fb, whole, abs_tol, 48);
}

// Bisection root of a monotone non-decreasing g on [lo, hi] with
// g(lo) <= 0 <= g(hi). Runs until the bracket collapses to floating-point
// resolution (or g hits exactly zero), which satisfies any stated relative
// tolerance on the root.
template <typename G>
double bisect_increasing(G&& g, double lo, double hi, int max_iters = 200) {
    for (int i = 0; i < max_iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        (gm < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Bisection root of a monotone non-increasing g on [lo, hi] with
// g(lo) >= 0 >= g(hi).
template <typename G>
double bisect_decreasing(G&& g, double lo, double hi, int max_iters = 200) {
    return bisect_increasing([&](double x) { return -g(x); }, lo, hi, max_iters);
}

// Root of increasing g with unknown upper bracket: doubles hi from hint until
// g(hi) >= 0. Throws if no finite bracket exists below huge.
template <typename G>
double solve_increasing(G&& g, double hint, const char* what, double huge = 1e18) {
    double hi = hint > 0.0 ? hint : 1.0;
    while (g(hi) < 0.0) {
        hi *= 2.0;
        if (hi > huge) throw std::runtime_error(what);
    }
    return bisect_increasing(g, 0.0, hi);
}

// Golden-section minimization of a unimodal f on [a, b] to x-tolerance xtol.
// Returns (x_min, f(x_min)).
template <typename F>
std::pair<double, double> golden_section_min(F&& f, double a, double b, double xtol = 1e-4) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

}  // namespace chunkcache::numeric
