#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace nvlab {

namespace detail {

template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance tol.
// The integrand must be smooth on the interval; integrate piecewise-defined
// functions one analytic piece at a time (see integrate_pieces).
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Integrate across an ascending knot sequence, one adaptive pass per
// subinterval, so integrand kinks at the knots never straddle a panel.
template <class F>
double integrate_pieces(const F& f, std::span<const double> knots, double tol = 1e-10) {
    if (knots.size() < 2) throw std::invalid_argument("integrate_pieces: need at least two knots");
    double total = 0.0;
    const double piece_tol = tol / static_cast<double>(knots.size() - 1);
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        total += adaptive_simpson(f, knots[i], knots[i + 1], piece_tol);
    return total;
}

// Smallest x in [lo, hi] with pred(x) true, for a monotone false->true
// predicate with pred(hi) true. Plain bisection, absolute tolerance.
template <class P>
double bisect_first_true(const P& pred, double lo, double hi, double xtol = 1e-12,
                         int max_iter = 200) {
    for (int i = 0; i < max_iter && (hi - lo) > xtol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// Root of a nondecreasing function with f(lo) <= 0 <= f(hi).
template <class F>
double bisect_root(const F& f, double lo, double hi, double xtol = 1e-12, int max_iter = 200) {
    return bisect_first_true([&](double x) { return f(x) >= 0.0; }, lo, hi, xtol, max_iter);
}

// Knot sequence for quadrature over [lo, hi]: base knots clipped to the
// window plus any extra split points, sorted and deduplicated.
inline std::vector<double> clip_knots(std::span<const double> knots, double lo, double hi,
                                      std::initializer_list<double> extra = {}) {
    std::vector<double> out;
    out.push_back(lo);
    out.push_back(hi);
    for (double k : knots)
        if (k > lo && k < hi) out.push_back(k);
    for (double k : extra)
        if (k > lo && k < hi) out.push_back(k);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace nvlab
