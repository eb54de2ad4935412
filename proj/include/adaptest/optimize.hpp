#ifndef ADAPTEST_OPTIMIZE_HPP
#define ADAPTEST_OPTIMIZE_HPP

#include <cmath>
#include <cstddef>
#include <utility>

namespace adaptest {

// Golden-section maximization of a quasi-concave function on [lo, hi].
// Returns the abscissa; the bracket shrinks below xtol or max_iter is hit.
template <class F>
double golden_max(F&& f, double lo, double hi, double xtol = 1e-10,
                  int max_iter = 400) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Root of a nondecreasing function on [lo, hi] by bisection. The caller is
// responsible for g(lo) <= 0 <= g(hi); endpoints are returned when the sign
// condition fails there.
template <class F>
double bisect_increasing(F&& g, double lo, double hi, double xtol = 1e-10,
                         int max_iter = 200) {
    double glo = g(lo);
    if (glo >= 0.0) return lo;
    double ghi = g(hi);
    if (ghi <= 0.0) return hi;
    double a = lo, b = hi;
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        double mid = 0.5 * (a + b);
        if (g(mid) < 0.0)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

// Dense grid argmax followed by a golden-section refinement between the
// neighbors of the best grid point. Safe for functions that are only
// piecewise smooth; exact quasi-concavity is not required for the scan.
template <class F>
double grid_then_golden_max(F&& f, double lo, double hi, std::size_t n = 2049,
                            double xtol = 1e-10) {
    if (!(hi > lo)) return lo;
    std::size_t best = 0;
    double fbest = f(lo);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double x = (i + 1 == n) ? hi : lo + step * static_cast<double>(i);
        const double fx = f(x);
        if (fx > fbest) {
            fbest = fx;
            best = i;
        }
    }
    const double a = (best == 0) ? lo : lo + step * static_cast<double>(best - 1);
    const double b = (best + 1 >= n) ? hi : lo + step * static_cast<double>(best + 1);
    return golden_max(f, a, b, xtol);
}

}  // namespace adaptest

#endif  // ADAPTEST_OPTIMIZE_HPP
