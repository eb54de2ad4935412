#ifndef ADAPTEST_LOWER_BOUND_HPP
#define ADAPTEST_LOWER_BOUND_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "adaptest/errors.hpp"
#include "adaptest/grades.hpp"
#include "adaptest/optimize.hpp"
#include "adaptest/response_model.hpp"

namespace adaptest {

// Abilities closer than this to a grade threshold have a diverging lower
// bound; solvers refuse them instead of returning an exploding value.
inline constexpr double kDegenerateAbilityGap = 1e-9;

// Levels whose index value falls below this are dropped from the finite
// program; they carry no usable separation.
inline constexpr double kMinIndexValue = 1e-14;

enum class CaseKind { C1, C2, C3 };

enum class CaseTag { C1, C2, C3Single, C3TwoLevel, FiniteLP };

inline const char* to_string(CaseTag t) {
    switch (t) {
        case CaseTag::C1: return "C1";
        case CaseTag::C2: return "C2";
        case CaseTag::C3Single: return "C3_single";
        case CaseTag::C3TwoLevel: return "C3_two_level";
        case CaseTag::FiniteLP: return "finite_lp";
    }
    return "?";
}

/**
 * Solution of the lower-bound program at a given ability.
 *
 * m_star is the value of the variational problem: every admissible
 * classification procedure with error tolerance delta asks at least
 * m_star * ln(1/(2.4 delta)) questions in expectation. The optimal plan asks
 * level x1 with probability w and level x2 otherwise (x1 <= x2); lambda is
 * the optimal dual weight on the lower-alternative constraint.
 */
struct LowerBoundSolution {
    double m_star = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double w = 1.0;
    double lambda = 0.0;
    CaseTag case_tag = CaseTag::FiniteLP;
    // Cost of restricting play to a single level; zero whenever the max-min
    // interchange holds (in particular for the whole ratio family).
    double restricted_gap = 0.0;

    bool single_level() const { return w >= 1.0 || x1 == x2; }

    // Expected-questions lower bound at tolerance delta.
    double scaled(double delta) const {
        return m_star * std::log(1.0 / (2.4 * delta));
    }
};

// Vertex of the dual feasible region's boundary. line_index refers to the
// input line whose segment starts at this vertex (the last vertex keeps the
// index of the line that ends on the axis).
struct EnvelopePoint {
    double y1 = 0.0;
    double y2 = 0.0;
    int line_index = -1;
};

/**
 * Lower envelope, restricted to the positive quadrant, of the lines
 * a_i y1 + b_i y2 = 1.
 *
 * Input must be sorted with b strictly decreasing (the caller sorts; for
 * piecewise-monotone index sequences the sort is a linear merge). Returns
 * the envelope vertices from (0, 1/b_1) to (1/a_last, 0); lines that never
 * touch the envelope do not appear.
 */
inline std::vector<EnvelopePoint> lower_envelope(
    const std::vector<std::pair<double, double>>& lines) {
    if (lines.empty())
        throw InvalidConstraintError("lower_envelope: no lines");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!(lines[i].first > 0.0) || !(lines[i].second > 0.0))
            throw InvalidConstraintError("lower_envelope: coefficients must be positive");
        if (i > 0 && !(lines[i].second < lines[i - 1].second))
            throw InvalidConstraintError("lower_envelope: input must be sorted with b strictly decreasing");
    }

    // Drop dominated lines: with b decreasing, a line is dominated iff some
    // earlier line has a >= a_i. Survivors have strictly increasing a, hence
    // strictly decreasing slope -a/b in the (y1, y2) plane.
    std::vector<int> kept;
    double a_max = 0.0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].first > a_max) {
            kept.push_back(static_cast<int>(i));
            a_max = lines[i].first;
        }
    }

    // Monotone-chain pass: a surviving line may still lie above the running
    // envelope everywhere; pop those.
    auto isect_y1 = [&](int i, int j) {
        // y1 coordinate where lines i and j cross.
        const double ai = lines[i].first, bi = lines[i].second;
        const double aj = lines[j].first, bj = lines[j].second;
        return (bi - bj) / (aj * bi - ai * bj);
    };
    std::vector<int> chain;
    for (int idx : kept) {
        while (chain.size() >= 2) {
            const int top = chain[chain.size() - 1];
            const int below = chain[chain.size() - 2];
            if (isect_y1(below, idx) <= isect_y1(below, top))
                chain.pop_back();
            else
                break;
        }
        chain.push_back(idx);
    }

    std::vector<EnvelopePoint> vertices;
    vertices.push_back({0.0, 1.0 / lines[chain.front()].second, chain.front()});
    for (std::size_t s = 1; s < chain.size(); ++s) {
        const int i = chain[s - 1], j = chain[s];
        const double y1 = isect_y1(i, j);
        const double y2 = (1.0 - lines[i].first * y1) / lines[i].second;
        vertices.push_back({y1, y2, j});
    }
    vertices.push_back({1.0 / lines[chain.back()].first, 0.0, chain.back()});
    return vertices;
}

/**
 * Finite lower-bound program: given the index values f1, f2 at each level,
 * minimize total questions subject to both separation constraints. Solved
 * through the dual envelope; the primal plan (at most two levels) is
 * recovered from the lines active at the optimal vertex.
 *
 * `levels` labels the solution with actual difficulties; when omitted the
 * level index is used.
 */
inline LowerBoundSolution solve_finite(const std::vector<double>& f1_vals,
                                       const std::vector<double>& f2_vals,
                                       const std::vector<double>& levels = {}) {
    if (f1_vals.size() != f2_vals.size())
        throw InfeasibleSeparationError("solve_finite: mismatched value vectors");
    if (!levels.empty() && levels.size() != f1_vals.size())
        throw InfeasibleSeparationError("solve_finite: mismatched level vector");

    struct Line {
        double a, b;
        int orig;
    };
    std::vector<Line> usable;
    for (std::size_t i = 0; i < f1_vals.size(); ++i) {
        if (f1_vals[i] > kMinIndexValue && f2_vals[i] > kMinIndexValue)
            usable.push_back({f1_vals[i], f2_vals[i], static_cast<int>(i)});
    }
    if (usable.empty())
        throw InfeasibleSeparationError("solve_finite: no level separates the hypotheses");

    std::sort(usable.begin(), usable.end(), [](const Line& l, const Line& r) {
        if (l.b != r.b) return l.b > r.b;
        return l.a > r.a;
    });
    // Equal b: keep only the strongest line.
    std::vector<Line> dedup;
    for (const auto& l : usable)
        if (dedup.empty() || l.b < dedup.back().b) dedup.push_back(l);

    std::vector<std::pair<double, double>> sorted_lines;
    sorted_lines.reserve(dedup.size());
    for (const auto& l : dedup) sorted_lines.emplace_back(l.a, l.b);
    const auto vertices = lower_envelope(sorted_lines);

    // Dual objective max y1 + y2 over the envelope vertices.
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t v = 0; v < vertices.size(); ++v) {
        const double val = vertices[v].y1 + vertices[v].y2;
        if (val > best_val + 1e-15 * std::max(1.0, best_val)) {
            best_val = val;
            best = v;
        }
    }
    const auto& vtx = vertices[best];

    auto level_of = [&](int orig) {
        return levels.empty() ? static_cast<double>(orig) : levels[orig];
    };

    LowerBoundSolution sol;
    sol.case_tag = CaseTag::FiniteLP;
    sol.m_star = best_val;
    sol.lambda = vtx.y1 / best_val;

    const bool interior = vtx.y1 > 0.0 && vtx.y2 > 0.0;
    if (interior && best > 0) {
        // Two active lines: the segment ending at the vertex and the one
        // starting there. Complementary slackness makes both primal
        // constraints tight; solve the 2x2 system for the plan. At the
        // optimal vertex both weights are nonnegative up to rounding.
        const int li = vertices[best - 1].line_index;
        const int lj = vtx.line_index;
        const Line& A = dedup[li];
        const Line& B = dedup[lj];
        const double det = A.a * B.b - B.a * A.b;
        const double scale = std::abs(A.a * B.b) + std::abs(B.a * A.b);
        if (li != lj && std::abs(det) > 1e-13 * scale) {
            double ti = std::max(0.0, (B.b - B.a) / det);
            double tj = std::max(0.0, (A.a - A.b) / det);
            double xi = level_of(A.orig), xj = level_of(B.orig);
            if (xi > xj) {
                std::swap(xi, xj);
                std::swap(ti, tj);
            }
            sol.x1 = xi;
            sol.x2 = xj;
            sol.w = ti / (ti + tj);
            sol.m_star = ti + tj;
            if (sol.w >= 1.0) sol.x2 = sol.x1;
            if (sol.w <= 0.0) {
                sol.x1 = sol.x2;
                sol.w = 1.0;
            }
            return sol;
        }
        // Near-parallel actives are near-identical lines; a single one
        // attains the vertex value to rounding.
    }
    const Line& L = dedup[vtx.line_index];
    sol.x1 = sol.x2 = level_of(L.orig);
    sol.w = 1.0;
    sol.m_star = 1.0 / std::min(L.a, L.b);
    sol.lambda = (L.a < L.b) ? 1.0 : (L.a > L.b ? 0.0 : 0.5);
    return sol;
}

namespace detail {

struct Bracket {
    double u_lo;
    double u_hi;
    std::size_t index;
};

inline Bracket resolve_bracket(double p, const GradeScheme& grades,
                               const AbilityDomain& domain) {
    grades.validate_against(domain);
    const std::size_t idx = grades.bracket_index(p, domain);
    const auto [lo, hi] = grades.alternatives(idx, domain);
    if (std::abs(p - lo) <= kDegenerateAbilityGap ||
        std::abs(hi - p) <= kDegenerateAbilityGap)
        throw DegenerateAbilityError("ability indistinguishable from a grade threshold");
    return {lo, hi, idx};
}

}  // namespace detail

/**
 * Case classification of the index pair (f1, f2) at their peaks:
 *   C1: f1(x2*) >= f2(x2*)  -- the peak of f2 already covers f1;
 *   C2: f2(x1*) >= f1(x1*)  -- symmetric;
 *   C3: neither, the curves cross strictly between the peaks.
 */
inline CaseKind classify_case(const ResponseModel& model, double p,
                              double u_lo, double u_hi,
                              const QuestionBank& bank) {
    const double x2s = x_star(model, p, u_hi, bank);
    if (f(model, x2s, p, u_lo) >= f(model, x2s, p, u_hi)) return CaseKind::C1;
    const double x1s = x_star(model, p, u_lo, bank);
    if (f(model, x1s, p, u_hi) >= f(model, x1s, p, u_lo)) return CaseKind::C2;
    return CaseKind::C3;
}

/**
 * Case C3 with a monotone derivative ratio: the dual optimum is the unique
 * crossing f1(x) = f2(x) in (x1*, x2*), found by bisection on the sign of
 * f1 - f2. Throws CaseMismatchError when the sign pattern contradicts C3.
 */
inline double solve_single_question(const ResponseModel& model, double p,
                                    double u_lo, double u_hi, double x_lo,
                                    double x_hi) {
    const double x1s = x_star(model, p, u_lo, x_lo, x_hi);
    const double x2s = x_star(model, p, u_hi, x_lo, x_hi);
    double a = x1s, b = x2s;
    auto sign_fn = [&](double x) {
        return f(model, x, p, u_lo) - f(model, x, p, u_hi);
    };
    if (!(b > a) || !(sign_fn(a) > 0.0) || !(sign_fn(b) < 0.0))
        throw CaseMismatchError("solve_single_question: no sign change of f1 - f2 in (x1*, x2*)");
    // 200 halvings shrink any bracket far below double resolution; the cap
    // only matters for NaN pathologies.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double f1m = f(model, mid, p, u_lo);
        const double f2m = f(model, mid, p, u_hi);
        if (std::abs(f1m - f2m) <= 1e-10 * std::max(f1m, f2m)) return mid;
        if (f1m - f2m > 0.0)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

inline double solve_single_question(const ResponseModel& model, double p,
                                    double u_lo, double u_hi) {
    // Unbanked variant for ratio-family models; the crossing lies between
    // the unconstrained peaks.
    return solve_single_question(model, p, u_lo, u_hi, 1e-9, 1e9);
}

namespace detail {

// Grid LP on [lo, hi]: the finite-bank program on `n` equispaced levels,
// refined once around the active levels.
inline LowerBoundSolution solve_grid_lp(const ResponseModel& model, double p,
                                        double u_lo, double u_hi, double lo,
                                        double hi, std::size_t n = 512) {
    auto solve_on = [&](double a, double b) {
        std::vector<double> levels(n), f1v(n), f2v(n);
        for (std::size_t i = 0; i < n; ++i) {
            levels[i] = a + (b - a) * static_cast<double>(i) /
                                static_cast<double>(n - 1);
            f1v[i] = f(model, levels[i], p, u_lo);
            f2v[i] = f(model, levels[i], p, u_hi);
        }
        return solve_finite(f1v, f2v, levels);
    };
    LowerBoundSolution coarse = solve_on(lo, hi);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    const double a = std::max(lo, coarse.x1 - step);
    const double b = std::min(hi, coarse.x2 + step);
    LowerBoundSolution fine = (b > a) ? solve_on(a, b) : coarse;
    fine.case_tag = CaseTag::C3TwoLevel;
    return fine;
}

// Maximizer of min{f1, f2}; quasi-concave for the ratio family, grid-scanned
// otherwise.
inline double argmax_min_index(const ResponseModel& model, double p,
                               double u_lo, double u_hi, double lo,
                               double hi) {
    auto obj = [&](double x) {
        return std::min(f(model, x, p, u_lo), f(model, x, p, u_hi));
    };
    if (model.is_ratio_family()) return golden_max(obj, lo, hi);
    return grid_then_golden_max(obj, lo, hi, 4097);
}

}  // namespace detail

enum class SolveMode { Exact, RestrictedSingle };

/**
 * Lower-bound program over an interval bank.
 *
 * Cases C1/C2 give a single question at the covering peak. Case C3 gives the
 * crossing point for ratio-family models (where the derivative ratio is
 * strictly decreasing and a single level is optimal); other models fall back
 * to a grid LP on [x1*, x2*], which may genuinely need two levels.
 *
 * RestrictedSingle maximizes min{f1, f2} over a single level and reports the
 * optimality gap against the exact program. For ratio-family models the two
 * coincide and the gap is exactly zero.
 */
inline LowerBoundSolution solve_continuous(const ResponseModel& model, double p,
                                           const GradeScheme& grades,
                                           const AbilityDomain& domain,
                                           const QuestionBank& bank,
                                           SolveMode mode = SolveMode::Exact) {
    const auto br = detail::resolve_bracket(p, grades, domain);
    const double lo = bank.lo(), hi = bank.hi();
    const double x1s = x_star(model, p, br.u_lo, lo, hi);
    const double x2s = x_star(model, p, br.u_hi, lo, hi);

    auto single = [&](double level, CaseTag tag, double lambda) {
        LowerBoundSolution sol;
        sol.x1 = sol.x2 = level;
        sol.w = 1.0;
        sol.lambda = lambda;
        sol.case_tag = tag;
        sol.m_star =
            1.0 / std::min(f(model, level, p, br.u_lo), f(model, level, p, br.u_hi));
        return sol;
    };

    LowerBoundSolution exact;
    if (f(model, x2s, p, br.u_lo) >= f(model, x2s, p, br.u_hi)) {
        exact = single(x2s, CaseTag::C1, 0.0);
    } else if (f(model, x1s, p, br.u_hi) >= f(model, x1s, p, br.u_lo)) {
        exact = single(x1s, CaseTag::C2, 1.0);
    } else if (model.is_ratio_family()) {
        const double xbar =
            solve_single_question(model, p, br.u_lo, br.u_hi, lo, hi);
        exact = single(xbar, CaseTag::C3Single, 0.0);
        // Stationarity of the dual mixture at the crossing fixes lambda.
        const double d1 = f_prime(model, xbar, p, br.u_lo);
        const double d2 = f_prime(model, xbar, p, br.u_hi);
        exact.lambda = (d2 - d1 != 0.0) ? d2 / (d2 - d1) : 0.5;
    } else {
        exact = detail::solve_grid_lp(model, p, br.u_lo, br.u_hi, x1s, x2s);
    }

    if (mode == SolveMode::Exact) return exact;

    if (model.is_ratio_family() || exact.single_level()) {
        // Single level already optimal: restriction costs nothing.
        LowerBoundSolution sol = exact;
        sol.restricted_gap = 0.0;
        return sol;
    }
    const double xr =
        detail::argmax_min_index(model, p, br.u_lo, br.u_hi, x1s, x2s);
    LowerBoundSolution sol = single(xr, exact.case_tag, exact.lambda);
    sol.restricted_gap = sol.m_star - exact.m_star;
    return sol;
}

// Best single level of a finite program: argmax of min{f1, f2}, with the
// optimality gap against the exact two-level solution. Zero gap whenever the
// exact plan already uses one level.
inline LowerBoundSolution restrict_finite_to_single(
    const LowerBoundSolution& exact, const std::vector<double>& f1_vals,
    const std::vector<double>& f2_vals, const std::vector<double>& levels) {
    if (exact.single_level()) return exact;
    std::size_t best = 0;
    double best_min = -1.0;
    for (std::size_t i = 0; i < f1_vals.size(); ++i) {
        const double v = std::min(f1_vals[i], f2_vals[i]);
        if (v > best_min) {
            best_min = v;
            best = i;
        }
    }
    LowerBoundSolution sol;
    sol.case_tag = exact.case_tag;
    sol.x1 = sol.x2 =
        levels.empty() ? static_cast<double>(best) : levels[best];
    sol.w = 1.0;
    sol.lambda = (f1_vals[best] < f2_vals[best]) ? 1.0 : 0.0;
    sol.m_star = 1.0 / best_min;
    sol.restricted_gap = sol.m_star - exact.m_star;
    return sol;
}

// Value of the lower-bound program for either bank type.
inline LowerBoundSolution solve_bank(const ResponseModel& model, double p,
                                     const GradeScheme& grades,
                                     const AbilityDomain& domain,
                                     const QuestionBank& bank,
                                     SolveMode mode = SolveMode::Exact) {
    if (!bank.is_finite()) return solve_continuous(model, p, grades, domain, bank, mode);
    const auto br = detail::resolve_bracket(p, grades, domain);
    const auto& levels = bank.levels();
    std::vector<double> f1v(levels.size()), f2v(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        f1v[i] = f(model, levels[i], p, br.u_lo);
        f2v[i] = f(model, levels[i], p, br.u_hi);
    }
    const LowerBoundSolution exact = solve_finite(f1v, f2v, levels);
    if (mode == SolveMode::Exact) return exact;
    return restrict_finite_to_single(exact, f1v, f2v, levels);
}

inline double m_star(const ResponseModel& model, double p,
                     const GradeScheme& grades, const AbilityDomain& domain,
                     const QuestionBank& bank) {
    return solve_bank(model, p, grades, domain, bank).m_star;
}

// The expected-questions bound at tolerance delta: m* ln(1/(2.4 delta)).
inline double m_star_scaled(const ResponseModel& model, double p,
                            const GradeScheme& grades,
                            const AbilityDomain& domain,
                            const QuestionBank& bank, double delta) {
    return m_star(model, p, grades, domain, bank) * std::log(1.0 / (2.4 * delta));
}

}  // namespace adaptest

#endif  // ADAPTEST_LOWER_BOUND_HPP
