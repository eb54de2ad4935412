#include <catch2/catch.hpp>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "adaptest/lower_bound.hpp"
#include "adaptest/rng.hpp"
#include "oracles.hpp"

using namespace adaptest;

namespace {

const AbilityDomain kDomain(1.0, 14.0);
const GradeScheme kGrades(std::vector<double>{4.0, 7.0, 10.0});
const QuestionBank kBank = QuestionBank::interval(2.0, 10.0);

}  // namespace

TEST_CASE("lower envelope of two crossing lines", "[lower_bound]") {
    const auto pts = lower_envelope({{1.0, 2.0}, {2.0, 1.0}});
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].y1 == Approx(0.0));
    CHECK(pts[0].y2 == Approx(0.5));
    CHECK(pts[1].y1 == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(pts[1].y2 == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(pts[2].y1 == Approx(0.5));
    CHECK(pts[2].y2 == Approx(0.0));
}

TEST_CASE("lower envelope: single line and dominated line", "[lower_bound]") {
    const auto single = lower_envelope({{2.0, 2.0}});
    REQUIRE(single.size() == 2);
    CHECK(single[0].y2 == Approx(0.5));
    CHECK(single[1].y1 == Approx(0.5));

    // (2,2) lies strictly below (1,1); only it survives. Input sorted by
    // the caller with b strictly decreasing.
    const auto pts = lower_envelope({{2.0, 2.0}, {1.0, 1.0}});
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].y2 == Approx(0.5));
    CHECK(pts[1].y1 == Approx(0.5));
    CHECK(pts[0].line_index == 0);
    CHECK(pts[1].line_index == 0);
}

TEST_CASE("lower envelope input validation", "[lower_bound]") {
    CHECK_THROWS_AS(lower_envelope({{1.0, -2.0}}), InvalidConstraintError);
    CHECK_THROWS_AS(lower_envelope({{0.0, 2.0}}), InvalidConstraintError);
    CHECK_THROWS_AS(lower_envelope({{1.0, 1.0}, {2.0, 2.0}, {3.0, 0.5}}),
                    InvalidConstraintError);  // b not strictly decreasing
    CHECK_THROWS_AS(lower_envelope({}), InvalidConstraintError);
}

TEST_CASE("envelope vertices are monotone and convex", "[lower_bound]") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + static_cast<int>(rng.u01() * 20);
        std::vector<std::pair<double, double>> lines;
        for (int i = 0; i < k; ++i)
            lines.emplace_back(0.05 + 5.0 * rng.u01(), 0.05 + 5.0 * rng.u01());
        std::sort(lines.begin(), lines.end(), [](auto l, auto r) {
            if (l.second != r.second) return l.second > r.second;
            return l.first > r.first;
        });
        // Strict-b precondition: drop duplicates.
        std::vector<std::pair<double, double>> strict;
        for (const auto& l : lines)
            if (strict.empty() || l.second < strict.back().second)
                strict.push_back(l);
        const auto pts = lower_envelope(strict);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            CHECK(pts[i].y1 > pts[i - 1].y1);
            CHECK(pts[i].y2 < pts[i - 1].y2);
        }
        // The piecewise-linear function through the vertices lies on or
        // below every input line at random abscissae.
        for (int probe = 0; probe < 100; ++probe) {
            const double y1 = rng.u01() * pts.back().y1;
            std::size_t seg = 1;
            while (seg + 1 < pts.size() && pts[seg].y1 < y1) ++seg;
            const auto& a = pts[seg - 1];
            const auto& b = pts[seg];
            const double t = (y1 - a.y1) / (b.y1 - a.y1);
            const double env = a.y2 + t * (b.y2 - a.y2);
            for (const auto& line : strict) {
                const double line_y2 = (1.0 - line.first * y1) / line.second;
                CHECK(env <= line_y2 + 1e-9);
            }
        }
    }
}

TEST_CASE("solve_finite reference instances", "[lower_bound]") {
    const auto two = solve_finite({1.0, 2.0}, {2.0, 1.0});
    CHECK(two.m_star == Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_FALSE(two.single_level());
    CHECK(two.w == Approx(0.5).epsilon(1e-12));

    const auto one = solve_finite({2.0}, {2.0});
    CHECK(one.m_star == Approx(0.5).epsilon(1e-12));
    CHECK(one.single_level());
    CHECK(one.w == 1.0);

    CHECK_THROWS_AS(solve_finite({1e-16}, {1e-16}), InfeasibleSeparationError);
    CHECK_THROWS_AS(solve_finite({}, {}), InfeasibleSeparationError);
}

TEST_CASE("solve_finite: LP homogeneity", "[lower_bound]") {
    std::vector<double> f1{0.3, 0.8, 1.4, 0.2};
    std::vector<double> f2{1.1, 0.6, 0.25, 0.9};
    const double base = solve_finite(f1, f2).m_star;
    for (auto& v : f1) v *= 2.0;
    for (auto& v : f2) v *= 2.0;
    CHECK(solve_finite(f1, f2).m_star == Approx(base / 2.0).epsilon(1e-12));
    CHECK(base > 0.0);
}

TEST_CASE("solve_finite agrees with brute force on random instances",
          "[lower_bound]") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng.u01() * 25);
        std::vector<double> f1(k), f2(k);
        for (int i = 0; i < k; ++i) {
            f1[i] = 0.05 + 3.0 * rng.u01();
            f2[i] = 0.05 + 3.0 * rng.u01();
        }
        const auto sol = solve_finite(f1, f2);
        const double dual = oracles::dual_bruteforce(f1, f2);
        const double maxmin = oracles::maxmin_bruteforce(f1, f2);
        CHECK(sol.m_star == Approx(dual).margin(1e-9));
        CHECK(sol.m_star == Approx(1.0 / maxmin).margin(1e-8));
    }
}

namespace {
// Plan value min_j (w f_j(x1) + (1-w) f_j(x2)) given solution levels as
// indices (the default labeling of solve_finite).
double plan_value(const std::vector<double>& f1, const std::vector<double>& f2,
                  const LowerBoundSolution& sol) {
    const auto i = static_cast<std::size_t>(sol.x1);
    const auto j = static_cast<std::size_t>(sol.x2);
    const double a = sol.w * f1[i] + (1.0 - sol.w) * f1[j];
    const double b = sol.w * f2[i] + (1.0 - sol.w) * f2[j];
    return std::min(a, b);
}
}  // namespace

TEST_CASE("solve_finite plan attains 1/m_star", "[lower_bound]") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 1 + static_cast<int>(rng.u01() * 30);
        std::vector<double> f1(k), f2(k);
        for (int i = 0; i < k; ++i) {
            f1[i] = 0.05 + 2.0 * rng.u01();
            f2[i] = 0.05 + 2.0 * rng.u01();
        }
        const auto sol = solve_finite(f1, f2);
        CHECK(plan_value(f1, f2, sol) == Approx(1.0 / sol.m_star).margin(1e-8));
        CHECK(sol.x1 <= sol.x2);
        CHECK(sol.lambda >= 0.0);
        CHECK(sol.lambda <= 1.0);
    }
}

TEST_CASE("case classification on the reference bracket", "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    CHECK(classify_case(model, 5.5, 4.0, 7.0, kBank) == CaseKind::C1);
    CHECK(classify_case(model, 4.2, 4.0, 7.0, kBank) == CaseKind::C2);
    // Wide bracket with the ability in the KL middle yields C3.
    const auto wide = QuestionBank::interval(0.5, 40.0);
    CHECK(classify_case(model, 6.5, 2.0, 20.0, wide) == CaseKind::C3);
}

TEST_CASE("solve_single_question finds the crossing", "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    const double lo = 0.5, hi = 40.0;
    const double xbar = solve_single_question(model, 6.5, 2.0, 20.0, lo, hi);
    const double f1v = f(model, xbar, 6.5, 2.0);
    const double f2v = f(model, xbar, 6.5, 20.0);
    CHECK(std::abs(f1v - f2v) <= 1e-9 * std::max(f1v, f2v));

    const double x1s = x_star(model, 6.5, 2.0, lo, hi);
    const double x2s = x_star(model, 6.5, 20.0, lo, hi);
    CHECK(xbar > x1s);
    CHECK(xbar < x2s);

    // Dense-grid max-min oracle within one grid step.
    auto minf = [&](double x) {
        return std::min(f(model, x, 6.5, 2.0), f(model, x, 6.5, 20.0));
    };
    const double grid = oracles::grid_argmax(minf, x1s, x2s, 1e-5);
    CHECK(std::abs(xbar - grid) <= 1e-5 + 1e-12);

    // Misclassified case: C1 instance has no crossing.
    CHECK_THROWS_AS(solve_single_question(model, 5.5, 4.0, 7.0, 2.0, 10.0),
                    CaseMismatchError);
}

TEST_CASE("continuous solver reproduces the reference instance", "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    const auto sol = solve_continuous(model, 5.5, kGrades, kDomain, kBank);
    CHECK(sol.case_tag == CaseTag::C1);
    CHECK(sol.single_level());
    CHECK(sol.x1 == Approx(5.96).margin(0.01));
    CHECK(sol.lambda == 0.0);
    CHECK(sol.m_star == Approx(137.7).margin(0.2));
    // Value consistency: 1/m* = min_j f_j at the single level.
    const double v = std::min(f(model, sol.x1, 5.5, 4.0),
                              f(model, sol.x1, 5.5, 7.0));
    CHECK(1.0 / sol.m_star == Approx(v).margin(1e-10));
}

TEST_CASE("continuous solver case C2", "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    const auto sol = solve_continuous(model, 4.2, kGrades, kDomain, kBank);
    CHECK(sol.case_tag == CaseTag::C2);
    CHECK(sol.single_level());
    CHECK(sol.lambda == 1.0);
    const double x1s = x_star(model, 4.2, 4.0, kBank);
    CHECK(sol.x1 == Approx(x1s).epsilon(1e-12));
}

TEST_CASE("continuous solver case C3 on a wide instance", "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    const GradeScheme grades(std::vector<double>{2.0, 20.0});
    const AbilityDomain domain(0.5, 45.0);
    const auto bank = QuestionBank::interval(0.5, 40.0);
    const auto sol = solve_continuous(model, 6.5, grades, domain, bank);
    CHECK(sol.case_tag == CaseTag::C3Single);
    CHECK(sol.single_level());
    CHECK(sol.lambda > 0.0);
    CHECK(sol.lambda < 1.0);
    const double f1v = f(model, sol.x1, 6.5, 2.0);
    const double f2v = f(model, sol.x1, 6.5, 20.0);
    CHECK(std::abs(f1v - f2v) <= 1e-8 * std::max(f1v, f2v));
    CHECK(sol.m_star == Approx(1.0 / f1v).epsilon(1e-9));
}

TEST_CASE("degenerate ability near a threshold is refused", "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    CHECK_THROWS_AS(
        solve_continuous(model, 7.0 + 1e-12, kGrades, kDomain, kBank),
        DegenerateAbilityError);
    CHECK_THROWS_AS(
        solve_continuous(model, 4.0 - 1e-11, kGrades, kDomain, kBank),
        DegenerateAbilityError);
}

TEST_CASE("restricted single-question mode is free for the ratio family",
          "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    for (double p : {4.3, 5.5, 6.8, 8.2}) {
        const auto exact = solve_continuous(model, p, kGrades, kDomain, kBank,
                                            SolveMode::Exact);
        const auto restricted = solve_continuous(
            model, p, kGrades, kDomain, kBank, SolveMode::RestrictedSingle);
        CHECK(restricted.restricted_gap == 0.0);
        CHECK(restricted.m_star == exact.m_star);
        CHECK(restricted.x1 == exact.x1);
    }
}

TEST_CASE("Sion interchange holds for ratio C3 instances", "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    const double lo = 0.5, hi = 40.0;
    const struct {
        double p, u1, u2;
    } cases[] = {{6.5, 2.0, 20.0}, {6.4, 2.0, 20.0}, {13.0, 4.0, 40.0}};
    for (const auto& c : cases) {
        REQUIRE(classify_case(model, c.p, c.u1, c.u2,
                              QuestionBank::interval(lo, hi)) == CaseKind::C3);
        const double xbar =
            solve_single_question(model, c.p, c.u1, c.u2, lo, hi);
        const double supinf = f(model, xbar, c.p, c.u1);

        // inf over lambda of sup over x, by ternary search on the convex
        // dual value function.
        auto dual_value = [&](double lambda) {
            auto mix = [&](double x) {
                return lambda * f(model, x, c.p, c.u1) +
                       (1.0 - lambda) * f(model, x, c.p, c.u2);
            };
            return mix(golden_max(mix, lo, hi, 1e-12));
        };
        double a = 0.0, b = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double m1 = a + (b - a) / 3.0;
            const double m2 = b - (b - a) / 3.0;
            if (dual_value(m1) < dual_value(m2))
                b = m2;
            else
                a = m1;
        }
        const double infsup = dual_value(0.5 * (a + b));
        CHECK(infsup == Approx(supinf).margin(1e-8));
    }
}

TEST_CASE("grid fallback equals solve_finite on the same grid", "[lower_bound]") {
    // Custom model (no structural guarantees): C3 routes through the grid LP.
    const auto model = ResponseModel::custom(
        [](double x, double p) { return p / (p + x); });
    const GradeScheme grades(std::vector<double>{2.0, 20.0});
    const AbilityDomain domain(0.5, 45.0);
    const auto bank = QuestionBank::interval(0.5, 40.0);
    const auto sol = solve_continuous(model, 6.5, grades, domain, bank);
    CHECK(sol.case_tag == CaseTag::C3TwoLevel);
    // The same function through the ratio closed forms: values agree.
    const auto exact = solve_continuous(ResponseModel::ratio(), 6.5, grades,
                                        domain, bank);
    CHECK(sol.m_star == Approx(exact.m_star).epsilon(1e-6));
}

TEST_CASE("restricted mode on a finite bank reports the single-level gap",
          "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    // Coarse bank straddling the index crossing of a wide C3 bracket: the
    // exact plan must mix the two levels.
    const GradeScheme grades(std::vector<double>{2.0, 20.0});
    const AbilityDomain domain(0.5, 45.0);
    const auto bank = QuestionBank::finite({5.0, 11.0});
    const auto exact = solve_bank(model, 6.5, grades, domain, bank);
    REQUIRE_FALSE(exact.single_level());

    const auto restricted = solve_bank(model, 6.5, grades, domain, bank,
                                       SolveMode::RestrictedSingle);
    CHECK(restricted.single_level());
    CHECK(restricted.restricted_gap > 0.0);
    // Independent value: best single separator over the bank.
    double best = 0.0;
    for (double level : bank.levels())
        best = std::max(best, std::min(f(model, level, 6.5, 2.0),
                                       f(model, level, 6.5, 20.0)));
    CHECK(restricted.m_star == Approx(1.0 / best).epsilon(1e-12));
    CHECK(restricted.restricted_gap ==
          Approx(restricted.m_star - exact.m_star).epsilon(1e-12));

    // Exact mode on a single-level-optimal instance: restriction is free.
    const auto free_case = solve_bank(model, 5.5, kGrades, kDomain,
                                      QuestionBank::finite({3.0, 9.0}),
                                      SolveMode::RestrictedSingle);
    CHECK(free_case.restricted_gap == 0.0);
}

TEST_CASE("m_star: finite grid converges to the continuous value",
          "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    const double cont = m_star(model, 5.5, kGrades, kDomain, kBank);
    double prev_err = 1e9;
    for (int n : {9, 33, 129}) {
        std::vector<double> levels(n);
        for (int i = 0; i < n; ++i)
            levels[i] = 2.0 + 8.0 * i / (n - 1);
        const auto fin = m_star(model, 5.5, kGrades, kDomain,
                                QuestionBank::finite(levels));
        const double err = std::abs(fin - cont);
        CHECK(err <= prev_err + 1e-12);
        prev_err = err;
    }
    CHECK(prev_err < 1e-3 * cont);
    CHECK(cont > 0.0);

    // Scaled form.
    const double scaled = m_star_scaled(model, 5.5, kGrades, kDomain, kBank, 0.1);
    CHECK(scaled == Approx(cont * std::log(1.0 / 0.24)).epsilon(1e-12));
}

TEST_CASE("derivative ratio strictly decreasing between the peaks",
          "[lower_bound]") {
    const auto model = ResponseModel::ratio();
    const double x1s = x_star(model, 6.5, 2.0, 0.5, 40.0);
    const double x2s = x_star(model, 6.5, 20.0, 0.5, 40.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double x = x1s + 1e-3; x < x2s - 1e-3; x += 1e-3) {
        const double ratio = f_prime(model, x, 6.5, 2.0) /
                             f_prime(model, x, 6.5, 20.0);
        CHECK(ratio < prev);
        prev = ratio;
    }
}
