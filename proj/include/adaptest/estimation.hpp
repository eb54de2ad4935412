#ifndef ADAPTEST_ESTIMATION_HPP
#define ADAPTEST_ESTIMATION_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "adaptest/errors.hpp"
#include "adaptest/optimize.hpp"
#include "adaptest/response_model.hpp"

namespace adaptest {

// Clamp margin keeping the estimate strictly inside the ability domain when
// the unconstrained maximizer escapes (all-correct / all-wrong histories).
inline constexpr double kMleBoundaryEps = 1e-9;

struct HistoryStep {
    double level;
    int outcome;  // 0 or 1
};

// Per-level tally: how often a level was asked and answered correctly.
struct LevelCount {
    std::int64_t asked = 0;
    std::int64_t correct = 0;
};

/**
 * Question/response record with per-level aggregates (the empirical
 * allocation measure). Likelihood evaluations run over the distinct levels,
 * not the raw step sequence.
 */
class History {
public:
    void push(double level, int outcome) {
        if (outcome != 0 && outcome != 1)
            throw InvalidOutcomeError("History: outcome must be 0 or 1");
        steps_.push_back({level, outcome});
        auto& cell = counts_[level];
        ++cell.asked;
        cell.correct += outcome;
        successes_ += outcome;
    }

    const std::vector<HistoryStep>& steps() const { return steps_; }
    const std::map<double, LevelCount>& counts() const { return counts_; }
    std::int64_t size() const { return static_cast<std::int64_t>(steps_.size()); }
    std::int64_t successes() const { return successes_; }
    bool empty() const { return steps_.empty(); }

private:
    std::vector<HistoryStep> steps_;
    std::map<double, LevelCount> counts_;
    std::int64_t successes_ = 0;
};

inline double log_likelihood(const ResponseModel& model, const History& history,
                             double p) {
    double ll = 0.0;
    for (const auto& [level, cnt] : history.counts()) {
        const double hv =
            std::clamp(model.h(level, p), kProbClamp, 1.0 - kProbClamp);
        ll += static_cast<double>(cnt.correct) * std::log(hv) +
              static_cast<double>(cnt.asked - cnt.correct) * std::log(1.0 - hv);
    }
    return ll;
}

struct MleResult {
    double p_hat = 0.0;
    bool clamped_low = false;
    bool clamped_high = false;

    bool clamped() const { return clamped_low || clamped_high; }
};

namespace detail {

// Sum of response probabilities across the history at ability p; strictly
// increasing in p. The score equation for the ratio family sets it equal to
// the observed success count.
inline double expected_successes(const ResponseModel& model,
                                 const History& history, double p) {
    double total = 0.0;
    for (const auto& [level, cnt] : history.counts())
        total += static_cast<double>(cnt.asked) * model.h(level, p);
    return total;
}

}  // namespace detail

/**
 * Maximum-likelihood ability estimate.
 *
 * Ratio kind: the score equation reduces to matching the expected number of
 * correct answers, sum_j h(X_j, p) = sum_j I_j, solved by monotone bisection.
 * Other kinds: golden-section maximization of the (strictly quasi-concave)
 * log-likelihood. Estimates escaping the domain are clamped just inside it
 * and flagged.
 */
inline MleResult mle(const ResponseModel& model, const History& history,
                     const AbilityDomain& domain) {
    if (history.empty())
        throw InvalidOutcomeError("mle: empty history");
    const double lo = domain.p_lo + kMleBoundaryEps;
    const double hi = domain.p_hi - kMleBoundaryEps;

    MleResult result;
    if (model.kind() == ModelKind::Ratio) {
        const double target = static_cast<double>(history.successes());
        if (detail::expected_successes(model, history, lo) >= target) {
            result.p_hat = lo;
            result.clamped_low = true;
            return result;
        }
        if (detail::expected_successes(model, history, hi) <= target) {
            result.p_hat = hi;
            result.clamped_high = true;
            return result;
        }
        result.p_hat = bisect_increasing(
            [&](double p) {
                return detail::expected_successes(model, history, p) - target;
            },
            lo, hi);
        return result;
    }

    auto ll = [&](double p) { return log_likelihood(model, history, p); };
    double p_hat = golden_max(ll, lo, hi, 1e-6);
    // The peak is flat at double precision: near the maximum, likelihood
    // differences fall under rounding noise, so value comparisons alone
    // stall around 1e-6. Polish by bisecting the sign of a symmetric
    // difference, which tracks the score to a much finer resolution.
    {
        const double step = 1e-5 * std::max(1.0, std::abs(p_hat));
        double a = std::max(lo, p_hat - 1e-3);
        double b = std::min(hi, p_hat + 1e-3);
        auto slope = [&](double p) {
            const double s = std::min({step, p - lo, hi - p});
            if (s <= 0.0) return 0.0;
            return ll(p + s) - ll(p - s);
        };
        if (slope(a) > 0.0 && slope(b) < 0.0) {
            for (int it = 0; it < 100 && (b - a) > 1e-10; ++it) {
                const double mid = 0.5 * (a + b);
                if (slope(mid) > 0.0)
                    a = mid;
                else
                    b = mid;
            }
            p_hat = 0.5 * (a + b);
        }
    }
    result.p_hat = p_hat;
    // Flag boundary crowding of the quasi-concave maximizer.
    if (result.p_hat - lo < 1e-6) {
        result.p_hat = lo;
        result.clamped_low = true;
    } else if (hi - result.p_hat < 1e-6) {
        result.p_hat = hi;
        result.clamped_high = true;
    }
    return result;
}

/**
 * Ability matching the observed success rate at a single level:
 * h(level, p) = S/N, clamped to the domain. S = 0 and S = N map to the
 * domain edges.
 */
inline double per_level_mle(const ResponseModel& model, double level,
                            std::int64_t successes, std::int64_t asked,
                            const AbilityDomain& domain) {
    if (asked < 1)
        throw InvalidOutcomeError("per_level_mle: needs at least one response");
    if (successes < 0 || successes > asked)
        throw InvalidOutcomeError("per_level_mle: successes out of range");
    const double lo = domain.p_lo + kMleBoundaryEps;
    const double hi = domain.p_hi - kMleBoundaryEps;
    const double target =
        static_cast<double>(successes) / static_cast<double>(asked);
    if (model.h(level, lo) >= target) return lo;
    if (model.h(level, hi) <= target) return hi;
    return bisect_increasing(
        [&](double p) { return model.h(level, p) - target; }, lo, hi);
}

}  // namespace adaptest

#endif  // ADAPTEST_ESTIMATION_HPP
