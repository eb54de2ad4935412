#ifndef ADAPTEST_ENGINE_HPP
#define ADAPTEST_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "adaptest/errors.hpp"
#include "adaptest/estimation.hpp"
#include "adaptest/grades.hpp"
#include "adaptest/lower_bound.hpp"
#include "adaptest/response_model.hpp"
#include "adaptest/rng.hpp"

namespace adaptest {

/**
 * Stopping-rule parameters. The threshold is
 *   beta(t, delta) = log( c t^alpha / delta * (log(t+1) log(1/delta))^{3m+1} )
 * with m the number of distinct question levels. c defaults to pi^2/3, the
 * constant for which the delta-correctness proof goes through at alpha = 2.
 */
struct StoppingConfig {
    double delta = 0.01;
    double alpha = 2.0;
    double c = 3.2898681336964528;  // pi^2 / 3
    int m = 0;                      // 0: derived from the bank at session start
    std::int64_t t_max = 1'000'000;
};

// Evaluated in log space; the (3m+1) power overflows a double otherwise.
inline double beta_threshold(std::int64_t t, const StoppingConfig& config) {
    if (t < 1) throw Error("beta_threshold: t must be >= 1");
    const double log_inv_delta = std::log(1.0 / config.delta);
    return std::log(config.c) + config.alpha * std::log(static_cast<double>(t)) +
           log_inv_delta +
           (3.0 * config.m + 1.0) *
               (std::log(std::log(static_cast<double>(t) + 1.0)) +
                std::log(log_inv_delta));
}

/**
 * Discretization grid X_delta for an interval bank: equispaced levels with
 * spacing (log(1/delta))^{-1/2}, endpoints included, at least two points.
 */
inline QuestionBank build_grid(const QuestionBank& bank, double delta) {
    if (bank.is_finite()) return bank;
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError("build_grid: delta must be in (0,1)");
    const double lo = bank.lo(), hi = bank.hi();
    if (hi == lo) return QuestionBank::finite({lo});
    const double spacing = 1.0 / std::sqrt(std::log(1.0 / delta));
    std::size_t count =
        static_cast<std::size_t>(std::floor((hi - lo) / spacing)) + 1;
    if (count < 2) count = 2;
    std::vector<double> levels(count);
    for (std::size_t i = 0; i < count; ++i)
        levels[i] = lo + (hi - lo) * static_cast<double>(i) /
                             static_cast<double>(count - 1);
    levels.back() = hi;
    return QuestionBank::finite(std::move(levels));
}

/**
 * Generalized-likelihood-ratio statistic: log-likelihood of the estimate
 * minus the log-likelihood of the most likely bracket-boundary hypothesis.
 * Nonnegative; the session stops once it exceeds beta(t, delta).
 */
inline double glr_statistic(const ResponseModel& model, const History& history,
                            double p_hat, const GradeScheme& grades,
                            const AbilityDomain& domain) {
    const std::size_t idx = grades.bracket_index(p_hat, domain);
    const auto [u_lo, u_hi] = grades.alternatives(idx, domain);
    const double ll_hat = log_likelihood(model, history, p_hat);
    const double stat_lo = ll_hat - log_likelihood(model, history, u_lo);
    const double stat_hi = ll_hat - log_likelihood(model, history, u_hi);
    return std::max(0.0, std::min(stat_lo, stat_hi));
}

// One transcript row; glr and beta are post-response values.
struct StepRecord {
    std::int64_t t = 0;
    double level = 0.0;
    int outcome = 0;
    double p_hat = 0.0;
    double glr = 0.0;
    double beta = 0.0;
};

// How an interval bank is handled when solving the plan each step.
enum class SolvePolicy {
    Auto,        // Continuous for the ratio kind, Grid otherwise
    Continuous,  // solve the program over the full interval (closed forms)
    Grid,        // restrict to the discretization grid X_delta
};

struct SessionState {
    History history;
    MleResult est;
    std::size_t bracket = 0;
    double glr = 0.0;
    double beta = std::numeric_limits<double>::infinity();
    std::int64_t t = 0;
    bool stopped = false;
    bool inconclusive = false;
    std::optional<std::size_t> verdict;
    std::optional<LowerBoundSolution> plan;
    std::int64_t degenerate_fallbacks = 0;
    std::uint64_t rng_seed = 0;
    Rng rng{0};
};

/**
 * The sequential questioning loop: ask at the plug-in optimal plan for the
 * current estimate, re-estimate after each response, stop when the GLR
 * statistic clears the threshold, then announce the bracket.
 *
 * A session is single-threaded; distinct sessions are independent. With a
 * fixed seed the full transcript is reproducible.
 */
class Session {
public:
    Session(ResponseModel model, GradeScheme grades, AbilityDomain domain,
            QuestionBank bank, StoppingConfig config, std::uint64_t seed,
            std::optional<double> start_level = std::nullopt,
            SolvePolicy policy = SolvePolicy::Auto, bool record_steps = false,
            SolveMode mode = SolveMode::Exact)
        : model_(std::move(model)),
          grades_(std::move(grades)),
          domain_(domain),
          bank_(std::move(bank)),
          config_(config),
          mode_(mode),
          record_steps_(record_steps) {
        grades_.validate_against(domain_);
        if (!(config_.delta > 0.0 && config_.delta < 1.0))
            throw ConfigError("Session: delta must be in (0,1)");

        if (policy == SolvePolicy::Auto)
            policy = (bank_.is_finite() || model_.kind() == ModelKind::Ratio)
                         ? SolvePolicy::Continuous
                         : SolvePolicy::Grid;
        if (bank_.is_finite()) {
            working_bank_ = bank_;
            grid_solving_ = true;
        } else if (policy == SolvePolicy::Grid) {
            working_bank_ = build_grid(bank_, config_.delta);
            grid_solving_ = true;
        } else {
            working_bank_ = bank_;
            grid_solving_ = false;
        }
        if (config_.m <= 0)
            config_.m = bank_.is_finite()
                            ? static_cast<int>(bank_.levels().size())
                            : static_cast<int>(
                                  build_grid(bank_, config_.delta).levels().size());

        // Default start: the easiest level. An explicit start is honored
        // verbatim, even off the discretization grid.
        start_level_ = start_level.value_or(bank_.lo());
        if (start_level_ < bank_.lo() - 1e-12 || start_level_ > bank_.hi() + 1e-12)
            throw ConfigError("Session: start level outside the question bank");

        state_.rng_seed = seed;
        state_.rng = Rng(seed);
    }

    const SessionState& state() const { return state_; }
    const std::vector<StepRecord>& records() const { return records_; }
    const StoppingConfig& config() const { return config_; }
    const QuestionBank& working_bank() const { return working_bank_; }

    /**
     * Level of the next question. The first question goes out at the
     * configured start level; afterwards the lower-bound plan at the current
     * estimate is solved and sampled (no randomization when the plan is a
     * single level).
     */
    double next_question() {
        if (state_.stopped) throw Error("next_question: session already stopped");
        if (state_.history.empty()) return start_level_;

        // A clamped estimate sits on the domain edge where the program
        // degenerates; skip straight to the fallback question.
        if (!state_.est.clamped()) {
            try {
                state_.plan = solve_plan(state_.est.p_hat);
                const auto& plan = *state_.plan;
                if (plan.single_level()) return plan.x1;
                return state_.rng.u01() < plan.w ? plan.x1 : plan.x2;
            } catch (const DegenerateAbilityError&) {
            } catch (const InfeasibleSeparationError&) {
            }
        }
        // Estimate indistinguishable from a boundary: the lower-bound
        // program diverges. Ask the most informative question against the
        // nearest grade threshold.
        ++state_.degenerate_fallbacks;
        const double u = grades_.nearest_threshold(state_.est.p_hat);
        double level = std::abs(state_.est.p_hat - u) < 1e-9 * u
                           ? std::clamp(state_.est.p_hat, bank_.lo(), bank_.hi())
                           : x_star(model_, state_.est.p_hat, u, bank_);
        if (grid_solving_) level = working_bank_.nearest(level);
        return level;
    }

    /**
     * Feed one response: append to the history, re-estimate, recompute the
     * GLR statistic, and apply the stopping rule. Hitting t_max stops the
     * session with the current bracket flagged inconclusive.
     */
    const SessionState& record_response(double level, int outcome) {
        if (state_.stopped) throw Error("record_response: session already stopped");
        if (outcome != 0 && outcome != 1)
            throw InvalidOutcomeError("record_response: outcome must be 0 or 1");
        state_.history.push(level, outcome);
        state_.t = state_.history.size();
        state_.est = mle(model_, state_.history, domain_);
        const std::size_t bracket =
            grades_.bracket_index(state_.est.p_hat, domain_);
        if (bracket != state_.bracket || state_.t == 1) {
            state_.bracket = bracket;
            refresh_alternative_cache();
        }
        state_.glr = fast_glr();
        state_.beta = beta_threshold(state_.t, config_);
        if (state_.glr > state_.beta) {
            state_.stopped = true;
            state_.verdict = state_.bracket;
        } else if (state_.t >= config_.t_max) {
            state_.stopped = true;
            state_.inconclusive = true;
            state_.verdict = state_.bracket;
        }
        if (record_steps_)
            records_.push_back({state_.t, level, outcome, state_.est.p_hat,
                                state_.glr, state_.beta});
        return state_;
    }

private:
    // Cached log h / log(1-h) of the two boundary hypotheses at one level.
    struct AltLogs {
        std::pair<double, double> lo;
        std::pair<double, double> hi;
    };

    LowerBoundSolution solve_plan(double p_hat) const {
        if (grid_solving_) {
            // Degeneracy screen only; the alternatives are already cached.
            detail::resolve_bracket(p_hat, grades_, domain_);
            const auto& levels = working_bank_.levels();
            std::vector<double> f1v(levels.size()), f2v(levels.size());
            for (std::size_t i = 0; i < levels.size(); ++i) {
                const double hp = model_.h(levels[i], p_hat);
                const double lhp = std::log(std::clamp(hp, kProbClamp, 1.0 - kProbClamp));
                const double l1mhp =
                    std::log(std::clamp(1.0 - hp, kProbClamp, 1.0 - kProbClamp));
                const AltLogs& alt = alt_logs(levels[i]);
                f1v[i] = hp * (lhp - alt.lo.first) +
                         (1.0 - hp) * (l1mhp - alt.lo.second);
                f2v[i] = hp * (lhp - alt.hi.first) +
                         (1.0 - hp) * (l1mhp - alt.hi.second);
            }
            const LowerBoundSolution exact = solve_finite(f1v, f2v, levels);
            if (mode_ == SolveMode::Exact) return exact;
            return restrict_finite_to_single(exact, f1v, f2v, levels);
        }
        return solve_continuous(model_, p_hat, grades_, domain_, bank_, mode_);
    }

    // Boundary-hypothesis log tables are keyed by level and rebuilt only
    // when the estimate moves to a new bracket.
    void refresh_alternative_cache() { alt_cache_.clear(); }

    const AltLogs& alt_logs(double level) const {
        auto it = alt_cache_.find(level);
        if (it == alt_cache_.end()) {
            const auto [u_lo, u_hi] =
                grades_.alternatives(state_.bracket, domain_);
            it = alt_cache_.emplace(level, AltLogs{log_pair(level, u_lo),
                                                   log_pair(level, u_hi)})
                     .first;
        }
        return it->second;
    }

    std::pair<double, double> log_pair(double level, double u) const {
        const double hv = std::clamp(model_.h(level, u), kProbClamp, 1.0 - kProbClamp);
        return {std::log(hv), std::log(1.0 - hv)};
    }

    double fast_glr() const {
        if (!grid_solving_)
            return glr_statistic(model_, state_.history, state_.est.p_hat,
                                 grades_, domain_);
        // Same statistic, one pass over the per-level tallies with the
        // alternative logs cached.
        double stat_lo = 0.0, stat_hi = 0.0;
        for (const auto& [level, cnt] : state_.history.counts()) {
            const double hp = std::clamp(model_.h(level, state_.est.p_hat),
                                         kProbClamp, 1.0 - kProbClamp);
            const double lhp = std::log(hp);
            const double l1mhp = std::log(1.0 - hp);
            const double s = static_cast<double>(cnt.correct);
            const double nf = static_cast<double>(cnt.asked - cnt.correct);
            const AltLogs& alt = alt_logs(level);
            stat_lo += s * (lhp - alt.lo.first) + nf * (l1mhp - alt.lo.second);
            stat_hi += s * (lhp - alt.hi.first) + nf * (l1mhp - alt.hi.second);
        }
        return std::max(0.0, std::min(stat_lo, stat_hi));
    }

    ResponseModel model_;
    GradeScheme grades_;
    AbilityDomain domain_;
    QuestionBank bank_;
    StoppingConfig config_;
    SolveMode mode_ = SolveMode::Exact;
    QuestionBank working_bank_ = QuestionBank::interval(1.0, 2.0);
    bool grid_solving_ = false;
    bool record_steps_ = false;
    double start_level_ = 0.0;
    mutable std::map<double, AltLogs> alt_cache_;
    SessionState state_;
    std::vector<StepRecord> records_;
};

// Lower-bound plan an oracle knowing the true ability would play; the
// benchmark policy for the simulator.
inline LowerBoundSolution oracle_plan(const ResponseModel& model, double p_true,
                                      const GradeScheme& grades,
                                      const AbilityDomain& domain,
                                      const QuestionBank& bank) {
    return solve_bank(model, p_true, grades, domain, bank);
}

}  // namespace adaptest

#endif  // ADAPTEST_ENGINE_HPP
