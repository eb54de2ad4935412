#ifndef ADAPTEST_SIMULATOR_HPP
#define ADAPTEST_SIMULATOR_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "adaptest/engine.hpp"
#include "adaptest/errors.hpp"
#include "adaptest/rng.hpp"

namespace adaptest {

enum class StartPolicy { Easy, Oracle, Hard, Explicit };

inline const char* to_string(StartPolicy s) {
    switch (s) {
        case StartPolicy::Easy: return "easy";
        case StartPolicy::Oracle: return "oracle";
        case StartPolicy::Hard: return "hard";
        case StartPolicy::Explicit: return "explicit";
    }
    return "?";
}

/**
 * Full description of a simulated experiment: the candidate model, the
 * grading instance, the stopping configuration, and the replication plan.
 */
struct ExperimentSpec {
    ResponseModel model = ResponseModel::ratio();
    GradeScheme grades{std::vector<double>{4.0, 7.0, 10.0}};
    AbilityDomain domain{1.0, 14.0};
    QuestionBank bank = QuestionBank::interval(2.0, 10.0);
    double p_true = 5.5;
    double delta = 0.01;
    std::int64_t replications = 1;
    std::uint64_t seed = 1;
    StartPolicy start = StartPolicy::Easy;
    double start_level_value = 0.0;  // used when start == Explicit
    SolveMode mode = SolveMode::Exact;
    SolvePolicy policy = SolvePolicy::Auto;
    std::int64_t t_max = 1'000'000;
    double stopping_alpha = 2.0;
    double stopping_c = 3.2898681336964528;
    // Mean-hardness paths are tracked up to this many steps.
    std::int64_t path_horizon = 500;
    int threads = 0;  // 0: hardware concurrency

    double start_level() const {
        switch (start) {
            case StartPolicy::Easy: return bank.lo();
            case StartPolicy::Hard: return bank.hi();
            case StartPolicy::Oracle: {
                const auto plan = oracle_plan(model, p_true, grades, domain, bank);
                return plan.x1;
            }
            case StartPolicy::Explicit: return start_level_value;
        }
        return bank.lo();
    }

    StoppingConfig stopping() const {
        StoppingConfig cfg;
        cfg.delta = delta;
        cfg.alpha = stopping_alpha;
        cfg.c = stopping_c;
        cfg.t_max = t_max;
        return cfg;
    }
};

// One Bernoulli response of a candidate with ability p_true.
inline int simulate_response(const ResponseModel& model, double p_true,
                             double level, Rng& rng) {
    return rng.bernoulli(model.h(level, p_true)) ? 1 : 0;
}

struct Transcript {
    std::vector<StepRecord> steps;
    std::int64_t tau = 0;
    std::size_t verdict = 0;
    std::size_t true_bracket = 0;
    bool inconclusive = false;
    bool correct = false;
    std::uint64_t seed = 0;
};

/**
 * Drive one session to termination against a simulated candidate. The plan
 * randomization and the responses use two streams derived from the seed, so
 * a seed pins the entire transcript.
 */
inline Transcript run_session(const ExperimentSpec& spec, std::uint64_t seed) {
    Session session(spec.model, spec.grades, spec.domain, spec.bank,
                    spec.stopping(), seed, spec.start_level(), spec.policy,
                    /*record_steps=*/true, spec.mode);
    Rng responses = Rng::derive(seed, 1);
    while (!session.state().stopped) {
        const double level = session.next_question();
        const int outcome =
            simulate_response(spec.model, spec.p_true, level, responses);
        session.record_response(level, outcome);
    }
    Transcript tr;
    tr.steps = session.records();
    tr.tau = session.state().t;
    tr.verdict = *session.state().verdict;
    tr.true_bracket = spec.grades.bracket_index(spec.p_true, spec.domain);
    tr.inconclusive = session.state().inconclusive;
    tr.correct = !tr.inconclusive && tr.verdict == tr.true_bracket;
    tr.seed = seed;
    return tr;
}

// Per-replication summary row (one CSV line each).
struct ReplicationRow {
    std::uint64_t seed = 0;
    std::int64_t tau = 0;
    std::size_t verdict = 0;
    bool correct = false;
    bool inconclusive = false;
};

/**
 * Monte Carlo aggregates. Counts are integers and the floating-point
 * reductions run in replication order, so results are identical whatever
 * the thread count.
 */
struct ExperimentResult {
    std::int64_t replications = 0;
    std::int64_t errors = 0;
    std::int64_t inconclusive = 0;
    double error_rate = 0.0;
    double tau_mean = 0.0;
    double tau_median = 0.0;
    double tau_stddev = 0.0;
    // mean(tau) / ln(1/(2.4 delta)), the finite-delta analogue of the
    // quantity whose limit is m*.
    double tau_ratio = 0.0;
    double m_star = 0.0;
    double m_star_scaled = 0.0;
    double delta = 0.0;
    std::size_t true_bracket = 0;
    std::uint64_t master_seed = 0;
    std::vector<ReplicationRow> rows;
    std::vector<double> mean_hardness_path;  // mean level asked at step t
    std::vector<std::int64_t> path_support;  // sessions still running at step t
    std::map<double, std::int64_t> allocation;
};

namespace detail {

struct RepOutcome {
    std::int64_t tau = 0;
    std::size_t verdict = 0;
    bool error = false;
    bool inconclusive = false;
    std::vector<double> levels;  // truncated at path_horizon
    std::map<double, std::int64_t> allocation;
};

inline RepOutcome run_replication(const ExperimentSpec& spec,
                                  std::uint64_t seed) {
    Session session(spec.model, spec.grades, spec.domain, spec.bank,
                    spec.stopping(), seed, spec.start_level(), spec.policy,
                    /*record_steps=*/false, spec.mode);
    Rng responses = Rng::derive(seed, 1);
    RepOutcome out;
    out.levels.reserve(static_cast<std::size_t>(
        std::min<std::int64_t>(spec.path_horizon, 4096)));
    while (!session.state().stopped) {
        const double level = session.next_question();
        const int outcome =
            simulate_response(spec.model, spec.p_true, level, responses);
        session.record_response(level, outcome);
        if (session.state().t <= spec.path_horizon) out.levels.push_back(level);
        ++out.allocation[level];
    }
    out.tau = session.state().t;
    out.verdict = *session.state().verdict;
    out.inconclusive = session.state().inconclusive;
    const std::size_t truth =
        spec.grades.bracket_index(spec.p_true, spec.domain);
    out.error = out.verdict != truth;
    return out;
}

}  // namespace detail

/**
 * Independent seeded replications of the experiment, run across threads,
 * aggregated deterministically. Per-replication seeds come from a splittable
 * derivation of the master seed, so the stream of any replication does not
 * depend on scheduling.
 */
inline ExperimentResult run_monte_carlo(const ExperimentSpec& spec) {
    if (spec.replications < 1)
        throw ConfigError("run_monte_carlo: replications must be >= 1");
    const std::size_t n = static_cast<std::size_t>(spec.replications);

    std::vector<std::uint64_t> seeds(n);
    for (std::size_t r = 0; r < n; ++r)
        seeds[r] = Rng::derive(spec.seed, r).seed();

    std::vector<detail::RepOutcome> outcomes(n);
    int threads = spec.threads > 0
                      ? spec.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min<int>(threads, static_cast<int>(n));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        try {
            for (std::size_t r = next.fetch_add(1); r < n;
                 r = next.fetch_add(1))
                outcomes[r] = detail::run_replication(spec, seeds[r]);
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResult res;
    res.replications = spec.replications;
    res.delta = spec.delta;
    res.master_seed = spec.seed;
    res.true_bracket = spec.grades.bracket_index(spec.p_true, spec.domain);
    res.rows.reserve(n);

    std::vector<double> path_sum;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& o = outcomes[r];
        res.errors += o.error ? 1 : 0;
        res.inconclusive += o.inconclusive ? 1 : 0;
        res.rows.push_back(
            {seeds[r], o.tau, o.verdict, !o.error && !o.inconclusive,
             o.inconclusive});
        if (path_sum.size() < o.levels.size()) {
            path_sum.resize(o.levels.size(), 0.0);
            res.path_support.resize(o.levels.size(), 0);
        }
        for (std::size_t t = 0; t < o.levels.size(); ++t) {
            path_sum[t] += o.levels[t];
            ++res.path_support[t];
        }
        for (const auto& [level, count] : o.allocation)
            res.allocation[level] += count;
    }
    res.error_rate =
        static_cast<double>(res.errors) / static_cast<double>(res.replications);

    double sum = 0.0;
    for (const auto& row : res.rows) sum += static_cast<double>(row.tau);
    res.tau_mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (const auto& row : res.rows) {
        const double d = static_cast<double>(row.tau) - res.tau_mean;
        sq += d * d;
    }
    res.tau_stddev = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    std::vector<std::int64_t> sorted;
    sorted.reserve(n);
    for (const auto& row : res.rows) sorted.push_back(row.tau);
    std::sort(sorted.begin(), sorted.end());
    res.tau_median =
        (n % 2 == 1)
            ? static_cast<double>(sorted[n / 2])
            : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
    res.tau_ratio = res.tau_mean / std::log(1.0 / (2.4 * spec.delta));

    const auto lb = oracle_plan(spec.model, spec.p_true, spec.grades,
                                spec.domain, spec.bank);
    res.m_star = lb.m_star;
    res.m_star_scaled = lb.scaled(spec.delta);

    res.mean_hardness_path.resize(path_sum.size());
    for (std::size_t t = 0; t < path_sum.size(); ++t)
        res.mean_hardness_path[t] =
            path_sum[t] / static_cast<double>(res.path_support[t]);
    return res;
}

/**
 * The three-start exploration study: easy, oracle, and hard first questions,
 * mean hardness per step. Replication r uses the same seed under all three
 * policies (paired comparison), so path differences reflect the start level
 * rather than independent noise.
 */
struct ExplorationResult {
    std::vector<double> easy;
    std::vector<double> oracle;
    std::vector<double> hard;
    double easy_start = 0.0;
    double oracle_start = 0.0;
    double hard_start = 0.0;
    std::int64_t replications = 0;
    double delta = 0.0;
    std::uint64_t master_seed = 0;
};

inline ExplorationResult run_exploration_experiment(ExperimentSpec spec) {
    ExplorationResult out;
    out.replications = spec.replications;
    out.delta = spec.delta;
    out.master_seed = spec.seed;

    ExperimentSpec easy = spec;
    easy.start = StartPolicy::Easy;
    ExperimentSpec oracle = spec;
    oracle.start = StartPolicy::Oracle;
    ExperimentSpec hard = spec;
    hard.start = StartPolicy::Hard;

    out.easy_start = easy.start_level();
    out.oracle_start = oracle.start_level();
    out.hard_start = hard.start_level();

    auto mean_path = [&](const ExperimentSpec& s) {
        return run_monte_carlo(s).mean_hardness_path;
    };
    out.easy = mean_path(easy);
    out.oracle = mean_path(oracle);
    out.hard = mean_path(hard);
    return out;
}

}  // namespace adaptest

#endif  // ADAPTEST_SIMULATOR_HPP
