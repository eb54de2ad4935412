#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "adaptest/io.hpp"
#include "adaptest/simulator.hpp"

using namespace adaptest;

namespace {

ExperimentSpec reference_spec() {
    ExperimentSpec spec;  // ratio model, grades {4,7,10}, bank [2,10]
    spec.p_true = 5.5;
    spec.delta = 0.1;
    spec.seed = 2027;
    spec.policy = SolvePolicy::Grid;
    spec.threads = 2;
    return spec;
}

}  // namespace

TEST_CASE("simulated responses match the response probability", "[simulator]") {
    const auto model = ResponseModel::ratio();
    Rng rng(5);
    // Symmetric point: h = 1/2.
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ones += simulate_response(model, 5.5, 5.5, rng);
    const double sigma = 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(ones / static_cast<double>(n) - 0.5) <= 3.0 * sigma);

    // Asymmetric point within 3 sigma of h.
    const double p_hit = model.h(3.0, 5.5);
    ones = 0;
    for (int i = 0; i < n; ++i) ones += simulate_response(model, 5.5, 3.0, rng);
    const double sd = std::sqrt(p_hit * (1.0 - p_hit) / n);
    CHECK(std::abs(ones / static_cast<double>(n) - p_hit) <= 3.0 * sd);

    // Seeded determinism.
    Rng a(77), b(77);
    for (int i = 0; i < 1000; ++i)
        CHECK(simulate_response(model, 5.5, 4.0, a) ==
              simulate_response(model, 5.5, 4.0, b));
}

TEST_CASE("run_session terminates with a sensible transcript", "[simulator]") {
    ExperimentSpec spec = reference_spec();
    const auto tr = run_session(spec, 31);
    CHECK(tr.tau >= 1);
    CHECK(tr.steps.size() == static_cast<std::size_t>(tr.tau));
    CHECK(tr.true_bracket == 1);  // 5.5 in [4,7)
    CHECK_FALSE(tr.inconclusive);

    // Replaying the recorded outcomes reproduces levels and verdict.
    Session replay(spec.model, spec.grades, spec.domain, spec.bank,
                   spec.stopping(), 31, spec.start_level(), spec.policy);
    for (const auto& step : tr.steps) {
        const double level = replay.next_question();
        CHECK(level == Approx(step.level));
        replay.record_response(level, step.outcome);
    }
    REQUIRE(replay.state().stopped);
    CHECK(replay.state().verdict.value() == tr.verdict);
    CHECK(replay.state().t == tr.tau);
}

TEST_CASE("monte carlo with one replication reduces to run_session",
          "[simulator]") {
    ExperimentSpec spec = reference_spec();
    spec.replications = 1;
    const auto res = run_monte_carlo(spec);
    const auto tr = run_session(spec, res.rows[0].seed);
    CHECK(res.rows.size() == 1);
    CHECK(res.rows[0].tau == tr.tau);
    CHECK(res.rows[0].verdict == tr.verdict);
    CHECK(res.tau_mean == Approx(static_cast<double>(tr.tau)));
    CHECK(res.tau_median == res.tau_mean);
}

TEST_CASE("monte carlo aggregates are thread-count invariant", "[simulator]") {
    ExperimentSpec spec = reference_spec();
    spec.replications = 12;
    spec.delta = 0.25;
    spec.threads = 1;
    const auto serial = run_monte_carlo(spec);
    spec.threads = 4;
    const auto parallel = run_monte_carlo(spec);
    CHECK(to_json(serial) == to_json(parallel));
    CHECK(sessions_csv(serial) == sessions_csv(parallel));
    CHECK(path_csv(serial) == path_csv(parallel));

    // Integer aggregates are permutation invariant outright.
    std::int64_t total_alloc = 0;
    for (const auto& [level, count] : serial.allocation) total_alloc += count;
    std::int64_t total_tau = 0;
    for (const auto& row : serial.rows) total_tau += row.tau;
    CHECK(total_alloc == total_tau);
}

TEST_CASE("restricted single-question mode changes nothing for ratio models",
          "[simulator]") {
    ExperimentSpec exact = reference_spec();
    exact.replications = 6;
    exact.delta = 0.25;
    exact.policy = SolvePolicy::Continuous;
    exact.t_max = 300;  // horizon-capped: only the played levels matter here
    exact.path_horizon = 300;
    ExperimentSpec restricted = exact;
    restricted.mode = SolveMode::RestrictedSingle;
    const auto a = run_monte_carlo(exact);
    const auto b = run_monte_carlo(restricted);
    CHECK(to_json(a) == to_json(b));
    CHECK(path_csv(a) == path_csv(b));
}

TEST_CASE("allocation concentrates at the oracle level", "[simulator]") {
    // One long session on the reference C1 instance: after the burn-in the
    // plug-in plan should pin the near-optimal grid level.
    ExperimentSpec spec = reference_spec();
    spec.delta = 0.01;
    Session session(spec.model, spec.grades, spec.domain, spec.bank,
                    spec.stopping(), 4242, spec.start_level(), SolvePolicy::Grid,
                    true);
    Rng responses = Rng::derive(4242, 1);
    while (!session.state().stopped) {
        const double level = session.next_question();
        session.record_response(
            level, simulate_response(spec.model, spec.p_true, level, responses));
    }
    const auto& steps = session.records();
    REQUIRE(steps.size() > 200);
    const double oracle =
        oracle_plan(spec.model, spec.p_true, spec.grades, spec.domain, spec.bank)
            .x1;
    const auto& grid = session.working_bank().levels();
    const double spacing = grid[1] - grid[0];
    std::int64_t close = 0, total = 0;
    for (std::size_t t = 100; t < steps.size(); ++t) {
        ++total;
        if (std::abs(steps[t].level - oracle) <= 2.0 * spacing + 1e-9) ++close;
    }
    CHECK(static_cast<double>(close) / static_cast<double>(total) >= 0.9);
}

TEST_CASE("GLR accumulates at rate 1/m* near convergence", "[simulator]") {
    ExperimentSpec spec = reference_spec();
    spec.delta = 1e-3;
    const double rate = 1.0 / oracle_plan(spec.model, spec.p_true, spec.grades,
                                          spec.domain, spec.bank)
                                  .m_star;
    double slope_sum = 0.0;
    int sessions = 0;
    for (std::uint64_t seed : {101, 202, 303}) {
        const auto tr = run_session(spec, seed);
        REQUIRE(tr.tau > 1000);
        const auto& steps = tr.steps;
        const std::size_t half = steps.size() / 2;
        const double slope =
            (steps.back().glr - steps[half].glr) /
            static_cast<double>(steps.size() - 1 - half);
        slope_sum += slope;
        ++sessions;
    }
    const double mean_slope = slope_sum / sessions;
    CHECK(mean_slope == Approx(rate).epsilon(0.2));
}

TEST_CASE("exploration study structure and determinism", "[simulator]") {
    ExperimentSpec spec = reference_spec();
    spec.replications = 8;
    spec.delta = 0.05;
    spec.policy = SolvePolicy::Continuous;
    spec.t_max = 40;
    spec.path_horizon = 40;
    const auto res = run_exploration_experiment(spec);
    CHECK(res.easy.size() == 40);
    CHECK(res.oracle.size() == 40);
    CHECK(res.hard.size() == 40);
    CHECK(res.easy.front() == Approx(spec.bank.lo()));
    CHECK(res.hard.front() == Approx(spec.bank.hi()));
    CHECK(res.oracle.front() == Approx(5.96).margin(0.01));

    const auto res2 = run_exploration_experiment(spec);
    CHECK(exploration_csv(res) == exploration_csv(res2));
}

TEST_CASE("verdicts are overwhelmingly correct at modest delta", "[simulator]") {
    ExperimentSpec spec = reference_spec();
    spec.replications = 40;
    spec.delta = 0.2;
    const auto res = run_monte_carlo(spec);
    CHECK(res.error_rate <= 0.2);
    CHECK(res.inconclusive == 0);
    for (const auto& row : res.rows) CHECK(row.tau >= 1);
    // The empirical cost sits above the information bound.
    CHECK(res.tau_mean >= res.m_star_scaled * 0.5);
}
