#ifndef ADAPTEST_IO_HPP
#define ADAPTEST_IO_HPP

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "adaptest/engine.hpp"
#include "adaptest/lower_bound.hpp"
#include "adaptest/simulator.hpp"

namespace adaptest {

using json = nlohmann::json;

// Shortest round-trip decimal form; keeps CSV/JSONL output byte-stable.
inline std::string number_repr(double v) {
    char buf[32];
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // Trim to the shortest representation that still round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        char shorter[32];
        std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(shorter, "%lf", &back);
        if (back == v) return shorter;
    }
    return buf;
}

inline json to_json(const LowerBoundSolution& sol) {
    return json{{"m_star", sol.m_star},
                {"x1", sol.x1},
                {"x2", sol.x2},
                {"w", sol.w},
                {"lambda", sol.lambda},
                {"case", to_string(sol.case_tag)},
                {"restricted_gap", sol.restricted_gap}};
}

inline json to_json(const StepRecord& rec) {
    return json{{"t", rec.t},         {"level", rec.level},
                {"outcome", rec.outcome}, {"p_hat", rec.p_hat},
                {"glr", rec.glr},     {"beta", rec.beta}};
}

// Session transcript as JSON lines: one record per step, then a final
// record carrying the verdict and tau.
inline std::string transcript_jsonl(const Transcript& tr) {
    std::ostringstream out;
    for (const auto& rec : tr.steps) out << to_json(rec).dump() << "\n";
    json footer{{"tau", tr.tau},
                {"verdict", tr.verdict},
                {"inconclusive", tr.inconclusive},
                {"seed", tr.seed}};
    out << footer.dump() << "\n";
    return out.str();
}

inline json session_state_to_json(const SessionState& st) {
    json steps = json::array();
    for (const auto& s : st.history.steps())
        steps.push_back(json{{"level", s.level}, {"outcome", s.outcome}});
    json j{{"steps", steps},
           {"t", st.t},
           {"p_hat", st.est.p_hat},
           {"clamped_low", st.est.clamped_low},
           {"clamped_high", st.est.clamped_high},
           {"bracket", st.bracket},
           {"glr", st.glr},
           {"beta", st.beta},
           {"stopped", st.stopped},
           {"inconclusive", st.inconclusive},
           {"degenerate_fallbacks", st.degenerate_fallbacks},
           {"rng_seed", st.rng_seed},
           {"rng_state", st.rng.state()}};
    if (st.verdict) j["verdict"] = *st.verdict;
    if (st.plan) j["plan"] = to_json(*st.plan);
    return j;
}

inline SessionState session_state_from_json(const json& j) {
    SessionState st;
    for (const auto& s : j.at("steps"))
        st.history.push(s.at("level").get<double>(), s.at("outcome").get<int>());
    st.t = j.at("t").get<std::int64_t>();
    st.est.p_hat = j.at("p_hat").get<double>();
    st.est.clamped_low = j.at("clamped_low").get<bool>();
    st.est.clamped_high = j.at("clamped_high").get<bool>();
    st.bracket = j.at("bracket").get<std::size_t>();
    st.glr = j.at("glr").get<double>();
    st.beta = j.at("beta").get<double>();
    st.stopped = j.at("stopped").get<bool>();
    st.inconclusive = j.at("inconclusive").get<bool>();
    st.degenerate_fallbacks = j.at("degenerate_fallbacks").get<std::int64_t>();
    st.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    st.rng = Rng(st.rng_seed);
    st.rng.set_state(j.at("rng_state").get<std::array<std::uint64_t, 4>>());
    if (j.contains("verdict")) st.verdict = j.at("verdict").get<std::size_t>();
    if (j.contains("plan")) {
        const auto& p = j.at("plan");
        LowerBoundSolution sol;
        sol.m_star = p.at("m_star").get<double>();
        sol.x1 = p.at("x1").get<double>();
        sol.x2 = p.at("x2").get<double>();
        sol.w = p.at("w").get<double>();
        sol.lambda = p.at("lambda").get<double>();
        sol.restricted_gap = p.at("restricted_gap").get<double>();
        const std::string tag = p.at("case").get<std::string>();
        if (tag == "C1") sol.case_tag = CaseTag::C1;
        else if (tag == "C2") sol.case_tag = CaseTag::C2;
        else if (tag == "C3_single") sol.case_tag = CaseTag::C3Single;
        else if (tag == "C3_two_level") sol.case_tag = CaseTag::C3TwoLevel;
        else sol.case_tag = CaseTag::FiniteLP;
        st.plan = sol;
    }
    return st;
}

// One row per replication.
inline std::string sessions_csv(const ExperimentResult& res) {
    std::ostringstream out;
    out << "replication,seed,tau,verdict,correct,inconclusive\n";
    for (std::size_t r = 0; r < res.rows.size(); ++r) {
        const auto& row = res.rows[r];
        out << r << "," << row.seed << "," << row.tau << "," << row.verdict
            << "," << (row.correct ? 1 : 0) << ","
            << (row.inconclusive ? 1 : 0) << "\n";
    }
    return out.str();
}

// One row per step of the mean-hardness path.
inline std::string path_csv(const ExperimentResult& res) {
    std::ostringstream out;
    out << "step,mean_hardness,sessions\n";
    for (std::size_t t = 0; t < res.mean_hardness_path.size(); ++t)
        out << (t + 1) << "," << number_repr(res.mean_hardness_path[t]) << ","
            << res.path_support[t] << "\n";
    return out.str();
}

// Three-path schema of the exploration study.
inline std::string exploration_csv(const ExplorationResult& res) {
    std::ostringstream out;
    out << "step,easy,oracle,hard\n";
    const std::size_t n = std::min(
        {res.easy.size(), res.oracle.size(), res.hard.size()});
    for (std::size_t t = 0; t < n; ++t)
        out << (t + 1) << "," << number_repr(res.easy[t]) << ","
            << number_repr(res.oracle[t]) << "," << number_repr(res.hard[t])
            << "\n";
    return out.str();
}

inline json to_json(const ExperimentResult& res) {
    json alloc = json::array();
    for (const auto& [level, count] : res.allocation)
        alloc.push_back(json{{"level", level}, {"count", count}});
    json seeds = json::array();
    for (const auto& row : res.rows) seeds.push_back(row.seed);
    return json{{"replications", res.replications},
                {"errors", res.errors},
                {"inconclusive", res.inconclusive},
                {"error_rate", res.error_rate},
                {"tau_mean", res.tau_mean},
                {"tau_median", res.tau_median},
                {"tau_stddev", res.tau_stddev},
                {"tau_ratio", res.tau_ratio},
                {"m_star", res.m_star},
                {"m_star_scaled", res.m_star_scaled},
                {"delta", res.delta},
                {"true_bracket", res.true_bracket},
                {"master_seed", res.master_seed},
                {"seeds", seeds},
                {"allocation", alloc}};
}

inline json to_json(const ExplorationResult& res) {
    return json{{"replications", res.replications},
                {"delta", res.delta},
                {"master_seed", res.master_seed},
                {"easy_start", res.easy_start},
                {"oracle_start", res.oracle_start},
                {"hard_start", res.hard_start},
                {"steps", res.easy.size()}};
}

}  // namespace adaptest

#endif  // ADAPTEST_IO_HPP
