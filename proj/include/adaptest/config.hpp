#ifndef ADAPTEST_CONFIG_HPP
#define ADAPTEST_CONFIG_HPP

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptest/errors.hpp"
#include "adaptest/simulator.hpp"

namespace adaptest {

/**
 * Run configuration parsed from a JSON document. Schema (defaults in
 * brackets, unknown keys rejected everywhere):
 *
 * {
 *   "model":    {"kind": "ratio"} | {"kind": "logit", "a": _, "b": _, "c": _},
 *   "domain":   {"p_lo": _, "p_hi": _},
 *   "grades":   [u1, u2, ...],
 *   "bank":     {"kind": "interval", "x_lo": _, "x_hi": _}
 *             | {"kind": "finite", "levels": [...]},
 *   "stopping": {"delta" [0.01], "alpha" [2], "c" [pi^2/3], "t_max" [1e6]},
 *   "experiment": {
 *      "p_true" [5.5], "replications" [1], "seed" [1],
 *      "start" ["easy" | "oracle" | "hard" | number],
 *      "mode" ["exact" | "restricted_single"],
 *      "policy" ["auto" | "continuous" | "grid"],
 *      "path_horizon" [500], "threads" [0]
 *   }
 * }
 */
struct RunConfig {
    ExperimentSpec spec;

    StoppingConfig stopping() const { return spec.stopping(); }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj,
                           const std::set<std::string>& allowed,
                           const std::string& where) {
    if (!obj.is_object())
        throw ConfigError("config: " + where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key \"" + it.key() + "\" in " +
                              where);
}

inline double require_number(const nlohmann::json& obj, const std::string& key,
                             const std::string& where) {
    if (!obj.contains(key))
        throw ConfigError("config: missing \"" + key + "\" in " + where);
    if (!obj.at(key).is_number())
        throw ConfigError("config: \"" + key + "\" in " + where +
                          " must be a number");
    return obj.at(key).get<double>();
}

inline double number_or(const nlohmann::json& obj, const std::string& key,
                        double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number())
        throw ConfigError("config: \"" + key + "\" in " + where +
                          " must be a number");
    return obj.at(key).get<double>();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& doc) {
    detail::reject_unknown(
        doc, {"model", "domain", "grades", "bank", "stopping", "experiment"},
        "top level");
    for (const char* key : {"model", "domain", "grades", "bank"})
        if (!doc.contains(key))
            throw ConfigError(std::string("config: missing \"") + key + "\"");

    RunConfig cfg;

    const auto& model = doc.at("model");
    detail::reject_unknown(model, {"kind", "a", "b", "c"}, "model");
    const std::string kind = model.value("kind", "");
    if (kind == "ratio") {
        for (const char* key : {"a", "b", "c"})
            if (model.contains(key))
                throw ConfigError("config: ratio model takes no parameters");
        cfg.spec.model = ResponseModel::ratio();
    } else if (kind == "logit") {
        cfg.spec.model = ResponseModel::logit(
            detail::require_number(model, "a", "model"),
            detail::require_number(model, "b", "model"),
            detail::require_number(model, "c", "model"));
    } else {
        throw ConfigError("config: model.kind must be \"ratio\" or \"logit\"");
    }

    const auto& domain = doc.at("domain");
    detail::reject_unknown(domain, {"p_lo", "p_hi"}, "domain");
    cfg.spec.domain = AbilityDomain(
        detail::require_number(domain, "p_lo", "domain"),
        detail::require_number(domain, "p_hi", "domain"));

    const auto& grades = doc.at("grades");
    if (!grades.is_array() || grades.empty())
        throw ConfigError("config: grades must be a nonempty array");
    std::vector<double> thresholds;
    for (const auto& g : grades) {
        if (!g.is_number())
            throw ConfigError("config: grades must contain numbers");
        thresholds.push_back(g.get<double>());
    }
    cfg.spec.grades = GradeScheme(thresholds);
    cfg.spec.grades.validate_against(cfg.spec.domain);

    const auto& bank = doc.at("bank");
    detail::reject_unknown(bank, {"kind", "x_lo", "x_hi", "levels"}, "bank");
    const std::string bank_kind = bank.value("kind", "");
    if (bank_kind == "interval") {
        cfg.spec.bank = QuestionBank::interval(
            detail::require_number(bank, "x_lo", "bank"),
            detail::require_number(bank, "x_hi", "bank"));
    } else if (bank_kind == "finite") {
        if (!bank.contains("levels") || !bank.at("levels").is_array())
            throw ConfigError("config: finite bank needs a levels array");
        std::vector<double> levels;
        for (const auto& v : bank.at("levels")) {
            if (!v.is_number())
                throw ConfigError("config: bank levels must be numbers");
            levels.push_back(v.get<double>());
        }
        cfg.spec.bank = QuestionBank::finite(levels);
    } else {
        throw ConfigError("config: bank.kind must be \"interval\" or \"finite\"");
    }

    if (doc.contains("stopping")) {
        const auto& stopping = doc.at("stopping");
        detail::reject_unknown(stopping, {"delta", "alpha", "c", "t_max"},
                               "stopping");
        cfg.spec.delta = detail::number_or(stopping, "delta", 0.01, "stopping");
        cfg.spec.stopping_alpha =
            detail::number_or(stopping, "alpha", 2.0, "stopping");
        cfg.spec.stopping_c =
            detail::number_or(stopping, "c", cfg.spec.stopping_c, "stopping");
        cfg.spec.t_max = static_cast<std::int64_t>(
            detail::number_or(stopping, "t_max", 1e6, "stopping"));
        if (!(cfg.spec.delta > 0.0 && cfg.spec.delta < 1.0))
            throw ConfigError("config: stopping.delta must be in (0,1)");
    }

    if (doc.contains("experiment")) {
        const auto& exp = doc.at("experiment");
        detail::reject_unknown(exp,
                               {"p_true", "replications", "seed", "start",
                                "mode", "policy", "path_horizon", "threads"},
                               "experiment");
        cfg.spec.p_true = detail::number_or(exp, "p_true", 5.5, "experiment");
        cfg.spec.replications = static_cast<std::int64_t>(
            detail::number_or(exp, "replications", 1, "experiment"));
        cfg.spec.seed = static_cast<std::uint64_t>(
            detail::number_or(exp, "seed", 1, "experiment"));
        cfg.spec.path_horizon = static_cast<std::int64_t>(
            detail::number_or(exp, "path_horizon", 500, "experiment"));
        cfg.spec.threads = static_cast<int>(
            detail::number_or(exp, "threads", 0, "experiment"));
        if (exp.contains("start")) {
            const auto& start = exp.at("start");
            if (start.is_number()) {
                cfg.spec.start = StartPolicy::Explicit;
                cfg.spec.start_level_value = start.get<double>();
            } else if (start.is_string()) {
                const std::string s = start.get<std::string>();
                if (s == "easy") cfg.spec.start = StartPolicy::Easy;
                else if (s == "oracle") cfg.spec.start = StartPolicy::Oracle;
                else if (s == "hard") cfg.spec.start = StartPolicy::Hard;
                else
                    throw ConfigError(
                        "config: experiment.start must be easy|oracle|hard or a number");
            } else {
                throw ConfigError(
                    "config: experiment.start must be a string or number");
            }
        }
        if (exp.contains("mode")) {
            const std::string m = exp.at("mode").get<std::string>();
            if (m == "exact") cfg.spec.mode = SolveMode::Exact;
            else if (m == "restricted_single")
                cfg.spec.mode = SolveMode::RestrictedSingle;
            else
                throw ConfigError(
                    "config: experiment.mode must be exact|restricted_single");
        }
        if (exp.contains("policy")) {
            const std::string p = exp.at("policy").get<std::string>();
            if (p == "auto") cfg.spec.policy = SolvePolicy::Auto;
            else if (p == "continuous") cfg.spec.policy = SolvePolicy::Continuous;
            else if (p == "grid") cfg.spec.policy = SolvePolicy::Grid;
            else
                throw ConfigError(
                    "config: experiment.policy must be auto|continuous|grid");
        }
        if (!cfg.spec.domain.contains(cfg.spec.p_true))
            throw ConfigError("config: p_true outside the ability domain");
    }

    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

}  // namespace adaptest

#endif  // ADAPTEST_CONFIG_HPP
