// adaptest: compute question-plan lower bounds, run simulated experiments,
// and host interactive classification sessions.
//
// Exit codes: 0 success, 2 configuration error, 3 degenerate ability input,
// 4 inconclusive interactive session.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adaptest/config.hpp"
#include "adaptest/engine.hpp"
#include "adaptest/io.hpp"
#include "adaptest/lower_bound.hpp"
#include "adaptest/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitInconclusive = 4;

adaptest::RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw adaptest::ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return adaptest::parse_config_text(buf.str());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw adaptest::ConfigError("cannot write output file: " + path);
    out << content;
}

struct CommonOpts {
    std::string config_path;
    std::optional<double> delta;
    std::optional<std::uint64_t> seed;
    std::optional<double> p_true;
    std::optional<std::int64_t> reps;
    std::optional<int> threads;
    std::string out_dir = ".";
    std::string format = "text";
};

adaptest::RunConfig resolve(const CommonOpts& opts) {
    adaptest::RunConfig cfg = load_config(opts.config_path);
    if (opts.delta) {
        if (!(*opts.delta > 0.0 && *opts.delta < 1.0))
            throw adaptest::ConfigError("--delta must be in (0,1)");
        cfg.spec.delta = *opts.delta;
    }
    if (opts.seed) cfg.spec.seed = *opts.seed;
    if (opts.p_true) {
        if (!cfg.spec.domain.contains(*opts.p_true))
            throw adaptest::ConfigError("--p-true outside the ability domain");
        cfg.spec.p_true = *opts.p_true;
    }
    if (opts.reps) cfg.spec.replications = *opts.reps;
    if (opts.threads) cfg.spec.threads = *opts.threads;
    return cfg;
}

int cmd_lb(const CommonOpts& opts, double p) {
    const adaptest::RunConfig cfg = resolve(opts);
    const auto& s = cfg.spec;
    const auto sol = adaptest::solve_bank(s.model, p, s.grades, s.domain,
                                          s.bank, s.mode);
    if (opts.format == "json") {
        adaptest::json j = adaptest::to_json(sol);
        j["p"] = p;
        j["delta"] = s.delta;
        j["m_star_scaled"] = sol.scaled(s.delta);
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }
    std::cout << "lower bound at p = " << p << "\n"
              << "  case:           " << adaptest::to_string(sol.case_tag) << "\n"
              << "  m*:             " << sol.m_star << "\n"
              << "  m* ln(1/2.4d):  " << sol.scaled(s.delta)
              << "   (delta = " << s.delta << ")\n";
    if (sol.single_level()) {
        std::cout << "  plan:           single level x = " << sol.x1 << "\n";
    } else {
        std::cout << "  plan:           x1 = " << sol.x1 << " (w = " << sol.w
                  << "), x2 = " << sol.x2 << " (w = " << 1.0 - sol.w << ")\n";
    }
    std::cout << "  dual lambda:    " << sol.lambda << "\n";
    if (sol.restricted_gap > 0.0)
        std::cout << "  restricted gap: " << sol.restricted_gap << "\n";
    return kExitOk;
}

int cmd_simulate_run(const CommonOpts& opts) {
    adaptest::RunConfig cfg = resolve(opts);
    const auto tr = adaptest::run_session(cfg.spec, cfg.spec.seed);
    const std::string jsonl = adaptest::transcript_jsonl(tr);
    const auto path =
        std::filesystem::path(opts.out_dir) / "session_transcript.jsonl";
    write_file(path.string(), jsonl);
    if (opts.format == "json") {
        adaptest::json j{{"tau", tr.tau},
                         {"verdict", tr.verdict},
                         {"true_bracket", tr.true_bracket},
                         {"correct", tr.correct},
                         {"inconclusive", tr.inconclusive},
                         {"seed", tr.seed},
                         {"transcript", path.string()}};
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }
    std::cout << "session finished after " << tr.tau << " questions\n"
              << "  verdict bracket: " << tr.verdict
              << (tr.correct ? " (correct)" : " (wrong)")
              << (tr.inconclusive ? " [inconclusive]" : "") << "\n"
              << "  transcript:      " << path.string() << "\n";
    return kExitOk;
}

int cmd_simulate_mc(const CommonOpts& opts) {
    adaptest::RunConfig cfg = resolve(opts);
    const auto res = adaptest::run_monte_carlo(cfg.spec);
    const auto dir = std::filesystem::path(opts.out_dir);
    write_file((dir / "mc_sessions.csv").string(), adaptest::sessions_csv(res));
    write_file((dir / "mc_path.csv").string(), adaptest::path_csv(res));
    write_file((dir / "mc_summary.json").string(),
               adaptest::to_json(res).dump(2) + "\n");
    if (opts.format == "json") {
        std::cout << adaptest::to_json(res).dump(2) << "\n";
        return kExitOk;
    }
    std::cout << "monte carlo: " << res.replications << " replications, delta = "
              << res.delta << "\n"
              << "  error rate:    " << res.error_rate << "  (" << res.errors
              << " errors, " << res.inconclusive << " inconclusive)\n"
              << "  tau:           mean " << res.tau_mean << ", median "
              << res.tau_median << ", sd " << res.tau_stddev << "\n"
              << "  tau ratio:     " << res.tau_ratio
              << "   vs m* = " << res.m_star << "\n"
              << "  outputs:       " << (dir / "mc_sessions.csv").string()
              << ", " << (dir / "mc_path.csv").string() << ", "
              << (dir / "mc_summary.json").string() << "\n";
    return kExitOk;
}

int cmd_simulate_explore(const CommonOpts& opts) {
    adaptest::RunConfig cfg = resolve(opts);
    const auto res = adaptest::run_exploration_experiment(cfg.spec);
    const auto dir = std::filesystem::path(opts.out_dir);
    write_file((dir / "exploration_paths.csv").string(),
               adaptest::exploration_csv(res));
    write_file((dir / "exploration_meta.json").string(),
               adaptest::to_json(res).dump(2) + "\n");
    if (opts.format == "json") {
        std::cout << adaptest::to_json(res).dump(2) << "\n";
        return kExitOk;
    }
    std::cout << "exploration study: " << res.replications
              << " replications per start, delta = " << res.delta << "\n"
              << "  starts: easy " << res.easy_start << ", oracle "
              << res.oracle_start << ", hard " << res.hard_start << "\n"
              << "  paths:  " << (dir / "exploration_paths.csv").string()
              << "\n";
    return kExitOk;
}

int cmd_session(const CommonOpts& opts, const std::string& transcript_path) {
    adaptest::RunConfig cfg = resolve(opts);
    const auto& s = cfg.spec;
    adaptest::Session session(s.model, s.grades, s.domain, s.bank,
                              cfg.stopping(), s.seed, s.start_level(),
                              s.policy, /*record_steps=*/true, s.mode);
    std::cout << "Interactive session (delta = " << s.delta
              << "). Answer each question with 1 (correct) or 0 (wrong).\n";
    bool aborted = false;
    while (!session.state().stopped) {
        // Hold the drawn level across re-prompts.
        const double level = session.next_question();
        std::optional<int> outcome;
        while (!outcome) {
            std::cout << "Question " << (session.state().t + 1)
                      << ": difficulty " << level << ". Response [0/1]: "
                      << std::flush;
            std::string line;
            if (!std::getline(std::cin, line)) {
                aborted = true;
                break;
            }
            if (line == "0" || line == "1")
                outcome = line == "1" ? 1 : 0;
            else
                std::cout << "Please answer 0 or 1.\n";
        }
        if (aborted) break;
        session.record_response(level, *outcome);
    }

    adaptest::Transcript tr;
    tr.steps = session.records();
    tr.tau = session.state().t;
    tr.inconclusive = aborted || session.state().inconclusive;
    tr.verdict = session.state().verdict.value_or(session.state().bracket);
    tr.seed = s.seed;
    write_file(transcript_path, adaptest::transcript_jsonl(tr));

    if (aborted || session.state().inconclusive) {
        std::cout << "\nSession inconclusive after " << tr.tau
                  << " questions. Transcript: " << transcript_path << "\n";
        return kExitInconclusive;
    }
    const auto bracket = *session.state().verdict;
    std::cout << "Verdict: ability lies in ["
              << s.grades.lower_edge(bracket, s.domain) << ", "
              << s.grades.upper_edge(bracket, s.domain) << ") (grade index "
              << bracket << ") after " << tr.tau << " questions.\n"
              << "Transcript: " << transcript_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive ability classification: lower bounds, sequential "
                 "sessions, Monte Carlo experiments"};
    app.require_subcommand(1);

    CommonOpts opts;
    double lb_p = 0.0;
    std::string transcript_path = "session_transcript.jsonl";

    auto add_common = [&](CLI::App* cmd, bool with_overrides = true) {
        cmd->add_option("--config", opts.config_path, "JSON run configuration")
            ->required();
        cmd->add_option("--format", opts.format, "Output format: text|json")
            ->check(CLI::IsMember({"text", "json"}));
        if (with_overrides) {
            cmd->add_option("--delta", opts.delta, "Override error tolerance");
            cmd->add_option("--seed", opts.seed, "Override master seed");
            cmd->add_option("--p-true", opts.p_true, "Override simulated ability");
            cmd->add_option("--reps", opts.reps, "Override replication count");
            cmd->add_option("--threads", opts.threads, "Worker threads (0 = auto)");
            cmd->add_option("--out-dir", opts.out_dir, "Directory for CSV/JSON artifacts");
        }
    };

    CLI::App* lb = app.add_subcommand("lb", "Solve the lower-bound program at an ability");
    add_common(lb);
    lb->add_option("--p", lb_p, "Ability to evaluate")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "Run simulated experiments");
    simulate->require_subcommand(1);
    CLI::App* sim_run = simulate->add_subcommand("run", "One seeded session");
    CLI::App* sim_mc = simulate->add_subcommand("mc", "Monte Carlo batch");
    CLI::App* sim_explore =
        simulate->add_subcommand("explore", "Three-start exploration study");
    add_common(sim_run);
    add_common(sim_mc);
    add_common(sim_explore);

    CLI::App* session = app.add_subcommand("session", "Interactive terminal session");
    add_common(session);
    session->add_option("--transcript", transcript_path,
                        "Path for the JSONL transcript");

    CLI11_PARSE(app, argc, argv);

    try {
        if (lb->parsed()) return cmd_lb(opts, lb_p);
        if (sim_run->parsed()) return cmd_simulate_run(opts);
        if (sim_mc->parsed()) return cmd_simulate_mc(opts);
        if (sim_explore->parsed()) return cmd_simulate_explore(opts);
        if (session->parsed()) return cmd_session(opts, transcript_path);
    } catch (const adaptest::DegenerateAbilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const adaptest::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const adaptest::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
