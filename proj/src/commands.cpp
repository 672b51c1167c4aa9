#include "tcbm/commands.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

#include "tcbm/errors.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

namespace fs = std::filesystem;

std::string to_string(Command command) {
    switch (command) {
        case Command::simulate: return "simulate";
        case Command::verify: return "verify";
        case Command::optimize: return "optimize";
        case Command::scan: return "scan";
        case Command::tower: return "tower";
    }
    return "unknown";
}

Command command_from_string(const std::string& name) {
    for (auto c : {Command::simulate, Command::verify, Command::optimize, Command::scan,
                   Command::tower}) {
        if (to_string(c) == name) return c;
    }
    throw InvalidSpec("unknown command '" + name + "'");
}

namespace {

std::ofstream open_output(const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
    return out;
}

void write_text(const fs::path& file, const std::string& text) {
    auto out = open_output(file);
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + file.string() + "'");
}

void write_json(const fs::path& file, const nlohmann::json& j) { write_text(file, j.dump(2) + "\n"); }

void write_records_csv(const fs::path& file, std::span<const VerificationRecord> records) {
    auto out = open_output(file);
    out << "theorem,path_id,t,lhs,rhs,abs_diff,rel_diff,mode\n";
    for (const auto& r : records) {
        const std::string cells[] = {r.theorem,
                                     std::to_string(r.path_id),
                                     format_double(r.t),
                                     format_double(r.lhs),
                                     format_double(r.rhs),
                                     format_double(r.abs_diff),
                                     format_double(r.rel_diff),
                                     to_string(r.mode)};
        out << csv_row(std::span<const std::string>(cells));
    }
}

struct Run {
    const RunConfig& config;
    fs::path out;
    unsigned workers;
    nlohmann::json reports = nlohmann::json::object();
    std::vector<Verdict> verdicts;

    void add(const std::string& name, const EnsembleReport& report) {
        const auto j = to_json(report);
        write_json(out / (name + ".json"), j);
        reports[name] = j;
        for (auto v : report.verdicts) {
            v.name = name + "/" + v.name;
            verdicts.push_back(std::move(v));
        }
    }

    void skip(const std::string& name, const std::string& reason) {
        reports[name] = {{"skipped", reason}};
    }
};

std::size_t exported(const RunConfig& config) {
    return std::min(config.export_paths, config.scenario.n_paths);
}

void simulate(Run& run) {
    const Ensemble ensemble(run.config.scenario, run.workers);
    for (std::size_t i = 0; i < exported(run.config); ++i) {
        const auto b = ensemble.bundle(i);
        const auto stem = "path_" + std::to_string(i);
        auto physical = open_output(run.out / (stem + "_physical.csv"));
        write_physical_csv(physical, b);
        auto market = open_output(run.out / (stem + "_market.csv"));
        write_market_csv(market, b);
        auto lambda = open_output(run.out / (stem + "_lambda.csv"));
        write_csv(lambda, b.lambda);
    }

    struct PathInfo {
        bool valid;
        double lambda_T;
        std::size_t jumps;
        std::size_t rejections;
    };
    const auto info = parallel_map(ensemble.size(), run.workers, [&](std::size_t i) {
        SamplingStats stats;
        const auto lambda = ensemble.time_change(i, &stats);
        return PathInfo{lambda.validate().ok(), lambda.terminal(), lambda.jump_count(),
                        stats.rejections};
    });
    std::vector<double> terminal;
    std::size_t invalid = 0, jumps = 0, rejections = 0;
    for (const auto& p : info) {
        terminal.push_back(p.lambda_T);
        if (!p.valid) ++invalid;
        jumps += p.jumps;
        rejections += p.rejections;
    }
    const auto e = estimate(terminal);
    EnsembleReport report;
    report.estimator = "E[Lambda_T]";
    report.n_paths = ensemble.size();
    report.mean = e.mean;
    report.std_error = e.std_error;
    report.seed = run.config.scenario.seed;
    report.n_physical = run.config.scenario.n_physical;
    report.n_market = run.config.scenario.n_market;
    report.verdicts.push_back({"time_change_valid", invalid == 0, static_cast<double>(invalid), 0.0,
                               "every sampled time-change passes validation"});
    report.details = {{"jumps", jumps},
                      {"rejections", rejections},
                      {"exported_paths", exported(run.config)}};
    run.add("simulation", report);
}

void verify(Run& run) {
    const auto& checks = run.config.checks;
    const Ensemble ensemble(run.config.scenario, run.workers);
    if (checks.forward) {
        const auto records = forward_records(ensemble);
        write_records_csv(run.out / "forward_records.csv", records);
        EnsembleReport report;
        report.estimator = "forward change of variable, max rel_diff";
        report.n_paths = ensemble.size();
        report.seed = run.config.scenario.seed;
        report.n_physical = run.config.scenario.n_physical;
        report.n_market = run.config.scenario.n_market;
        report.verdicts.push_back(
            exactness_verdict("exactness", records, checks.exactness_tolerance));
        report.mean = report.verdicts.back().value;
        run.add("forward", report);
    }
    if (checks.backward) {
        const auto records = backward_records(ensemble);
        write_records_csv(run.out / "backward_records.csv", records);
        EnsembleReport report;
        report.estimator = "backward change of variable, max rel_diff";
        report.n_paths = ensemble.size();
        report.seed = run.config.scenario.seed;
        report.n_physical = run.config.scenario.n_physical;
        report.n_market = run.config.scenario.n_market;
        report.verdicts.push_back(
            exactness_verdict("exactness", records, checks.exactness_tolerance));
        report.mean = report.verdicts.back().value;
        run.add("backward", report);
    }
    if (checks.failure_demo) {
        const auto jumps = parallel_map(ensemble.size(), run.workers, [&](std::size_t i) {
            return ensemble.time_change(i).jump_count();
        });
        const bool any = std::any_of(jumps.begin(), jumps.end(), [](auto n) { return n > 0; });
        if (any) {
            run.add("failure_demonstration", failure_demonstration(ensemble));
        } else {
            run.skip("failure_demonstration",
                     "no path has a jump, so every integrand is adapted to the time-change");
        }
    }
    if (checks.isometry) run.add("isometry", isometry_check(ensemble, checks.thresholds));
    if (checks.martingale) run.add("martingale", martingale_check(ensemble, checks.thresholds));
}

void optimize(Run& run) {
    const auto& scenario = run.config.scenario;
    const auto& checks = run.config.checks;
    const Ensemble ensemble(scenario, run.workers);
    for (std::size_t i = 0; i < exported(run.config); ++i) {
        auto out = open_output(run.out / ("strategy_path_" + std::to_string(i) + ".csv"));
        write_strategy_csv(out, scenario, ensemble.bundle(i));
    }
    run.add("hat_cross_check", hat_cross_check(ensemble, checks.cross_check_tolerance));
    if (!checks.conditional_value) return;
    if (!scenario.theta.independent_of_m()) {
        run.skip("conditional_value", "theta depends on M; the value formula conditions on Lambda only");
        return;
    }
    run.add("conditional_value", conditional_value_check(scenario, run.workers, checks.thresholds));
}

void scan(Run& run) {
    const auto& checks = run.config.checks;
    const auto table = optimality_scan(run.config.scenario, checks.scan_family, checks.scan_epsilons,
                                       checks.freeze_lambda, run.workers, checks.thresholds);
    auto csv = open_output(run.out / "scan.csv");
    write_scan_csv(csv, table);
    const auto j = to_json(table);
    write_json(run.out / "scan.json", j);
    run.reports["scan"] = j;
    for (const auto& row : table.rows) {
        const double slack = checks.thresholds.inequality_sigmas *
                             (table.baseline.std_error + row.value.std_error);
        run.verdicts.push_back({"scan/epsilon=" + format_double(row.epsilon), row.pass,
                                row.value.mean - table.baseline.mean, slack,
                                "J(perturbed) - J(nu_hat) <= " +
                                    format_double(checks.thresholds.inequality_sigmas) +
                                    " (stderr_hat + stderr_row)"});
    }
}

void tower(Run& run) {
    const auto& checks = run.config.checks;
    run.add("tower", tower_check(run.config.scenario, run.workers, checks.thresholds,
                                 checks.tower_epsilons));
}

nlohmann::json base_summary(Command command) {
    return {{"command", to_string(command)}};
}

}  // namespace

CommandResult run_command(Command command, const RunConfig& config, const fs::path& out,
                          unsigned workers, std::ostream* log) {
    const auto started = std::chrono::steady_clock::now();
    CommandResult result;
    result.summary = base_summary(command);
    result.summary["seed"] = config.scenario.seed;
    result.summary["n_paths"] = config.scenario.n_paths;
    result.summary["config"] = serialize_config(config);

    try {
        fs::create_directories(out);
        write_text(out / "config.ini", serialize_config(config));
        Run run{config, out, workers, nlohmann::json::object(), {}};
        switch (command) {
            case Command::simulate: simulate(run); break;
            case Command::verify: verify(run); break;
            case Command::optimize: optimize(run); break;
            case Command::scan: scan(run); break;
            case Command::tower: tower(run); break;
        }
        nlohmann::json verdicts = nlohmann::json::array();
        bool pass = true;
        for (const auto& v : run.verdicts) {
            verdicts.push_back(to_json(v));
            pass = pass && v.pass;
        }
        result.exit_code = pass ? 0 : 1;
        result.summary["reports"] = run.reports;
        result.summary["verdicts"] = verdicts;
        result.summary["pass"] = pass;
    } catch (const std::exception& e) {
        result.exit_code = 2;
        result.summary["error"] = e.what();
        result.summary["pass"] = false;
    }
    result.summary["exit_code"] = result.exit_code;

    try {
        fs::create_directories(out);
        write_json(out / "summary.json", result.summary);
    } catch (const std::exception& e) {
        if (log) *log << "error: " << e.what() << '\n';
        result.exit_code = 2;
    }

    if (log) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
        *log << to_string(command) << ": " << (result.exit_code == 0 ? "pass" : "FAIL") << " in "
             << elapsed.count() << " s (workers " << resolve_workers(workers) << ")\n";
        if (result.summary.contains("error")) {
            *log << "error: " << result.summary["error"].get<std::string>() << '\n';
        }
    }
    return result;
}

CommandResult write_error_summary(Command command, const fs::path& out, const std::string& message) {
    CommandResult result;
    result.exit_code = 2;
    result.summary = base_summary(command);
    result.summary["error"] = message;
    result.summary["pass"] = false;
    result.summary["exit_code"] = 2;
    try {
        fs::create_directories(out);
        write_json(out / "summary.json", result.summary);
    } catch (const std::exception&) {
    }
    return result;
}

}  // namespace tcbm
