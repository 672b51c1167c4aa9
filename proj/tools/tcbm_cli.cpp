// tcbm: simulate, verify, optimize, scan and tower runs from a scenario config.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "tcbm/commands.hpp"
#include "tcbm/config.hpp"

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    unsigned workers = 1;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "scenario config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "master seed, overrides the config");
    sub->add_option("--paths", o.paths, "number of paths, overrides the config")
        ->check(CLI::PositiveNumber);
    sub->add_option("--workers", o.workers, "worker threads, 0 = all cores")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Brownian motion under stochastic time-changes: change of variable checks and "
                 "optimal power-utility strategies"};
    app.require_subcommand(1);

    Options options;
    std::optional<tcbm::Command> chosen;
    const std::pair<tcbm::Command, const char*> commands[] = {
        {tcbm::Command::simulate, "sample paths and write them as CSV"},
        {tcbm::Command::verify, "change of variable, isometry and martingale checks"},
        {tcbm::Command::optimize, "optimal strategy, cross-check and conditional value"},
        {tcbm::Command::scan, "optimality scan over a perturbation family"},
        {tcbm::Command::tower, "unconditional value against the averaged conditional value"},
    };
    for (const auto& [command, help] : commands) {
        auto* sub = app.add_subcommand(tcbm::to_string(command), help);
        add_common(sub, options);
        sub->callback([&chosen, command = command] { chosen = command; });
    }

    CLI11_PARSE(app, argc, argv);

    tcbm::RunConfig config;
    try {
        config = tcbm::load_config(options.config);
        if (options.seed) config.scenario.seed = *options.seed;
        if (options.paths) config.scenario.n_paths = *options.paths;
    } catch (const std::exception& e) {
        std::cerr << options.config << ": " << e.what() << '\n';
        return tcbm::write_error_summary(*chosen, options.out, e.what()).exit_code;
    }

    const auto result = tcbm::run_command(*chosen, config, options.out, options.workers, &std::cerr);
    return result.exit_code;
}
