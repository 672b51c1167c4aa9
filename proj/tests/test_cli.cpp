#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tcbm/commands.hpp"
#include "tcbm/config.hpp"
#include "tcbm/errors.hpp"

using namespace tcbm;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(# identity time-change, no drift
[time_change]
kind = linear

[market]
p = 2
x = 1
)";

std::size_t error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return static_cast<std::size_t>(-1);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("tcbm_test_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
    const auto c = parse_config(kMinimal);
    EXPECT_EQ(c.scenario.time_change.kind, TimeChangeKind::linear);
    EXPECT_EQ(c.scenario.n_paths, 10000u);
    EXPECT_EQ(c.scenario.n_physical, 4096u);
    EXPECT_EQ(c.scenario.n_market, 4096u);
    EXPECT_EQ(c.scenario.theta.level, 0.0);
    EXPECT_EQ(c.checks.thresholds.equality_sigmas, 3.0);
    EXPECT_EQ(c.checks.thresholds.inequality_sigmas, 2.0);
}

TEST(Config, PEqualToOneIsRejectedWithLine) {
    const std::string text = "[time_change]\nkind = linear\n[market]\np = 1\nx = 1\n";
    try {
        parse_config(text);
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_NE(std::string(e.what()).find("p must not be 0 or 1"), std::string::npos);
    }
    EXPECT_EQ(error_line("[time_change]\nkind = linear\n[market]\np = 0\nx = 1\n"), 4u);
    EXPECT_EQ(error_line("[time_change]\nkind = linear\n[market]\np = 2\nx = -1\n"), 5u);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line(std::string(kMinimal) + "colour = red\n"), 8u);
    EXPECT_EQ(error_line(std::string(kMinimal) + "[simulation]\nn_paths = many\n"), 9u);
    EXPECT_EQ(error_line(std::string(kMinimal) + "[simulation]\nn_paths = 10\nn_paths = 20\n"), 10u);
    EXPECT_EQ(error_line(std::string(kMinimal) + "[nonsense]\n"), 8u);
    EXPECT_EQ(error_line("[time_change]\nkind = linear\nintensity = 2\n[market]\np = 2\nx = 1\n"),
              3u);
    EXPECT_EQ(error_line("p = 2\n"), 1u);
    EXPECT_EQ(error_line("[market]\np = 2\nx = 1\n"), 0u);  // missing time_change.kind
    EXPECT_EQ(error_line("[time_change]\nkind = gamma\n[market]\np = 2\nx = 1\n"), 2u);
}

TEST(Config, RoundTripIsIdentity) {
    const std::string text = R"([time_change]
kind = subordinator_drift
drift = 0.75
intensity = 2.5
jump_law = constant
jump_mean = 0.1
forced_jumps = 0.5:0.25, 0.75:0.125
[market]
p = 0.3
x = 2.5
t = 0.25
market_horizon = 12
[strategy]
theta = linear_in_time
theta_level = 0.1
theta_slope = 0.7
[simulation]
n_paths = 123
n_physical = 64
n_market = 96
seed = 18446744073709551615
[checks]
scan_family = time_shift
scan_epsilons = 0.1, 0.2
tower_epsilons =
failure_demo = false
)";
    const auto c = parse_config(text);
    const auto serialized = serialize_config(c);
    const auto again = parse_config(serialized);
    EXPECT_EQ(again, c);
    EXPECT_EQ(serialize_config(again), serialized);
    EXPECT_EQ(c.scenario.seed, 18446744073709551615ULL);
    EXPECT_TRUE(c.checks.tower_epsilons.empty());
    EXPECT_EQ(c.scenario.time_change.subordinator.forced_jumps.size(), 2u);

    for (const char* kind : {"linear", "deterministic_piecewise", "integrated_diffusion"}) {
        auto other = parse_config(std::string("[time_change]\nkind = ") + kind +
                                  "\n[market]\np = 3\nx = 1\nmarket_horizon = 5\n");
        EXPECT_EQ(parse_config(serialize_config(other)), other) << kind;
    }
}

TEST(Config, InvalidTimeChangeIsReported) {
    EXPECT_THROW(parse_config("[time_change]\nkind = linear\nrate = 3\n[market]\np = 2\nx = 1\n"),
                 ConfigError);  // Λ_T = 3 exceeds the default market horizon 1
}

TEST(Commands, VerifyOnIdentityTenPathsIsExactAndReportsAllChecks) {
    // At 10 paths the skewed isometry statistic fails 3 t-adjusted stderr for about
    // one seed in ten (seed 1 among them), so only the exact verdicts are asserted here.
    auto c = parse_config(kMinimal);
    c.scenario.n_paths = 10;
    c.scenario.n_physical = 64;
    c.scenario.n_market = 64;
    const auto dir = scratch("verify_identity_10");
    const auto r = run_command(Command::verify, c, dir);
    EXPECT_NE(r.exit_code, 2) << r.summary.dump(2);
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
    EXPECT_TRUE(fs::exists(dir / "forward_records.csv"));
    EXPECT_EQ(parse_config(read_file(dir / "config.ini")), c);
    std::size_t statistical = 0;
    for (const auto& v : r.summary["verdicts"]) {
        const auto name = v["name"].get<std::string>();
        if (name.rfind("forward/", 0) == 0 || name.rfind("backward/", 0) == 0) {
            EXPECT_TRUE(v["pass"].get<bool>()) << name;
        }
        if (name.rfind("isometry/", 0) == 0 || name.rfind("martingale/", 0) == 0) ++statistical;
    }
    EXPECT_GE(statistical, 5u);
    EXPECT_TRUE(r.summary["reports"]["failure_demonstration"].contains("skipped"));
    fs::remove_all(dir);
}

TEST(Commands, VerifyOnIdentityPasses) {
    auto c = parse_config(kMinimal);
    c.scenario.n_paths = 200;
    c.scenario.n_physical = 64;
    c.scenario.n_market = 64;
    const auto dir = scratch("verify_identity");
    const auto r = run_command(Command::verify, c, dir);
    EXPECT_EQ(r.exit_code, 0) << r.summary.dump(2);
    const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
    EXPECT_TRUE(summary["pass"].get<bool>());
    fs::remove_all(dir);
}

TEST(Commands, VerifyFailureModeReportsExpectedFail) {
    auto c = parse_config(
        "[time_change]\nkind = subordinator_drift\nintensity = 3\njump_mean = 0.3\n"
        "[market]\np = 2\nx = 1\nmarket_horizon = 20\n"
        "[simulation]\nn_paths = 300\nn_physical = 32\nn_market = 32\n");
    const auto dir = scratch("verify_failure");
    const auto r = run_command(Command::verify, c, dir);
    EXPECT_EQ(r.exit_code, 0) << r.summary.dump(2);
    bool found = false;
    for (const auto& v : r.summary["verdicts"]) {
        if (v["name"] == "failure_demonstration/expected-fail") {
            found = true;
            EXPECT_TRUE(v["pass"].get<bool>());
        }
    }
    EXPECT_TRUE(found);
    fs::remove_all(dir);
}

TEST(Commands, OptimizeWithZeroThetaIsExact) {
    auto c = parse_config(kMinimal);
    c.scenario.n_paths = 50;
    c.scenario.n_physical = 16;
    c.scenario.n_market = 16;
    const auto dir = scratch("optimize_zero");
    const auto r = run_command(Command::optimize, c, dir);
    EXPECT_EQ(r.exit_code, 0) << r.summary.dump(2);
    const auto& cv = r.summary["reports"]["conditional_value"];
    EXPECT_EQ(cv["mean"].get<double>(), -1.0);
    EXPECT_EQ(cv["stderr"].get<double>(), 0.0);
    const auto csv = read_file(dir / "strategy_path_0.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,nu_hat,V,U_of_V");
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    fs::remove_all(dir);
}

TEST(Commands, ScanAndTowerWriteArtifacts) {
    auto c = parse_config(
        "[time_change]\nkind = subordinator_drift\nintensity = 2\njump_mean = 0.2\n"
        "[market]\np = 2\nx = 1\nmarket_horizon = 20\n[strategy]\ntheta_level = 1\n"
        "[simulation]\nn_paths = 400\nn_physical = 16\nn_market = 16\n");
    const auto dir = scratch("scan_tower");
    const auto scan = run_command(Command::scan, c, dir / "scan");
    EXPECT_EQ(scan.exit_code, 0) << scan.summary.dump(2);
    const auto csv = read_file(dir / "scan" / "scan.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "epsilon,J_mean,J_stderr,pass");
    const auto tower = run_command(Command::tower, c, dir / "tower");
    EXPECT_EQ(tower.exit_code, 0) << tower.summary.dump(2);
    EXPECT_TRUE(fs::exists(dir / "tower" / "tower.json"));
    fs::remove_all(dir);
}

TEST(Commands, ErrorsGiveExitTwoAndSummary) {
    auto c = parse_config(kMinimal);
    c.scenario.n_paths = 5;
    c.scenario.n_physical = 8;
    c.scenario.n_market = 8;
    c.scenario.t = 0.5;
    const auto dir = scratch("tower_error");
    const auto r = run_command(Command::tower, c, dir);  // tower needs t = 0
    EXPECT_EQ(r.exit_code, 2);
    const auto summary = nlohmann::json::parse(read_file(dir / "summary.json"));
    EXPECT_FALSE(summary["pass"].get<bool>());
    EXPECT_TRUE(summary.contains("error"));
    fs::remove_all(dir);
}

TEST(Commands, OutputsDoNotDependOnWorkers) {
    auto c = parse_config(
        "[time_change]\nkind = subordinator_drift\nintensity = 2\njump_mean = 0.2\n"
        "[market]\np = 2\nx = 1\nmarket_horizon = 20\n[strategy]\ntheta_level = 1\n"
        "[simulation]\nn_paths = 64\nn_physical = 16\nn_market = 16\n");
    const auto dir = scratch("workers");
    for (auto command : {Command::simulate, Command::verify, Command::optimize, Command::scan}) {
        const auto a = dir / (to_string(command) + "_1");
        const auto b = dir / (to_string(command) + "_4");
        run_command(command, c, a, 1);
        run_command(command, c, b, 4);
        for (const auto& e : fs::directory_iterator(a)) {
            EXPECT_EQ(read_file(e.path()), read_file(b / e.path().filename()))
                << e.path().filename();
        }
    }
    fs::remove_all(dir);
}
