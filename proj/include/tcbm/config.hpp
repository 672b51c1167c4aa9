#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tcbm/harness.hpp"
#include "tcbm/portfolio.hpp"

namespace tcbm {

// Which checks a command runs and with what tolerances.
struct CheckOptions {
    bool forward = true;
    bool backward = true;
    bool failure_demo = true;  // skipped when no path has a jump
    bool isometry = true;
    bool martingale = true;
    bool conditional_value = true;
    bool freeze_lambda = false;  // scan over W only
    PerturbationKind scan_family = PerturbationKind::scale;
    std::vector<double> scan_epsilons{-0.5, -0.25, 0.25, 0.5};
    std::vector<double> tower_epsilons{-0.25, 0.25};
    double exactness_tolerance = 1e-12;
    double cross_check_tolerance = 1e-10;
    Thresholds thresholds;

    bool operator==(const CheckOptions&) const = default;
};

struct RunConfig {
    MarketScenario scenario;
    CheckOptions checks;
    std::size_t export_paths = 1;  // paths written as CSV by simulate/optimize

    bool operator==(const RunConfig&) const = default;
};

/// Parses the sectioned key-value format:
///
///   # comment
///   [time_change]
///   kind = subordinator_drift
///   intensity = 2
///   [market]
///   p = 2
///   x = 1
///
/// Sections: time_change, market, strategy, simulation, checks. Required keys:
/// time_change.kind, market.p, market.x. Time-change keys are specific to the
/// kind. Lists are comma separated; jumps are written time:size. Throws
/// ConfigError with the offending line number.
RunConfig parse_config(std::string_view text);

// Every key written explicitly, in canonical order; parse_config reads it back equal.
std::string serialize_config(const RunConfig& config);

RunConfig load_config(const std::string& path);

}  // namespace tcbm
