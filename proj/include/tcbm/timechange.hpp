#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tcbm/rng.hpp"

namespace tcbm {

// One node of a time-change path. `left` is the left limit Λ(t-), `right` the
// value Λ(t). A node with `jump == true` must have left < right.
struct Knot {
    double t = 0.0;
    double left = 0.0;
    double right = 0.0;
    bool jump = false;

    bool operator==(const Knot&) const = default;
};

struct Violation {
    std::string kind;
    std::size_t index = 0;
    double t = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(const std::string& kind) const;
};

/// A strictly increasing, right-continuous map Λ : [0, T] -> [0, T_bar] with
/// finitely many jumps.
///
/// Between consecutive knots the path is linear from `right` of the earlier
/// knot to `left` of the later one. Jumps are stored exactly as (left, right)
/// pairs. Instances are immutable; construct through the factories below (which
/// validate) or through the raw constructor and `validate()`.
class TimeChangePath {
public:
    TimeChangePath() = default;
    TimeChangePath(std::vector<Knot> knots, double horizon, double market_horizon);

    // Throws InvalidSpec listing the violations if the path is not valid.
    static TimeChangePath checked(std::vector<Knot> knots, double horizon,
                                  double market_horizon);
    static TimeChangePath identity(double horizon);

    double horizon() const noexcept { return horizon_; }
    double market_horizon() const noexcept { return market_horizon_; }
    double terminal() const noexcept { return knots_.empty() ? 0.0 : knots_.back().right; }
    const std::vector<Knot>& knots() const noexcept { return knots_; }

    // Λ(t), right-continuous.
    double value(double t) const;
    // Λ(t-). Equals value(t) except at jump times; Λ(0-) = 0.
    double left_limit(double t) const;

    /// Generalized inverse inf{t : Λ(t) > s}, and T for s >= Λ(T).
    ///
    /// Exact on knots: inverse(value(t_k)) == t_k and inverse(left_limit(t_k)) == t_k.
    /// Flat at the jump time across [Λ(u-), Λ(u)). Throws DomainError for s outside
    /// [0, T_bar].
    double inverse(double s) const;

    std::vector<double> jump_times() const;
    std::size_t jump_count() const noexcept;

    // Same function with additional knots at `times` (values interpolated). Times
    // that already are knots are left untouched.
    TimeChangePath refined(std::span<const double> times) const;

    ValidationReport validate() const;

    bool operator==(const TimeChangePath&) const = default;

private:
    std::vector<Knot> knots_;
    double horizon_ = 0.0;
    double market_horizon_ = 0.0;
};

ValidationReport validate(const TimeChangePath& path);

struct Jump {
    double time = 0.0;
    double size = 0.0;

    bool operator==(const Jump&) const = default;
};

// Piecewise-linear deterministic time-change. slopes.size() == breakpoints.size() + 1;
// slope k applies on [breakpoints[k-1], breakpoints[k]).
struct PiecewiseSpec {
    std::vector<double> breakpoints;
    std::vector<double> slopes{1.0};
    std::vector<Jump> jumps;
    double horizon = 1.0;
    double market_horizon = 1.0;

    bool operator==(const PiecewiseSpec&) const = default;
};

enum class JumpLaw { exponential, constant };

// Λ_t = drift * t + sum of jumps up to t; jump times are Poisson(intensity).
struct SubordinatorSpec {
    double drift = 1.0;
    double intensity = 0.0;
    JumpLaw law = JumpLaw::exponential;
    double jump_mean = 1.0;
    std::vector<Jump> forced_jumps;
    double horizon = 1.0;
    double market_horizon = 1.0;

    bool operator==(const SubordinatorSpec&) const = default;
};

// Λ_t = ∫ v du with v a mean-reverting square-root diffusion reflected at `floor`.
struct IntegratedDiffusionSpec {
    double mean_reversion = 1.0;
    double long_run_level = 1.0;
    double vol = 0.0;
    double initial_rate = 1.0;
    double floor = 1e-6;
    std::size_t steps = 1024;
    double horizon = 1.0;
    double market_horizon = 1.0;

    bool operator==(const IntegratedDiffusionSpec&) const = default;
};

struct SamplingStats {
    // Paths drawn and discarded because Λ_T exceeded T_bar.
    std::size_t rejections = 0;
};

// Maximum number of draws before a random time-change spec is declared invalid.
inline constexpr std::size_t kMaxSamplingAttempts = 1000;

TimeChangePath build_deterministic(const PiecewiseSpec& spec);
TimeChangePath build_linear(double rate, double horizon, double market_horizon);
TimeChangePath sample_subordinator_drift(const SubordinatorSpec& spec, RngStream& rng,
                                         SamplingStats* stats = nullptr);
TimeChangePath sample_integrated_diffusion(const IntegratedDiffusionSpec& spec, RngStream& rng,
                                           SamplingStats* stats = nullptr);

// Closed-form ∫_0^T v(u) du for the noiseless rate ODE v' = κ(θ - v).
double integrated_rate_ode(double mean_reversion, double long_run_level, double initial_rate,
                           double horizon);

enum class TimeChangeKind { deterministic_piecewise, linear, subordinator_drift, integrated_diffusion };

std::string to_string(TimeChangeKind kind);
TimeChangeKind time_change_kind_from_string(const std::string& name);

// Tagged union of the shipped time-change families, as read from a config file.
struct TimeChangeSpec {
    TimeChangeKind kind = TimeChangeKind::linear;
    double rate = 1.0;
    PiecewiseSpec piecewise;
    SubordinatorSpec subordinator;
    IntegratedDiffusionSpec diffusion;

    bool operator==(const TimeChangeSpec&) const = default;
    bool is_random() const noexcept {
        return kind == TimeChangeKind::subordinator_drift ||
               kind == TimeChangeKind::integrated_diffusion;
    }
};

// Horizons are taken from the arguments, overriding those stored in the sub-specs.
TimeChangePath make_time_change(const TimeChangeSpec& spec, double horizon, double market_horizon,
                                RngStream& rng, SamplingStats* stats = nullptr);

// CSV with header `t,lambda_left,lambda_right`, one row per knot.
void write_csv(std::ostream& out, const TimeChangePath& path);
TimeChangePath read_time_change_csv(std::istream& in, double market_horizon);

}  // namespace tcbm
