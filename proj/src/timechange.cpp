#include "tcbm/timechange.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "tcbm/errors.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

namespace {

void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidSpec(message);
}

void check_horizons(double horizon, double market_horizon) {
    require(std::isfinite(horizon) && horizon > 0.0, "horizon T must be positive");
    require(std::isfinite(market_horizon) && market_horizon > 0.0,
            "market horizon T_bar must be positive");
}

std::string describe(const ValidationReport& report) {
    std::ostringstream out;
    out << "invalid time-change path:";
    for (const auto& v : report.violations) {
        out << " [" << v.kind << " at knot " << v.index << ", t=" << v.t;
        if (!v.detail.empty()) out << ": " << v.detail;
        out << "]";
    }
    return out.str();
}

// Sorted jump list with coincident times merged.
std::vector<Jump> merge_jumps(std::vector<Jump> jumps) {
    std::sort(jumps.begin(), jumps.end(),
              [](const Jump& a, const Jump& b) { return a.time < b.time; });
    std::vector<Jump> merged;
    for (const auto& j : jumps) {
        if (!merged.empty() && merged.back().time == j.time) {
            merged.back().size += j.size;
        } else {
            merged.push_back(j);
        }
    }
    return merged;
}

std::vector<Knot> drift_plus_jumps(double drift, const std::vector<Jump>& jumps, double horizon) {
    std::vector<Knot> knots;
    knots.reserve(jumps.size() + 2);
    knots.push_back({0.0, 0.0, 0.0, false});
    double cumulative = 0.0;
    for (const auto& j : jumps) {
        const double left = drift * j.time + cumulative;
        cumulative += j.size;
        knots.push_back({j.time, left, left + j.size, true});
    }
    if (knots.back().t < horizon) {
        const double v = drift * horizon + cumulative;
        knots.push_back({horizon, v, v, false});
    }
    return knots;
}

}  // namespace

bool ValidationReport::has(const std::string& kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.kind == kind; });
}

TimeChangePath::TimeChangePath(std::vector<Knot> knots, double horizon, double market_horizon)
    : knots_(std::move(knots)), horizon_(horizon), market_horizon_(market_horizon) {}

TimeChangePath TimeChangePath::checked(std::vector<Knot> knots, double horizon,
                                       double market_horizon) {
    TimeChangePath path(std::move(knots), horizon, market_horizon);
    auto report = path.validate();
    if (!report.ok()) throw InvalidSpec(describe(report));
    return path;
}

TimeChangePath TimeChangePath::identity(double horizon) {
    return build_linear(1.0, horizon, horizon);
}

double TimeChangePath::value(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
        throw DomainError("time-change evaluated outside [0, T]: t=" + format_double(t));
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double v, const Knot& k) { return v < k.t; });
    const Knot& lo = *(it - 1);
    if (t == lo.t || it == knots_.end()) return lo.right;
    const Knot& hi = *it;
    return lo.right + (t - lo.t) / (hi.t - lo.t) * (hi.left - lo.right);
}

double TimeChangePath::left_limit(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
        throw DomainError("time-change evaluated outside [0, T]: t=" + format_double(t));
    }
    auto it = std::lower_bound(knots_.begin(), knots_.end(), t,
                               [](const Knot& k, double v) { return k.t < v; });
    if (it != knots_.end() && it->t == t) return it->left;
    return value(t);
}

double TimeChangePath::inverse(double s) const {
    if (!(s >= 0.0 && s <= market_horizon_)) {
        throw DomainError("generalized inverse evaluated outside [0, T_bar]: s=" +
                          format_double(s));
    }
    if (s >= terminal()) return horizon_;
    // First knot whose value exceeds s; knots_[0].right == 0 <= s so it is never the first.
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                               [](double v, const Knot& k) { return v < k.right; });
    const Knot& hi = *it;
    const Knot& lo = *(it - 1);
    if (s >= hi.left) return hi.t;
    if (s == lo.right) return lo.t;
    const double t = lo.t + (s - lo.right) / (hi.left - lo.right) * (hi.t - lo.t);
    return std::clamp(t, lo.t, hi.t);
}

std::vector<double> TimeChangePath::jump_times() const {
    std::vector<double> times;
    for (const auto& k : knots_) {
        if (k.jump) times.push_back(k.t);
    }
    return times;
}

std::size_t TimeChangePath::jump_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(knots_.begin(), knots_.end(), [](const Knot& k) { return k.jump; }));
}

TimeChangePath TimeChangePath::refined(std::span<const double> times) const {
    std::vector<Knot> merged;
    merged.reserve(knots_.size() + times.size());
    std::size_t k = 0;
    for (double t : times) {
        while (k < knots_.size() && knots_[k].t < t) merged.push_back(knots_[k++]);
        if (k < knots_.size() && knots_[k].t == t) continue;
        const double v = value(t);
        merged.push_back({t, v, v, false});
    }
    while (k < knots_.size()) merged.push_back(knots_[k++]);
    return TimeChangePath(std::move(merged), horizon_, market_horizon_);
}

ValidationReport TimeChangePath::validate() const {
    ValidationReport report;
    auto add = [&](std::string kind, std::size_t i, std::string detail = {}) {
        const double t = i < knots_.size() ? knots_[i].t : 0.0;
        report.violations.push_back({std::move(kind), i, t, std::move(detail)});
    };
    if (knots_.size() < 2) {
        add("too few knots", 0, "need at least the endpoints 0 and T");
        return report;
    }
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const auto& k = knots_[i];
        if (!std::isfinite(k.t) || !std::isfinite(k.left) || !std::isfinite(k.right)) {
            add("non-finite value", i);
        }
    }
    if (knots_.front().t != 0.0) add("does not start at 0", 0);
    if (knots_.front().left != 0.0 || knots_.front().right != 0.0) {
        add("nonzero origin", 0, "Λ(0) must be 0");
    }
    if (knots_.back().t != horizon_) add("horizon mismatch", knots_.size() - 1);
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const auto& k = knots_[i];
        if (k.jump && k.left == k.right) add("zero jump", i);
        if (k.right < k.left) add("negative jump", i);
        if (!k.jump && k.left != k.right && k.right > k.left) add("undeclared jump", i);
        if (i + 1 < knots_.size()) {
            const auto& next = knots_[i + 1];
            if (!(next.t > k.t)) add("unordered knots", i + 1);
            if (!(next.left > k.right)) {
                add("not strictly increasing", i + 1,
                    format_double(k.right) + " followed by " + format_double(next.left));
            }
        }
    }
    if (terminal() > market_horizon_) {
        add("exceeds market horizon", knots_.size() - 1,
            "Λ(T)=" + format_double(terminal()) + " > T_bar=" + format_double(market_horizon_));
    }
    return report;
}

ValidationReport validate(const TimeChangePath& path) { return path.validate(); }

TimeChangePath build_deterministic(const PiecewiseSpec& spec) {
    check_horizons(spec.horizon, spec.market_horizon);
    require(spec.slopes.size() == spec.breakpoints.size() + 1,
            "piecewise time-change needs exactly one more slope than breakpoints");
    for (double s : spec.slopes) require(std::isfinite(s) && s > 0.0, "slopes must be positive");
    double previous = 0.0;
    for (double b : spec.breakpoints) {
        require(b > previous && b < spec.horizon,
                "breakpoints must be strictly increasing inside (0, T)");
        previous = b;
    }
    for (const auto& j : spec.jumps) {
        require(std::isfinite(j.size) && j.size > 0.0, "jump sizes must be positive");
        require(j.time > 0.0 && j.time <= spec.horizon,
                "jump times must lie in (0, T]; Λ(0) must be 0");
    }
    const auto jumps = merge_jumps(spec.jumps);

    std::vector<double> times{0.0, spec.horizon};
    times.insert(times.end(), spec.breakpoints.begin(), spec.breakpoints.end());
    for (const auto& j : jumps) times.push_back(j.time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<Knot> knots;
    knots.reserve(times.size());
    knots.push_back({0.0, 0.0, 0.0, false});
    std::size_t jump_index = 0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double start = times[i - 1];
        const double t = times[i];
        const auto segment = static_cast<std::size_t>(
            std::upper_bound(spec.breakpoints.begin(), spec.breakpoints.end(), start) -
            spec.breakpoints.begin());
        const double left = knots.back().right + spec.slopes[segment] * (t - start);
        double right = left;
        bool jump = false;
        if (jump_index < jumps.size() && jumps[jump_index].time == t) {
            right += jumps[jump_index++].size;
            jump = true;
        }
        knots.push_back({t, left, right, jump});
    }
    return TimeChangePath::checked(std::move(knots), spec.horizon, spec.market_horizon);
}

TimeChangePath build_linear(double rate, double horizon, double market_horizon) {
    check_horizons(horizon, market_horizon);
    require(std::isfinite(rate) && rate > 0.0, "linear time-change rate must be positive");
    std::vector<Knot> knots{{0.0, 0.0, 0.0, false}, {horizon, rate * horizon, rate * horizon, false}};
    return TimeChangePath::checked(std::move(knots), horizon, market_horizon);
}

TimeChangePath sample_subordinator_drift(const SubordinatorSpec& spec, RngStream& rng,
                                         SamplingStats* stats) {
    check_horizons(spec.horizon, spec.market_horizon);
    require(std::isfinite(spec.drift) && spec.drift > 0.0,
            "subordinator drift b must be positive (pure-jump paths are not strictly increasing)");
    require(std::isfinite(spec.intensity) && spec.intensity >= 0.0,
            "jump intensity must be non-negative");
    require(std::isfinite(spec.jump_mean) && spec.jump_mean > 0.0,
            "jump-size mean must be positive");
    for (const auto& j : spec.forced_jumps) {
        require(std::isfinite(j.size) && j.size > 0.0, "forced jump sizes must be positive");
        require(j.time > 0.0 && j.time <= spec.horizon, "forced jump times must lie in (0, T]");
    }

    const double expected_jumps = spec.intensity * spec.horizon;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> size_law(1.0 / spec.jump_mean);

    for (std::size_t attempt = 0; attempt < kMaxSamplingAttempts; ++attempt) {
        std::size_t count = 0;
        if (expected_jumps > 0.0) {
            std::poisson_distribution<std::size_t> poisson(expected_jumps);
            count = poisson(rng);
        }
        std::vector<Jump> jumps = spec.forced_jumps;
        jumps.reserve(jumps.size() + count);
        for (std::size_t i = 0; i < count; ++i) {
            // 1 - U lies in (0, 1], so jump times land in (0, T].
            const double time = spec.horizon * (1.0 - unit(rng));
            double size = spec.jump_mean;
            if (spec.law == JumpLaw::exponential) {
                do {
                    size = size_law(rng);
                } while (!(size > 0.0));
            }
            jumps.push_back({time, size});
        }
        auto knots = drift_plus_jumps(spec.drift, merge_jumps(std::move(jumps)), spec.horizon);
        if (knots.back().right <= spec.market_horizon) {
            return TimeChangePath(std::move(knots), spec.horizon, spec.market_horizon);
        }
        if (stats) ++stats->rejections;
    }
    throw InvalidSpec("subordinator paths exceeded T_bar in " +
                      std::to_string(kMaxSamplingAttempts) + " consecutive draws");
}

TimeChangePath sample_integrated_diffusion(const IntegratedDiffusionSpec& spec, RngStream& rng,
                                           SamplingStats* stats) {
    check_horizons(spec.horizon, spec.market_horizon);
    require(std::isfinite(spec.floor) && spec.floor > 0.0, "rate floor must be positive");
    require(std::isfinite(spec.initial_rate) && spec.initial_rate >= spec.floor,
            "initial rate must be at least the floor");
    require(std::isfinite(spec.mean_reversion) && spec.mean_reversion >= 0.0,
            "mean reversion must be non-negative");
    require(std::isfinite(spec.long_run_level) && spec.long_run_level >= 0.0,
            "long-run rate level must be non-negative");
    require(std::isfinite(spec.vol) && spec.vol >= 0.0, "rate volatility must be non-negative");
    require(spec.steps >= 1, "integrated diffusion needs at least one step");

    const auto n = spec.steps;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t attempt = 0; attempt < kMaxSamplingAttempts; ++attempt) {
        std::vector<Knot> knots;
        knots.reserve(n + 1);
        knots.push_back({0.0, 0.0, 0.0, false});
        double rate = spec.initial_rate;
        double lambda = 0.0;
        double t_prev = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            const double t = k == n ? spec.horizon
                                    : spec.horizon * static_cast<double>(k) / static_cast<double>(n);
            const double dt = t - t_prev;
            lambda += rate * dt;
            knots.push_back({t, lambda, lambda, false});
            rate += spec.mean_reversion * (spec.long_run_level - rate) * dt;
            if (spec.vol > 0.0) rate += spec.vol * std::sqrt(std::max(rate, 0.0) * dt) * normal(rng);
            if (rate < spec.floor) rate = 2.0 * spec.floor - rate;  // reflect
            t_prev = t;
        }
        if (lambda <= spec.market_horizon) {
            return TimeChangePath(std::move(knots), spec.horizon, spec.market_horizon);
        }
        if (stats) ++stats->rejections;
    }
    throw InvalidSpec("integrated-diffusion paths exceeded T_bar in " +
                      std::to_string(kMaxSamplingAttempts) + " consecutive draws");
}

double integrated_rate_ode(double mean_reversion, double long_run_level, double initial_rate,
                           double horizon) {
    if (mean_reversion == 0.0) return initial_rate * horizon;
    return long_run_level * horizon + (initial_rate - long_run_level) *
                                          (1.0 - std::exp(-mean_reversion * horizon)) /
                                          mean_reversion;
}

std::string to_string(TimeChangeKind kind) {
    switch (kind) {
        case TimeChangeKind::deterministic_piecewise: return "deterministic_piecewise";
        case TimeChangeKind::linear: return "linear";
        case TimeChangeKind::subordinator_drift: return "subordinator_drift";
        case TimeChangeKind::integrated_diffusion: return "integrated_diffusion";
    }
    return "unknown";
}

TimeChangeKind time_change_kind_from_string(const std::string& name) {
    for (auto kind : {TimeChangeKind::deterministic_piecewise, TimeChangeKind::linear,
                      TimeChangeKind::subordinator_drift, TimeChangeKind::integrated_diffusion}) {
        if (to_string(kind) == name) return kind;
    }
    throw InvalidSpec("unknown time-change kind '" + name + "'");
}

TimeChangePath make_time_change(const TimeChangeSpec& spec, double horizon, double market_horizon,
                                RngStream& rng, SamplingStats* stats) {
    switch (spec.kind) {
        case TimeChangeKind::linear:
            return build_linear(spec.rate, horizon, market_horizon);
        case TimeChangeKind::deterministic_piecewise: {
            auto s = spec.piecewise;
            s.horizon = horizon;
            s.market_horizon = market_horizon;
            return build_deterministic(s);
        }
        case TimeChangeKind::subordinator_drift: {
            auto s = spec.subordinator;
            s.horizon = horizon;
            s.market_horizon = market_horizon;
            return sample_subordinator_drift(s, rng, stats);
        }
        case TimeChangeKind::integrated_diffusion: {
            auto s = spec.diffusion;
            s.horizon = horizon;
            s.market_horizon = market_horizon;
            return sample_integrated_diffusion(s, rng, stats);
        }
    }
    throw InvalidSpec("unknown time-change kind");
}

void write_csv(std::ostream& out, const TimeChangePath& path) {
    out << "t,lambda_left,lambda_right\n";
    for (const auto& k : path.knots()) {
        const double row[] = {k.t, k.left, k.right};
        out << csv_row(std::span<const double>(row));
    }
}

TimeChangePath read_time_change_csv(std::istream& in, double market_horizon) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "t,lambda_left,lambda_right") {
        throw InvalidSpec("time-change CSV must start with header 't,lambda_left,lambda_right'");
    }
    std::vector<Knot> knots;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != 3) {
            throw InvalidSpec("time-change CSV line " + std::to_string(line_no) +
                              ": expected 3 columns");
        }
        try {
            Knot k{parse_double(cells[0]), parse_double(cells[1]), parse_double(cells[2]), false};
            k.jump = k.left != k.right;
            knots.push_back(k);
        } catch (const std::invalid_argument& e) {
            throw InvalidSpec("time-change CSV line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    const double horizon = knots.empty() ? 0.0 : knots.back().t;
    return TimeChangePath(std::move(knots), horizon, market_horizon);
}

}  // namespace tcbm
