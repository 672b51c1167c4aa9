#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <iosfwd>
#include <variant>
#include <vector>

#include "json.hpp"

#include "tcbm/integrate.hpp"
#include "tcbm/paths.hpp"
#include "tcbm/portfolio.hpp"
#include "tcbm/strategy.hpp"
#include "tcbm/timechange.hpp"

namespace tcbm {

unsigned resolve_workers(unsigned requested) noexcept;

/// Runs fn(i) for i in [0, n) on `workers` threads and returns the results in
/// index order. Work is split into contiguous blocks; the output does not depend
/// on the worker count. The first exception thrown by any task is rethrown.
template <class F>
auto parallel_map(std::size_t n, unsigned workers, F&& fn)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using T = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::optional<T>> slots(n);
    const std::size_t threads = std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run_block = [&](std::size_t begin, std::size_t end) {
        try {
            for (std::size_t i = begin; i < end; ++i) slots[i].emplace(fn(i));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (threads <= 1) {
        run_block(0, n);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back(run_block, n * w / threads, n * (w + 1) / threads);
        }
    }
    if (failure) std::rethrow_exception(failure);
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n)
    std::size_t n = 0;
};

// Two-pass mean and standard error, summed in index order.
Estimate estimate(std::span<const double> samples);

// Paired difference a_i - b_i.
Estimate estimate_difference(std::span<const double> a, std::span<const double> b);

/// Multiplier with the same two-sided confidence as `sigmas` standard errors under
/// a normal law, taken from Student's t with n-1 degrees of freedom. Tends to
/// `sigmas` as n grows (3 -> 3.0001 at n = 1e5); larger for small samples.
double effective_sigmas(double sigmas, std::size_t n);

struct Thresholds {
    double equality_sigmas = 3.0;    // |estimate - target| <= k * stderr
    double inequality_sigmas = 2.0;  // lhs >= rhs - k * combined stderr
    double max_inadmissible_fraction = 0.001;

    bool operator==(const Thresholds&) const = default;
};

/// Deterministic ensemble of path bundles for one scenario.
///
/// Path i draws Λ from stream (seed, i, time_change) and W from stream
/// (seed, i, brownian), so any path can be regenerated in isolation. With a
/// frozen time-change every path reuses the Λ of path 0.
class Ensemble {
public:
    Ensemble(MarketScenario scenario, unsigned workers = 1, bool freeze_lambda = false);

    const MarketScenario& scenario() const noexcept { return scenario_; }
    std::size_t size() const noexcept { return scenario_.n_paths; }
    unsigned workers() const noexcept { return workers_; }
    bool frozen() const noexcept { return frozen_.has_value(); }

    TimeChangePath time_change(std::size_t path, SamplingStats* stats = nullptr) const;
    PathBundle bundle(std::size_t path) const;

    // fn(const PathBundle&) over all paths, results in path order.
    template <class F>
    auto map(F&& fn) const {
        return parallel_map(size(), workers_, [&](std::size_t i) { return fn(bundle(i)); });
    }

    // Total draws rejected because Λ_T exceeded T_bar.
    std::size_t rejections() const;

private:
    MarketScenario scenario_;
    unsigned workers_;
    Strategy theta_;
    std::optional<TimeChangePath> frozen_;
};

std::vector<PathBundle> run_ensemble(const MarketScenario& scenario, std::size_t n_paths,
                                     unsigned workers = 1);

enum class PerturbationKind { scale, fraction_shift, time_shift, zero };

std::string to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(const std::string& name);

/// Fraction-of-wealth strategy ψ = η·V(ψ) with η derived from π = θ/p:
///   scale:          η = (1 + ε) π
///   fraction_shift: η = π + ε
///   time_shift:     η(t) = π(t - |ε|)   (information lagged by |ε|)
///   zero:           η = 0
/// `{scale, 0}` is the optimal strategy ν̂.
struct FractionRule {
    PerturbationKind kind = PerturbationKind::scale;
    double parameter = 0.0;
};

std::vector<double> fraction_eta(const FractionRule& rule, const MarketScenario& scenario,
                                 const PathBundle& bundle);

// Either an amount-invested strategy (self-financing wealth) or a fraction rule.
using Policy = std::variant<Strategy, FractionRule>;

double terminal_wealth(const Policy& policy, const MarketScenario& scenario,
                       const PathBundle& bundle);

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string rule;
};

struct EnsembleReport {
    std::string estimator;
    std::size_t n_paths = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<Verdict> verdicts;
    std::uint64_t seed = 0;
    std::size_t n_physical = 0;
    std::size_t n_market = 0;
    double wall_clock_seconds = 0.0;  // left out of to_json unless asked for
    nlohmann::json details = nlohmann::json::object();

    bool pass() const;
};

nlohmann::json to_json(const Verdict& verdict);
nlohmann::json to_json(const EnsembleReport& report, bool include_timing = false);
nlohmann::json to_json(const VerificationRecord& record);

struct ObjectiveEstimate {
    Estimate value;
    std::size_t inadmissible = 0;  // paths with negative terminal wealth, excluded
};

// Sample mean and stderr of U(V_T). Throws InadmissibleError when more than
// `max_inadmissible_fraction` of the paths end with negative wealth.
ObjectiveEstimate estimate_objective(const Ensemble& ensemble, const Policy& policy,
                                     const Thresholds& thresholds = {});

/// ν̂ from its closed form against the pullback of ν̆, and the closed-form wealth
/// against x·E(∫π dX) read at Λ(t_i); both as max relative difference per grid point.
EnsembleReport hat_cross_check(const Ensemble& ensemble, double tolerance);

// Frozen Λ: MC mean of U(V_T(ν̂)) over W against the closed-form conditional value.
EnsembleReport conditional_value_check(const MarketScenario& scenario, unsigned workers = 1,
                                       const Thresholds& thresholds = {});

struct ScanRow {
    double epsilon = 0.0;
    Estimate value;
    bool pass = false;
};

struct ScanTable {
    PerturbationKind kind = PerturbationKind::scale;
    Estimate baseline;  // ν̂
    std::vector<ScanRow> rows;
    bool pass = false;
};

/// J(ν̂) against J(perturbed) with common random numbers across rows. A row
/// passes iff J(ν̂) >= J(row) - k·(stderr_ν̂ + stderr_row).
ScanTable optimality_scan(const MarketScenario& scenario, PerturbationKind kind,
                          std::span<const double> epsilons, bool freeze_lambda,
                          unsigned workers = 1, const Thresholds& thresholds = {});

nlohmann::json to_json(const ScanTable& table);
void write_scan_csv(std::ostream& out, const ScanTable& table);

/// Unconditional MC of U(V_T(ν̂)) over joint (Λ, W) against the Λ-average of
/// the conditional value formula, at t = 0. Also checks that the averaged
/// conditional optimum dominates the best member of a scale family.
EnsembleReport tower_check(const MarketScenario& scenario, unsigned workers = 1,
                           const Thresholds& thresholds = {},
                           std::span<const double> family_epsilons = {});

// Built-in integrands used by the change-of-variable checks.
// Grid-constant causal: tanh(M(t_i)) + cos(Λ(t_{i+1})) / 2.
Strategy reference_integrand();
// Λ-adapted, grid-constant market integrand: pushforward of sin(M(t_i)) + Λ(t_i).
MarketIntegrand reference_market_integrand(const PathBundle& bundle);
// ν̃(s) = s, not Λ-adapted when Λ jumps.
MarketIntegrand identity_market_integrand(const PathBundle& bundle);

std::vector<VerificationRecord> forward_records(const Ensemble& ensemble);
std::vector<VerificationRecord> backward_records(const Ensemble& ensemble);

// Max rel_diff against the threshold.
Verdict exactness_verdict(const std::string& name, std::span<const VerificationRecord> records,
                          double threshold);

// Backward formula on ν̃(s) = s: passes iff mean |Δ| > 5 stderr (the identity fails).
EnsembleReport failure_demonstration(const Ensemble& ensemble);

// E[(∫ν dM)²] against E[∫ν² dΛ] with the reference integrand.
EnsembleReport isometry_check(const Ensemble& ensemble, const Thresholds& thresholds = {});

// E[M_T] = 0, E[M_T²] = E[Λ_T], and E[M_T - M_{T/2} | sign M_{T/2}] = 0.
EnsembleReport martingale_check(const Ensemble& ensemble, const Thresholds& thresholds = {});

}  // namespace tcbm
