#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tcbm/integrate.hpp"
#include "tcbm/paths.hpp"
#include "tcbm/strategy.hpp"
#include "tcbm/timechange.hpp"

namespace tcbm {

enum class ThetaKind {
    constant,        // θ ≡ level
    linear_in_time,  // θ(t) = level + slope * t
    path_functional, // θ = level / (1 + decay * |M(s-)|)
};

std::string to_string(ThetaKind kind);
ThetaKind theta_kind_from_string(const std::string& name);

struct ThetaSpec {
    ThetaKind kind = ThetaKind::constant;
    double level = 0.0;
    double slope = 0.0;
    double decay = 0.0;

    bool operator==(const ThetaSpec&) const = default;
    // θ̃ is then a deterministic function of the Λ path.
    bool independent_of_m() const noexcept { return kind != ThetaKind::path_functional; }
};

Strategy make_theta(const ThetaSpec& spec);

struct MarketScenario {
    double p = 2.0;  // risk aversion, p > 0 and p != 1
    double x = 1.0;  // initial wealth
    double t = 0.0;  // start time, a physical grid point
    double horizon = 1.0;
    double market_horizon = 1.0;
    double s0 = 1.0;
    ThetaSpec theta;
    TimeChangeSpec time_change;
    std::size_t n_physical = 4096;
    std::size_t n_market = 4096;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;

    bool operator==(const MarketScenario&) const = default;
    // Throws InvalidSpec when p ∉ (0,∞)∖{1}, x <= 0, t ∉ [0, T) or T_bar <= 0.
    void validate() const;
};

// Index of the scenario start time on the bundle's physical grid.
std::size_t start_index(const MarketScenario& scenario, const PathBundle& bundle);

struct WealthPath {
    std::string strategy;
    std::size_t start = 0;       // grid index of the start time
    double x = 0.0;
    std::vector<double> values;  // grid points start, start+1, ...
};

std::vector<double> optimal_pi(std::span<const double> theta_tilde, double p);

struct BreveResult {
    MarketIntegrand nu;  // ν̆ per market interval; zero before Λ_t
    WealthPath wealth;   // x·E(∫π dX) on market points from Λ_t to T_bar
};

/// ν̆ = π·V with V = x·E(∫π dX), π = θ̃/p, rebalanced on every market interval.
///
/// `nu.lambda_adapted` reports the actual constancy check. V moves with W inside
/// a jump image of Λ, so ν̆ is Λ-adapted only when Λ has no jumps after t.
BreveResult breve_strategy(const MarketScenario& scenario, const PathBundle& bundle);

/// ν̂ evaluated directly in physical time:
///   ν̂_i = (θ_i/p) x exp{ ∫_t^{t_i} (θ/p) dM + ((2p-1)/(2p²)) ∫_t^{t_i} θ dA }.
/// Zero before the start index.
std::vector<double> hat_strategy(const MarketScenario& scenario, const PathBundle& bundle);

// ν̆ sampled at Λ(t_i), i.e. ν̆∘Λ on the physical grid.
std::vector<double> hat_strategy_via_pullback(const MarketScenario& scenario,
                                              const PathBundle& bundle);

// The exponential factor of ν̂: x exp{ ∫ (θ/p) dM + ((2p-1)/(2p²)) ∫ θ dA }.
WealthPath closed_form_wealth(const MarketScenario& scenario, const PathBundle& bundle);

/// Wealth of a fraction-of-wealth strategy ψ = η·V with η constant on each
/// physical interval, rebalanced continuously in market time:
///   log(V/x) = Σ η_i ΔM_i + Σ (η_i θ_i - ½ η_i²) ΔΛ_i.
/// Strictly positive.
WealthPath fraction_wealth(std::span<const double> eta, const PathBundle& bundle,
                           std::size_t start, double x, std::string name = "fraction");

// Self-financing wealth x + Σ ν_i ΔS_i of an amount-invested strategy.
WealthPath wealth(std::span<const double> nu, const PathBundle& bundle, double t, double x,
                  std::string name = "strategy");
WealthPath wealth(const Strategy& nu, const PathBundle& bundle, double t, double x);

// x^{1-p}/(1-p); -inf at v == 0 for p > 1. DomainError for v < 0.
double power_utility(double v, double p);

/// x^{1-p}/(1-p) · exp( Σ ((1-p)/(2p)) θ̃² Δs over [Λ_t, Λ_T] ).
double value_formula(std::span<const double> theta_market, std::span<const double> market,
                     double lambda_t, double lambda_T, double p, double x);

// The alternative expression x^{1-p}/(2p) · exp( Σ θ̃² Δs ), kept for comparison.
double value_formula_alternative(std::span<const double> theta_market,
                                 std::span<const double> market, double lambda_t,
                                 double lambda_T, double p, double x);

// Σ θ̃² Δs over [0, Λ_T] and Σ θ² ΔΛ over [0, T]; equal on aligned grids.
double theta_energy_market(const PathBundle& bundle);
double theta_energy_physical(const PathBundle& bundle);

// Columns t,nu_hat,V,U_of_V from the start time on; V is the closed-form wealth.
void write_strategy_csv(std::ostream& out, const MarketScenario& scenario,
                        const PathBundle& bundle);

}  // namespace tcbm
