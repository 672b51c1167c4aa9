#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tcbm/paths.hpp"
#include "tcbm/strategy.hpp"

namespace tcbm {

// An integrand on market time, one value per market interval (held on (s_j, s_{j+1}]).
struct MarketIntegrand {
    std::vector<double> values;
    // Asserts constancy on every jump-image interval [Λ(u-), Λ(u)].
    bool lambda_adapted = false;
};

// Checks constancy across every jump image, including the interval ending at Λ(u-).
bool is_lambda_adapted(std::span<const double> market_values, const GridPair& grids);

// Cumulative left-point sums Σ ν_i (M(t_{i+1}) - M(t_i)) from t = a to t = b. The
// first entry is 0 (at a). Jumps of M are picked up by the interval ending at the
// jump time, weighted by ν(u-).
std::vector<double> ito_integral_M(std::span<const double> nu, const PathBundle& bundle,
                                   double a, double b);
std::vector<double> ito_integral_M(const Strategy& nu, const PathBundle& bundle, double a,
                                   double b);

// Cumulative left-point sums of ν̃ against W on the market grid from α to β.
std::vector<double> ito_integral_W(const MarketIntegrand& nu, const PathBundle& bundle,
                                   double alpha, double beta);

// Strategy values on each physical interval.
std::vector<double> strategy_values(const Strategy& nu, const PathBundle& bundle);

// ν̃(s) = ν(Λ←(s)-). Grid-constant, hence Λ-adapted by construction.
MarketIntegrand pushforward(std::span<const double> nu, const PathBundle& bundle);
MarketIntegrand pushforward(const Strategy& nu, const PathBundle& bundle);

// ν̃(s_j) = f(Λ←(s_j)) evaluated pointwise at the left end of every market interval,
// using the exact generalized inverse (no grid-constant approximation).
MarketIntegrand pushforward_pointwise(const Strategy::TimeFunction& f, const PathBundle& bundle);

enum class PullbackMode {
    // Require a verified Λ-adapted integrand (PreconditionError otherwise).
    checked,
    // Sample ν̃ at Λ(t_i) regardless of adaptedness.
    unchecked,
};

// ν_i = ν̃ on the market interval starting at Λ(t_i); one value per physical interval.
std::vector<double> pullback(const MarketIntegrand& nu, const PathBundle& bundle,
                             PullbackMode mode = PullbackMode::checked);

/// exp(Σ π ΔW + Σ π θ̃ Δs - ½ Σ π² Δs) on market points begin..end (inclusive),
/// equal to 1 at `begin`. Inputs are per market interval.
std::vector<double> stochastic_exponential(std::span<const double> drift_density,
                                           std::span<const double> diffusion,
                                           std::span<const double> w,
                                           std::span<const double> market, std::size_t begin,
                                           std::size_t end);

enum class VerificationMode { strict, demonstrate_failure };

std::string to_string(VerificationMode mode);

struct VerificationRecord {
    std::string theorem;  // "forward" or "backward"
    std::size_t path_id = 0;
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_diff = 0.0;
    // abs_diff / max(|lhs|, |rhs|, Σ|terms|). The term scale keeps the ratio
    // meaningful when the integral itself is close to zero.
    double rel_diff = 0.0;
    VerificationMode mode = VerificationMode::strict;
};

// ∫_0^t ν dM on the physical grid against ∫_0^{Λ_t} ν̃ dW with ν̃ the pushforward.
VerificationRecord verify_forward(const PathBundle& bundle, std::span<const double> nu, double t);
VerificationRecord verify_forward(const PathBundle& bundle, const Strategy& nu, double t);
// Same, with the market side evaluated pointwise through the exact inverse; this is
// the discretization sweep for smooth deterministic integrands.
VerificationRecord verify_forward_pointwise(const PathBundle& bundle,
                                            const Strategy::TimeFunction& f, double t);

// ∫_0^{Λ_t} ν̃ dW against ∫_0^t ν̃∘Λ dM. In strict mode a non-Λ-adapted ν̃ is
// rejected with PreconditionError.
VerificationRecord verify_backward(const PathBundle& bundle, const MarketIntegrand& nu, double t,
                                   VerificationMode mode = VerificationMode::strict);

}  // namespace tcbm
