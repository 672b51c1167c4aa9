#include <gtest/gtest.h>

#include <cmath>

#include "tcbm/errors.hpp"
#include "tcbm/harness.hpp"
#include "tcbm/integrate.hpp"

using namespace tcbm;

namespace {

TimeChangePath unit_jump_path() {
    PiecewiseSpec spec;
    spec.slopes = {1.0};
    spec.jumps = {{1.0, 1.0}};
    spec.horizon = 2.0;
    spec.market_horizon = 3.0;
    return build_deterministic(spec);
}

PathBundle unit_jump_bundle(std::size_t n_physical, std::size_t n_market, std::uint64_t seed) {
    auto rng = make_stream(seed, 0, StreamPurpose::brownian);
    return assemble_bundle(0, unit_jump_path(), n_physical, n_market, Strategy::constant(0.0), 1.0,
                           rng);
}

std::vector<PathBundle> subordinator_bundles(std::size_t n, std::size_t grid) {
    MarketScenario s;
    s.horizon = 1.0;
    s.market_horizon = 20.0;
    s.time_change.kind = TimeChangeKind::subordinator_drift;
    s.time_change.subordinator.intensity = 4.0;
    s.time_change.subordinator.jump_mean = 0.3;
    s.n_physical = grid;
    s.n_market = grid;
    s.n_paths = n;
    s.seed = 77;
    return run_ensemble(s, n);
}

}  // namespace

TEST(Integrate, UnitIntegrandPicksUpJump) {
    const auto b = unit_jump_bundle(8, 12, 1);
    const std::vector<double> ones(b.grids.physical_intervals(), 1.0);
    const auto integral = ito_integral_M(ones, b, 0.0, 2.0);
    const double w3 = b.w.back();
    EXPECT_NEAR(integral.back(), w3, 1e-14);
    // Across t = 1 the sum contains W(2) - W(1).
    const auto k = b.grids.physical_index(1.0);
    const double jump = b.w[b.grids.market_index(2.0)] - b.w[b.grids.market_index(1.0)];
    EXPECT_NEAR(b.m[k] - b.m[k - 1] - jump,
                b.w[b.grids.market_index(1.0)] - b.w[b.grids.market_index(b.grids.lambda[k - 1])],
                1e-14);
    const auto market = ito_integral_W(pushforward(ones, b), b, 0.0, 3.0);
    EXPECT_NEAR(market.back(), w3, 1e-14);
}

TEST(Integrate, PointwisePushforwardOfIdentity) {
    // ν(t) = t pushed through the unit-jump path: s on [0,1), 1 on [1,2), s-1 on [2,3].
    const auto b = unit_jump_bundle(4, 12, 2);
    const auto nu = pushforward_pointwise([](double t) { return t; }, b);
    const auto& s = b.grids.market;
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
        const double expected = s[j] < 1.0 ? s[j] : (s[j] < 2.0 ? 1.0 : s[j] - 1.0);
        EXPECT_NEAR(nu.values[j], expected, 1e-15) << "s = " << s[j];
    }
    // The left sample before Λ(u-) still reads the pre-jump clock, so the discrete check fails.
    EXPECT_FALSE(nu.lambda_adapted);
}

TEST(Integrate, ForwardIdentityIsExactOnAlignedGrids) {
    const auto nu = reference_integrand();
    for (const auto& b : subordinator_bundles(30, 128)) {
        const auto r = verify_forward(b, nu, 1.0);
        EXPECT_LE(r.rel_diff, 1e-12);
        const auto half = verify_forward(b, nu, 0.5);
        EXPECT_LE(half.rel_diff, 1e-12);
    }
    const auto r = verify_forward(unit_jump_bundle(16, 16, 3), nu, 2.0);
    EXPECT_LE(r.rel_diff, 1e-12);
    EXPECT_EQ(r.theorem, "forward");
}

TEST(Integrate, BackwardIdentityIsExactForAdaptedIntegrands) {
    for (const auto& b : subordinator_bundles(30, 128)) {
        const auto r = verify_backward(b, reference_market_integrand(b), 1.0);
        EXPECT_LE(r.rel_diff, 1e-12);
        EXPECT_EQ(r.mode, VerificationMode::strict);
    }
}

TEST(Integrate, NonAdaptedIntegrandIsRejectedOrFails) {
    const auto b = unit_jump_bundle(8, 12, 4);
    const auto id = identity_market_integrand(b);
    EXPECT_FALSE(id.lambda_adapted);
    EXPECT_FALSE(is_lambda_adapted(id.values, b.grids));
    EXPECT_THROW(verify_backward(b, id, 2.0), PreconditionError);
    EXPECT_THROW(pullback(id, b), PreconditionError);
    const auto r = verify_backward(b, id, 2.0, VerificationMode::demonstrate_failure);
    EXPECT_GT(r.abs_diff, 0.0);
}

TEST(Integrate, PullbackInvertsPushforward) {
    const auto nu = reference_integrand();
    for (const auto& b : subordinator_bundles(10, 64)) {
        const auto values = strategy_values(nu, b);
        const auto back = pullback(pushforward(values, b), b);
        EXPECT_EQ(back, values);
    }
}

TEST(Integrate, StochasticIntegralIsLinear) {
    const auto b = subordinator_bundles(1, 256).front();
    const auto v1 = strategy_values(reference_integrand(), b);
    std::vector<double> v2(v1.size()), combo(v1.size());
    for (std::size_t i = 0; i < v1.size(); ++i) {
        v2[i] = std::cos(static_cast<double>(i));
        combo[i] = 2.0 * v1[i] - 3.0 * v2[i];
    }
    const double i1 = ito_integral_M(v1, b, 0.0, 1.0).back();
    const double i2 = ito_integral_M(v2, b, 0.0, 1.0).back();
    const double ic = ito_integral_M(combo, b, 0.0, 1.0).back();
    EXPECT_NEAR(ic, 2.0 * i1 - 3.0 * i2, 1e-12 * (1.0 + std::abs(ic)));
}

TEST(Integrate, IntegralWindows) {
    const auto b = subordinator_bundles(1, 64).front();
    const auto nu = strategy_values(reference_integrand(), b);
    const auto whole = ito_integral_M(nu, b, 0.0, 1.0);
    const auto first = ito_integral_M(nu, b, 0.0, 0.5);
    const auto second = ito_integral_M(nu, b, 0.5, 1.0);
    EXPECT_EQ(whole.front(), 0.0);
    EXPECT_NEAR(whole.back(), first.back() + second.back(), 1e-13);
    EXPECT_THROW(ito_integral_M(nu, b, 0.5, 0.25), DomainError);
    EXPECT_THROW(ito_integral_M(nu, b, 0.0, 0.3), DomainError);
}

TEST(Integrate, StochasticExponentialConstantCoefficients) {
    // π, θ constant: E_s = exp(π W_s + (πθ - π²/2) s) > 0.
    const auto b = unit_jump_bundle(8, 30, 5);
    const auto& market = b.grids.market;
    const double pi = 0.8, theta = 0.3;
    const std::vector<double> drift(market.size() - 1, pi * theta);
    const std::vector<double> diffusion(market.size() - 1, pi);
    const auto e = stochastic_exponential(drift, diffusion, b.w, market, 0, market.size() - 1);
    for (std::size_t j = 0; j < market.size(); ++j) {
        const double expected = std::exp(pi * b.w[j] + (pi * theta - 0.5 * pi * pi) * market[j]);
        EXPECT_NEAR(e[j], expected, 1e-12 * expected);
        EXPECT_GT(e[j], 0.0);
    }
    EXPECT_THROW(stochastic_exponential(drift, diffusion, b.w, market, 3, 2), PreconditionError);
}
