#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "tcbm/errors.hpp"
#include "tcbm/harness.hpp"
#include "tcbm/portfolio.hpp"

using namespace tcbm;

namespace {

MarketScenario base_scenario() {
    MarketScenario s;
    s.p = 2.0;
    s.x = 1.0;
    s.theta = {ThetaKind::constant, 1.0, 0.0, 0.0};
    s.n_physical = 64;
    s.n_market = 64;
    return s;
}

MarketScenario jumpy_scenario() {
    auto s = base_scenario();
    s.market_horizon = 20.0;
    s.time_change.kind = TimeChangeKind::subordinator_drift;
    s.time_change.subordinator.intensity = 4.0;
    s.time_change.subordinator.jump_mean = 0.3;
    return s;
}

PathBundle unit_jump_bundle(double theta) {
    PiecewiseSpec spec;
    spec.slopes = {1.0};
    spec.jumps = {{1.0, 1.0}};
    spec.horizon = 2.0;
    spec.market_horizon = 3.0;
    auto rng = make_stream(1, 0, StreamPurpose::brownian);
    return assemble_bundle(0, build_deterministic(spec), 8, 12, Strategy::constant(theta), 1.0,
                           rng);
}

}  // namespace

TEST(Portfolio, ScenarioValidation) {
    auto s = base_scenario();
    s.p = 1.0;
    EXPECT_THROW(s.validate(), InvalidSpec);
    s.p = 0.0;
    EXPECT_THROW(s.validate(), InvalidSpec);
    s.p = 2.0;
    s.x = 0.0;
    EXPECT_THROW(s.validate(), InvalidSpec);
    s.x = 1.0;
    s.t = 1.0;
    EXPECT_THROW(s.validate(), InvalidSpec);
    s.t = 0.0;
    EXPECT_NO_THROW(s.validate());
}

TEST(Portfolio, PowerUtility) {
    EXPECT_DOUBLE_EQ(power_utility(4.0, 2.0), -0.25);
    EXPECT_DOUBLE_EQ(power_utility(4.0, 0.5), 4.0);
    EXPECT_DOUBLE_EQ(power_utility(1.0, 3.0), -0.5);
    EXPECT_EQ(power_utility(0.0, 2.0), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(power_utility(0.0, 0.5), 0.0);
    EXPECT_THROW(power_utility(-1e-9, 2.0), DomainError);
    EXPECT_THROW(power_utility(1.0, 1.0), InvalidSpec);
}

TEST(Portfolio, ValueFormulaOracles) {
    // θ̃ ≡ 1, p = 2, x = 1 over the unit-jump path, window [0, 3]: -exp(-3/4).
    const auto b = unit_jump_bundle(1.0);
    EXPECT_NEAR(value_formula(b.theta_market, b.grids.market, 0.0, 3.0, 2.0, 1.0),
                -0.4723665527410147, 1e-15);
    // The alternative expression x^{1-p}/(2p)·exp(∫θ̃²) = e³/4.
    EXPECT_NEAR(value_formula_alternative(b.theta_market, b.grids.market, 0.0, 3.0, 2.0, 1.0),
                5.021384230796917, 1e-13);
    // p = 1/2, θ̃ ≡ 0.5, identity Λ on [0, 1]: 2·exp(1/8).
    auto rng = make_stream(1, 0, StreamPurpose::brownian);
    const auto id = assemble_bundle(0, TimeChangePath::identity(1.0), 16, 16,
                                    Strategy::constant(0.5), 1.0, rng);
    EXPECT_NEAR(value_formula(id.theta_market, id.grids.market, 0.0, 1.0, 0.5, 1.0),
                2.2662969061336526, 1e-14);
    EXPECT_THROW(value_formula(id.theta_market, id.grids.market, 0.5, 0.25, 0.5, 1.0),
                 DomainError);
}

TEST(Portfolio, ZeroThetaKeepsWealthConstant) {
    auto s = jumpy_scenario();
    s.theta.level = 0.0;
    for (const auto& b : run_ensemble(s, 5)) {
        for (double v : closed_form_wealth(s, b).values) EXPECT_EQ(v, s.x);
        for (double v : hat_strategy(s, b)) EXPECT_EQ(v, 0.0);
        for (double v : wealth(hat_strategy(s, b), b, 0.0, s.x).values) EXPECT_EQ(v, s.x);
    }
}

TEST(Portfolio, DirectFormMatchesPullback) {
    auto s = jumpy_scenario();
    s.theta = {ThetaKind::path_functional, 0.8, 0.0, 0.5};
    s.t = 0.25;
    for (const auto& b : run_ensemble(s, 20)) {
        const auto direct = hat_strategy(s, b);
        const auto pulled = hat_strategy_via_pullback(s, b);
        ASSERT_EQ(direct.size(), pulled.size());
        for (std::size_t i = 0; i < direct.size(); ++i) {
            const double scale = std::max(std::abs(direct[i]), 1e-300);
            EXPECT_LE(std::abs(direct[i] - pulled[i]) / scale, 1e-10);
        }
        for (std::size_t i = 0; i < start_index(s, b); ++i) EXPECT_EQ(direct[i], 0.0);
    }
}

TEST(Portfolio, MarketStrategyAdaptedOnlyWithoutJumps) {
    auto continuous = base_scenario();
    continuous.time_change.kind = TimeChangeKind::linear;
    continuous.time_change.rate = 0.8;
    for (const auto& b : run_ensemble(continuous, 3)) {
        EXPECT_TRUE(breve_strategy(continuous, b).nu.lambda_adapted);
    }
    auto forced = jumpy_scenario();
    forced.time_change.subordinator.forced_jumps = {{0.5, 0.5}};
    for (const auto& b : run_ensemble(forced, 3)) {
        EXPECT_FALSE(breve_strategy(forced, b).nu.lambda_adapted);
    }
}

TEST(Portfolio, FractionWealthAtOptimumIsClosedForm) {
    const auto s = jumpy_scenario();
    for (const auto& b : run_ensemble(s, 10)) {
        const auto closed = closed_form_wealth(s, b);
        const auto eta = fraction_eta({PerturbationKind::scale, 0.0}, s, b);
        const auto frac = fraction_wealth(eta, b, 0, s.x);
        ASSERT_EQ(closed.values.size(), frac.values.size());
        for (std::size_t k = 0; k < frac.values.size(); ++k) {
            EXPECT_NEAR(frac.values[k], closed.values[k], 1e-12 * closed.values[k]);
            EXPECT_GT(frac.values[k], 0.0);
        }
    }
}

TEST(Portfolio, SelfFinancingWealthConvergesWithoutJumps) {
    auto s = base_scenario();
    s.n_physical = 4096;
    s.n_market = 4096;
    double worst = 0.0;
    for (const auto& b : run_ensemble(s, 10)) {
        const double closed = closed_form_wealth(s, b).values.back();
        const double euler = wealth(hat_strategy(s, b), b, 0.0, s.x).values.back();
        worst = std::max(worst, std::abs(euler - closed) / closed);
    }
    EXPECT_LT(worst, 0.05);
}

TEST(Portfolio, ThetaEnergyAgreesAcrossClocks) {
    auto s = jumpy_scenario();
    s.theta = {ThetaKind::linear_in_time, 0.3, 2.0, 0.0};
    for (const auto& b : run_ensemble(s, 10)) {
        EXPECT_NEAR(theta_energy_market(b), theta_energy_physical(b),
                    1e-12 * theta_energy_physical(b));
    }
}

TEST(Portfolio, ThetaKinds) {
    for (auto kind : {ThetaKind::constant, ThetaKind::linear_in_time, ThetaKind::path_functional}) {
        EXPECT_EQ(theta_kind_from_string(to_string(kind)), kind);
    }
    EXPECT_FALSE((ThetaSpec{ThetaKind::path_functional, 1, 0, 1}).independent_of_m());
    EXPECT_TRUE((ThetaSpec{ThetaKind::linear_in_time, 1, 1, 0}).independent_of_m());
}

TEST(Portfolio, StrategyCsv) {
    const auto s = jumpy_scenario();
    const auto b = run_ensemble(s, 1).front();
    std::ostringstream out;
    write_strategy_csv(out, s, b);
    const auto text = out.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,nu_hat,V,U_of_V");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'),
              static_cast<long>(b.grids.physical.size() + 1));
}
