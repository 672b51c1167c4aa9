#include "tcbm/portfolio.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "tcbm/errors.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

std::string to_string(ThetaKind kind) {
    switch (kind) {
        case ThetaKind::constant: return "constant";
        case ThetaKind::linear_in_time: return "linear_in_time";
        case ThetaKind::path_functional: return "path_functional";
    }
    return "unknown";
}

ThetaKind theta_kind_from_string(const std::string& name) {
    for (auto kind : {ThetaKind::constant, ThetaKind::linear_in_time, ThetaKind::path_functional}) {
        if (to_string(kind) == name) return kind;
    }
    throw InvalidSpec("unknown theta kind '" + name + "'");
}

Strategy make_theta(const ThetaSpec& spec) {
    switch (spec.kind) {
        case ThetaKind::constant:
            return Strategy::constant(spec.level);
        case ThetaKind::linear_in_time: {
            const double level = spec.level;
            const double slope = spec.slope;
            return Strategy::time_function([=](double t) { return level + slope * t; },
                                           "theta_linear_in_time");
        }
        case ThetaKind::path_functional: {
            const double level = spec.level;
            const double decay = spec.decay;
            return Strategy::path_functional(
                [=](const CausalView& v) {
                    return level / (1.0 + decay * std::abs(v.m(v.interval())));
                },
                "theta_path_functional");
        }
    }
    throw InvalidSpec("unknown theta kind");
}

void MarketScenario::validate() const {
    if (!(std::isfinite(p) && p > 0.0) || p == 1.0) {
        throw InvalidSpec("p must not be 0 or 1 (power utility needs p in (0,1) or p > 1)");
    }
    if (!(std::isfinite(x) && x > 0.0)) throw InvalidSpec("initial wealth x must be positive");
    if (!(std::isfinite(horizon) && horizon > 0.0)) throw InvalidSpec("horizon must be positive");
    if (!(std::isfinite(market_horizon) && market_horizon > 0.0)) {
        throw InvalidSpec("market horizon must be positive");
    }
    if (!(t >= 0.0 && t < horizon)) throw InvalidSpec("start time t must lie in [0, T)");
    if (n_physical < 2 || n_market < 2) throw InvalidSpec("grid sizes must be at least 2");
    if (n_paths < 1) throw InvalidSpec("n_paths must be at least 1");
}

std::size_t start_index(const MarketScenario& scenario, const PathBundle& bundle) {
    return bundle.grids.physical_index(scenario.t);
}

std::vector<double> optimal_pi(std::span<const double> theta_tilde, double p) {
    if (!(p > 0.0) || p == 1.0) throw InvalidSpec("p must not be 0 or 1");
    std::vector<double> pi(theta_tilde.size());
    for (std::size_t j = 0; j < pi.size(); ++j) pi[j] = theta_tilde[j] / p;
    return pi;
}

BreveResult breve_strategy(const MarketScenario& scenario, const PathBundle& bundle) {
    const auto& g = bundle.grids;
    const auto begin = g.image[start_index(scenario, bundle)];
    const auto end = g.market.size() - 1;
    const auto pi = optimal_pi(bundle.theta_market, scenario.p);
    std::vector<double> drift(pi.size());
    for (std::size_t j = 0; j < pi.size(); ++j) drift[j] = pi[j] * bundle.theta_market[j];

    BreveResult r;
    r.wealth.strategy = "breve";
    r.wealth.start = begin;
    r.wealth.x = scenario.x;
    r.wealth.values = stochastic_exponential(drift, pi, bundle.w, g.market, begin, end);
    for (auto& v : r.wealth.values) v *= scenario.x;

    r.nu.values.assign(g.market_intervals(), 0.0);
    for (std::size_t j = begin; j < end; ++j) r.nu.values[j] = pi[j] * r.wealth.values[j - begin];
    r.nu.lambda_adapted = is_lambda_adapted(r.nu.values, g);
    return r;
}

std::vector<double> hat_strategy(const MarketScenario& scenario, const PathBundle& bundle) {
    const auto& g = bundle.grids;
    const auto start = start_index(scenario, bundle);
    const double p = scenario.p;
    const double drift_coef = (2.0 * p - 1.0) / (2.0 * p * p);

    std::vector<double> theta_over_p(bundle.theta.size());
    for (std::size_t i = 0; i < theta_over_p.size(); ++i) theta_over_p[i] = bundle.theta[i] / p;
    const auto martingale_part = ito_integral_M(theta_over_p, bundle, scenario.t, g.physical.back());

    std::vector<double> nu(g.physical_intervals(), 0.0);
    double drift_part = 0.0;
    for (std::size_t i = start; i < nu.size(); ++i) {
        nu[i] = theta_over_p[i] * scenario.x * std::exp(martingale_part[i - start] + drift_part);
        drift_part += drift_coef * bundle.theta[i] * (bundle.a[i + 1] - bundle.a[i]);
    }
    return nu;
}

std::vector<double> hat_strategy_via_pullback(const MarketScenario& scenario,
                                              const PathBundle& bundle) {
    const auto breve = breve_strategy(scenario, bundle);
    auto nu = pullback(breve.nu, bundle, PullbackMode::unchecked);
    const auto start = start_index(scenario, bundle);
    for (std::size_t i = 0; i < start; ++i) nu[i] = 0.0;
    return nu;
}

WealthPath closed_form_wealth(const MarketScenario& scenario, const PathBundle& bundle) {
    const auto start = start_index(scenario, bundle);
    const double p = scenario.p;
    const double drift_coef = (2.0 * p - 1.0) / (2.0 * p * p);
    WealthPath w;
    w.strategy = "hat_closed_form";
    w.start = start;
    w.x = scenario.x;
    const auto n = bundle.grids.physical.size();
    w.values.assign(n - start, scenario.x);
    double log_value = 0.0;
    for (std::size_t i = start; i + 1 < n; ++i) {
        log_value += bundle.theta[i] / p * (bundle.m[i + 1] - bundle.m[i]) +
                     drift_coef * bundle.theta[i] * (bundle.a[i + 1] - bundle.a[i]);
        w.values[i + 1 - start] = scenario.x * std::exp(log_value);
    }
    return w;
}

WealthPath fraction_wealth(std::span<const double> eta, const PathBundle& bundle,
                           std::size_t start, double x, std::string name) {
    const auto& g = bundle.grids;
    if (eta.size() != g.physical_intervals()) {
        throw PreconditionError("expected one fraction per physical interval");
    }
    WealthPath w;
    w.strategy = std::move(name);
    w.start = start;
    w.x = x;
    const auto n = g.physical.size();
    w.values.assign(n - start, x);
    double log_value = 0.0;
    for (std::size_t i = start; i + 1 < n; ++i) {
        const double e = eta[i];
        log_value += e * (bundle.m[i + 1] - bundle.m[i]) +
                     (e * bundle.theta[i] - 0.5 * e * e) * (g.lambda[i + 1] - g.lambda[i]);
        w.values[i + 1 - start] = x * std::exp(log_value);
    }
    return w;
}

WealthPath wealth(std::span<const double> nu, const PathBundle& bundle, double t, double x,
                  std::string name) {
    const auto& g = bundle.grids;
    if (nu.size() != g.physical_intervals()) {
        throw PreconditionError("expected one strategy value per physical interval");
    }
    const auto start = g.physical_index(t);
    WealthPath w;
    w.strategy = std::move(name);
    w.start = start;
    w.x = x;
    w.values.assign(g.physical.size() - start, x);
    double v = x;
    for (std::size_t i = start; i + 1 < g.physical.size(); ++i) {
        v += nu[i] * (bundle.s[i + 1] - bundle.s[i]);
        w.values[i + 1 - start] = v;
    }
    return w;
}

WealthPath wealth(const Strategy& nu, const PathBundle& bundle, double t, double x) {
    return wealth(strategy_values(nu, bundle), bundle, t, x, nu.name());
}

double power_utility(double v, double p) {
    if (!(p > 0.0) || p == 1.0) throw InvalidSpec("p must not be 0 or 1");
    if (v < 0.0 || std::isnan(v)) {
        throw DomainError("power utility of negative wealth " + format_double(v));
    }
    if (v == 0.0 && p > 1.0) return -std::numeric_limits<double>::infinity();
    return std::pow(v, 1.0 - p) / (1.0 - p);
}

namespace {

double theta_square_integral(std::span<const double> theta_market, std::span<const double> market,
                             double lambda_t, double lambda_T) {
    if (lambda_T < lambda_t) throw DomainError("value formula window is reversed");
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < market.size(); ++j) {
        if (market[j] < lambda_t) continue;
        if (market[j + 1] > lambda_T) break;
        acc += theta_market[j] * theta_market[j] * (market[j + 1] - market[j]);
    }
    return acc;
}

}  // namespace

double value_formula(std::span<const double> theta_market, std::span<const double> market,
                     double lambda_t, double lambda_T, double p, double x) {
    const double alpha_integral =
        (1.0 - p) / (2.0 * p) * theta_square_integral(theta_market, market, lambda_t, lambda_T);
    return std::pow(x, 1.0 - p) / (1.0 - p) * std::exp(alpha_integral);
}

double value_formula_alternative(std::span<const double> theta_market,
                                 std::span<const double> market, double lambda_t,
                                 double lambda_T, double p, double x) {
    return std::pow(x, 1.0 - p) / (2.0 * p) *
           std::exp(theta_square_integral(theta_market, market, lambda_t, lambda_T));
}

double theta_energy_market(const PathBundle& bundle) {
    const auto& g = bundle.grids;
    return theta_square_integral(bundle.theta_market, g.market, 0.0, g.lambda.back());
}

double theta_energy_physical(const PathBundle& bundle) {
    const auto& g = bundle.grids;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < g.physical.size(); ++i) {
        acc += bundle.theta[i] * bundle.theta[i] * (g.lambda[i + 1] - g.lambda[i]);
    }
    return acc;
}

void write_strategy_csv(std::ostream& out, const MarketScenario& scenario,
                        const PathBundle& bundle) {
    const auto nu = hat_strategy(scenario, bundle);
    const auto v = closed_form_wealth(scenario, bundle);
    const auto& g = bundle.grids;
    out << "t,nu_hat,V,U_of_V\n";
    for (std::size_t k = 0; k < v.values.size(); ++k) {
        const auto i = v.start + k;
        const double theta = bundle.theta[std::min(i, nu.size() - 1)];
        const double nu_hat = i < nu.size() ? nu[i] : theta / scenario.p * v.values[k];
        const double row[] = {g.physical[i], nu_hat, v.values[k],
                              power_utility(v.values[k], scenario.p)};
        out << csv_row(std::span<const double>(row));
    }
}

}  // namespace tcbm
