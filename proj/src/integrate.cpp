#include "tcbm/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "tcbm/errors.hpp"

namespace tcbm {

namespace {

struct SumWithScale {
    double sum = 0.0;
    double scale = 0.0;

    void add(double term) {
        sum += term;
        scale += std::abs(term);
    }
};

VerificationRecord make_record(std::string theorem, const PathBundle& bundle, double t,
                               const SumWithScale& lhs, const SumWithScale& rhs,
                               VerificationMode mode) {
    VerificationRecord r;
    r.theorem = std::move(theorem);
    r.path_id = bundle.path_id;
    r.t = t;
    r.lhs = lhs.sum;
    r.rhs = rhs.sum;
    r.abs_diff = std::abs(lhs.sum - rhs.sum);
    const double denom = std::max({std::abs(lhs.sum), std::abs(rhs.sum), lhs.scale, rhs.scale});
    r.rel_diff = denom > 0.0 ? r.abs_diff / denom : 0.0;
    r.mode = mode;
    return r;
}

SumWithScale physical_sum(std::span<const double> nu, const PathBundle& bundle, std::size_t end) {
    SumWithScale s;
    for (std::size_t i = 0; i < end; ++i) s.add(nu[i] * (bundle.m[i + 1] - bundle.m[i]));
    return s;
}

SumWithScale market_sum(std::span<const double> nu, const PathBundle& bundle, std::size_t end) {
    SumWithScale s;
    for (std::size_t j = 0; j < end; ++j) s.add(nu[j] * (bundle.w[j + 1] - bundle.w[j]));
    return s;
}

void check_physical_size(std::span<const double> nu, const PathBundle& bundle) {
    if (nu.size() != bundle.grids.physical_intervals()) {
        throw PreconditionError("expected one integrand value per physical interval");
    }
}

void check_market_size(std::span<const double> nu, const PathBundle& bundle) {
    if (nu.size() != bundle.grids.market_intervals()) {
        throw PreconditionError("expected one integrand value per market interval");
    }
}

}  // namespace

bool is_lambda_adapted(std::span<const double> market_values, const GridPair& grids) {
    for (std::size_t u = 1; u < grids.physical.size(); ++u) {
        if (grids.image_left[u] == grids.image[u]) continue;
        const std::size_t first = grids.image_left[u] - 1;
        for (std::size_t j = first + 1; j < grids.image[u]; ++j) {
            if (market_values[j] != market_values[first]) return false;
        }
    }
    return true;
}

std::vector<double> ito_integral_M(std::span<const double> nu, const PathBundle& bundle,
                                   double a, double b) {
    check_physical_size(nu, bundle);
    const auto ia = bundle.grids.physical_index(a);
    const auto ib = bundle.grids.physical_index(b);
    if (ib < ia) throw DomainError("integration window is reversed");
    std::vector<double> out(ib - ia + 1, 0.0);
    double acc = 0.0;
    for (std::size_t i = ia; i < ib; ++i) {
        acc += nu[i] * (bundle.m[i + 1] - bundle.m[i]);
        out[i - ia + 1] = acc;
    }
    return out;
}

std::vector<double> ito_integral_M(const Strategy& nu, const PathBundle& bundle, double a,
                                   double b) {
    return ito_integral_M(strategy_values(nu, bundle), bundle, a, b);
}

std::vector<double> ito_integral_W(const MarketIntegrand& nu, const PathBundle& bundle,
                                   double alpha, double beta) {
    check_market_size(nu.values, bundle);
    const auto ja = bundle.grids.market_index(alpha);
    const auto jb = bundle.grids.market_index(beta);
    if (jb < ja) throw DomainError("integration window is reversed");
    std::vector<double> out(jb - ja + 1, 0.0);
    double acc = 0.0;
    for (std::size_t j = ja; j < jb; ++j) {
        acc += nu.values[j] * (bundle.w[j + 1] - bundle.w[j]);
        out[j - ja + 1] = acc;
    }
    return out;
}

std::vector<double> strategy_values(const Strategy& nu, const PathBundle& bundle) {
    const auto& g = bundle.grids;
    return evaluate_on_grid(nu, g.physical, g.lambda, g.lambda_left, bundle.m);
}

MarketIntegrand pushforward(std::span<const double> nu, const PathBundle& bundle) {
    return {push_to_market(nu, bundle.grids), true};
}

MarketIntegrand pushforward(const Strategy& nu, const PathBundle& bundle) {
    return pushforward(strategy_values(nu, bundle), bundle);
}

MarketIntegrand pushforward_pointwise(const Strategy::TimeFunction& f, const PathBundle& bundle) {
    const auto& market = bundle.grids.market;
    MarketIntegrand out;
    out.values.resize(market.size() - 1);
    for (std::size_t j = 0; j + 1 < market.size(); ++j) {
        out.values[j] = f(bundle.lambda.inverse(market[j]));
    }
    out.lambda_adapted = is_lambda_adapted(out.values, bundle.grids);
    return out;
}

std::vector<double> pullback(const MarketIntegrand& nu, const PathBundle& bundle,
                             PullbackMode mode) {
    check_market_size(nu.values, bundle);
    if (mode == PullbackMode::checked &&
        !(nu.lambda_adapted && is_lambda_adapted(nu.values, bundle.grids))) {
        throw PreconditionError(
            "pullback requires a Λ-adapted integrand (constant on every [Λ(u-), Λ(u)])");
    }
    const auto& g = bundle.grids;
    std::vector<double> out(g.physical_intervals());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = nu.values[g.image[i]];
    return out;
}

std::vector<double> stochastic_exponential(std::span<const double> drift_density,
                                           std::span<const double> diffusion,
                                           std::span<const double> w,
                                           std::span<const double> market, std::size_t begin,
                                           std::size_t end) {
    if (end < begin || end >= market.size() || w.size() != market.size() ||
        drift_density.size() + 1 < market.size() || diffusion.size() + 1 < market.size()) {
        throw PreconditionError("stochastic exponential: inconsistent window or input sizes");
    }
    std::vector<double> out(end - begin + 1, 1.0);
    double log_value = 0.0;
    for (std::size_t j = begin; j < end; ++j) {
        const double ds = market[j + 1] - market[j];
        const double pi = diffusion[j];
        log_value += pi * (w[j + 1] - w[j]) + drift_density[j] * ds - 0.5 * pi * pi * ds;
        out[j - begin + 1] = std::exp(log_value);
    }
    return out;
}

std::string to_string(VerificationMode mode) {
    return mode == VerificationMode::strict ? "strict" : "demonstrate_failure";
}

VerificationRecord verify_forward(const PathBundle& bundle, std::span<const double> nu,
                                  double t) {
    check_physical_size(nu, bundle);
    const auto it = bundle.grids.physical_index(t);
    const auto pushed = push_to_market(nu, bundle.grids);
    return make_record("forward", bundle, t, physical_sum(nu, bundle, it),
                       market_sum(pushed, bundle, bundle.grids.image[it]),
                       VerificationMode::strict);
}

VerificationRecord verify_forward(const PathBundle& bundle, const Strategy& nu, double t) {
    return verify_forward(bundle, strategy_values(nu, bundle), t);
}

VerificationRecord verify_forward_pointwise(const PathBundle& bundle,
                                            const Strategy::TimeFunction& f, double t) {
    const auto it = bundle.grids.physical_index(t);
    std::vector<double> nu(bundle.grids.physical_intervals());
    for (std::size_t i = 0; i < nu.size(); ++i) nu[i] = f(bundle.grids.physical[i]);
    const auto pushed = pushforward_pointwise(f, bundle);
    return make_record("forward", bundle, t, physical_sum(nu, bundle, it),
                       market_sum(pushed.values, bundle, bundle.grids.image[it]),
                       VerificationMode::strict);
}

VerificationRecord verify_backward(const PathBundle& bundle, const MarketIntegrand& nu, double t,
                                   VerificationMode mode) {
    const auto it = bundle.grids.physical_index(t);
    const auto pulled = pullback(nu, bundle,
                                 mode == VerificationMode::strict ? PullbackMode::checked
                                                                  : PullbackMode::unchecked);
    return make_record("backward", bundle, t,
                       market_sum(nu.values, bundle, bundle.grids.image[it]),
                       physical_sum(pulled, bundle, it), mode);
}

}  // namespace tcbm
