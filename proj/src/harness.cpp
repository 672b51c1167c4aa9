#include "tcbm/harness.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <ostream>

#include "tcbm/errors.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

unsigned resolve_workers(unsigned requested) noexcept {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

Estimate estimate(std::span<const double> samples) {
    Estimate e;
    e.n = samples.size();
    if (e.n == 0) return e;
    double sum = 0.0;
    for (double v : samples) sum += v;
    e.mean = sum / static_cast<double>(e.n);
    if (e.n < 2) return e;
    double sq = 0.0;
    for (double v : samples) sq += (v - e.mean) * (v - e.mean);
    const double variance = sq / static_cast<double>(e.n - 1);
    e.std_error = std::sqrt(variance / static_cast<double>(e.n));
    return e;
}

Estimate estimate_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw PreconditionError("paired samples differ in length");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
    return estimate(d);
}

double effective_sigmas(double sigmas, std::size_t n) {
    if (n < 2) return sigmas;
    const double tail = boost::math::cdf(boost::math::complement(boost::math::normal(), sigmas));
    const boost::math::students_t t(static_cast<double>(n - 1));
    return boost::math::quantile(boost::math::complement(t, tail));
}

namespace {

// |value - target| <= k * stderr; a zero stderr demands agreement to rounding.
Verdict equality_verdict(std::string name, const Estimate& e, double target, double sigmas) {
    Verdict v;
    v.name = std::move(name);
    v.value = std::abs(e.mean - target);
    if (e.std_error > 0.0) {
        v.threshold = effective_sigmas(sigmas, e.n) * e.std_error;
        v.rule = "|mean - target| <= " + format_double(sigmas) + " stderr (t-adjusted)";
    } else {
        v.threshold = 1e-12 * std::max(1.0, std::abs(target));
        v.rule = "|mean - target| <= 1e-12 (degenerate: zero stderr)";
    }
    v.pass = v.value <= v.threshold;
    return v;
}

nlohmann::json estimate_json(const Estimate& e) {
    return {{"mean", e.mean}, {"stderr", e.std_error}, {"n", e.n}};
}

void require_m_independent_theta(const MarketScenario& scenario, const char* what) {
    if (!scenario.theta.independent_of_m()) {
        throw PreconditionError(std::string(what) +
                                " needs θ that does not depend on M (the value formula "
                                "conditions on the whole Λ path only)");
    }
}

}  // namespace

Ensemble::Ensemble(MarketScenario scenario, unsigned workers, bool freeze_lambda)
    : scenario_(std::move(scenario)),
      workers_(workers),
      theta_(make_theta(scenario_.theta)) {
    scenario_.validate();
    if (freeze_lambda) frozen_ = time_change(0);
}

TimeChangePath Ensemble::time_change(std::size_t path, SamplingStats* stats) const {
    if (frozen_) return *frozen_;
    auto rng = make_stream(scenario_.seed, path, StreamPurpose::time_change);
    return make_time_change(scenario_.time_change, scenario_.horizon, scenario_.market_horizon,
                            rng, stats);
}

PathBundle Ensemble::bundle(std::size_t path) const {
    auto rng = make_stream(scenario_.seed, path, StreamPurpose::brownian);
    return assemble_bundle(path, time_change(path), scenario_.n_physical, scenario_.n_market,
                           theta_, scenario_.s0, rng);
}

std::size_t Ensemble::rejections() const {
    if (frozen_ || !scenario_.time_change.is_random()) return 0;
    const auto counts = parallel_map(size(), workers_, [&](std::size_t i) {
        SamplingStats stats;
        (void)time_change(i, &stats);
        return stats.rejections;
    });
    std::size_t total = 0;
    for (auto c : counts) total += c;
    return total;
}

std::vector<PathBundle> run_ensemble(const MarketScenario& scenario, std::size_t n_paths,
                                     unsigned workers) {
    auto s = scenario;
    s.n_paths = n_paths;
    Ensemble ensemble(std::move(s), workers);
    return ensemble.map([](const PathBundle& b) { return b; });
}

std::string to_string(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::scale: return "scale";
        case PerturbationKind::fraction_shift: return "fraction_shift";
        case PerturbationKind::time_shift: return "time_shift";
        case PerturbationKind::zero: return "zero";
    }
    return "unknown";
}

PerturbationKind perturbation_kind_from_string(const std::string& name) {
    for (auto kind : {PerturbationKind::scale, PerturbationKind::fraction_shift,
                      PerturbationKind::time_shift, PerturbationKind::zero}) {
        if (to_string(kind) == name) return kind;
    }
    throw InvalidSpec("unknown perturbation family '" + name + "'");
}

std::vector<double> fraction_eta(const FractionRule& rule, const MarketScenario& scenario,
                                 const PathBundle& bundle) {
    const auto& g = bundle.grids;
    const double p = scenario.p;
    std::vector<double> eta(g.physical_intervals());
    switch (rule.kind) {
        case PerturbationKind::scale:
            for (std::size_t i = 0; i < eta.size(); ++i) {
                eta[i] = (1.0 + rule.parameter) * (bundle.theta[i] / p);
            }
            break;
        case PerturbationKind::fraction_shift:
            for (std::size_t i = 0; i < eta.size(); ++i) {
                eta[i] = bundle.theta[i] / p + rule.parameter;
            }
            break;
        case PerturbationKind::time_shift: {
            const double lag = std::abs(rule.parameter);
            for (std::size_t i = 0; i < eta.size(); ++i) {
                const double target = g.physical[i] - lag;
                auto it = std::upper_bound(g.physical.begin(), g.physical.end(), target);
                std::size_t k = it == g.physical.begin()
                                    ? 0
                                    : static_cast<std::size_t>(it - g.physical.begin()) - 1;
                k = std::min(k, i);
                eta[i] = bundle.theta[k] / p;
            }
            break;
        }
        case PerturbationKind::zero:
            std::fill(eta.begin(), eta.end(), 0.0);
            break;
    }
    return eta;
}

double terminal_wealth(const Policy& policy, const MarketScenario& scenario,
                       const PathBundle& bundle) {
    if (const auto* strategy = std::get_if<Strategy>(&policy)) {
        return wealth(*strategy, bundle, scenario.t, scenario.x).values.back();
    }
    const auto& rule = std::get<FractionRule>(policy);
    return fraction_wealth(fraction_eta(rule, scenario, bundle), bundle,
                           start_index(scenario, bundle), scenario.x)
        .values.back();
}

bool EnsembleReport::pass() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

nlohmann::json to_json(const Verdict& verdict) {
    return {{"name", verdict.name},
            {"pass", verdict.pass},
            {"value", verdict.value},
            {"threshold", verdict.threshold},
            {"rule", verdict.rule}};
}

nlohmann::json to_json(const EnsembleReport& report, bool include_timing) {
    nlohmann::json verdicts = nlohmann::json::array();
    for (const auto& v : report.verdicts) verdicts.push_back(to_json(v));
    nlohmann::json j{{"estimator", report.estimator},
                     {"n_paths", report.n_paths},
                     {"mean", report.mean},
                     {"stderr", report.std_error},
                     {"verdicts", verdicts},
                     {"pass", report.pass()},
                     {"seed", report.seed},
                     {"n_physical", report.n_physical},
                     {"n_market", report.n_market},
                     {"details", report.details}};
    if (include_timing) j["wall_clock_seconds"] = report.wall_clock_seconds;
    return j;
}

nlohmann::json to_json(const VerificationRecord& record) {
    return {{"theorem", record.theorem}, {"path_id", record.path_id},
            {"t", record.t},             {"lhs", record.lhs},
            {"rhs", record.rhs},         {"abs_diff", record.abs_diff},
            {"rel_diff", record.rel_diff}, {"mode", to_string(record.mode)}};
}

namespace {

EnsembleReport make_report(std::string estimator, const Ensemble& ensemble, const Estimate& e) {
    EnsembleReport r;
    r.estimator = std::move(estimator);
    r.n_paths = ensemble.size();
    r.mean = e.mean;
    r.std_error = e.std_error;
    r.seed = ensemble.scenario().seed;
    r.n_physical = ensemble.scenario().n_physical;
    r.n_market = ensemble.scenario().n_market;
    return r;
}

}  // namespace

ObjectiveEstimate estimate_objective(const Ensemble& ensemble, const Policy& policy,
                                     const Thresholds& thresholds) {
    const auto& scenario = ensemble.scenario();
    const auto terminal = ensemble.map(
        [&](const PathBundle& b) { return terminal_wealth(policy, scenario, b); });
    ObjectiveEstimate out;
    std::vector<double> utilities;
    utilities.reserve(terminal.size());
    for (double v : terminal) {
        if (v < 0.0 || std::isnan(v)) {
            ++out.inadmissible;
            continue;
        }
        utilities.push_back(power_utility(v, scenario.p));
    }
    const double fraction =
        static_cast<double>(out.inadmissible) / static_cast<double>(terminal.size());
    if (fraction > thresholds.max_inadmissible_fraction) {
        throw InadmissibleError(std::to_string(out.inadmissible) + " of " +
                                std::to_string(terminal.size()) +
                                " paths end with negative wealth");
    }
    out.value = estimate(utilities);
    return out;
}

EnsembleReport hat_cross_check(const Ensemble& ensemble, double tolerance) {
    const auto& scenario = ensemble.scenario();
    auto relative = [](double a, double b) {
        const double scale = std::max(std::abs(a), std::abs(b));
        return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
    };
    struct PathResult {
        double strategy;
        double wealth;
        bool breve_adapted;
    };
    const auto results = ensemble.map([&](const PathBundle& b) {
        const auto direct = hat_strategy(scenario, b);
        const auto pulled = hat_strategy_via_pullback(scenario, b);
        const auto closed = closed_form_wealth(scenario, b);
        const auto breve = breve_strategy(scenario, b);
        PathResult r{0.0, 0.0, breve.nu.lambda_adapted};
        for (std::size_t i = 0; i < direct.size(); ++i) {
            r.strategy = std::max(r.strategy, relative(direct[i], pulled[i]));
        }
        const auto& image = b.grids.image;
        for (std::size_t k = 0; k < closed.values.size(); ++k) {
            const auto j = image[closed.start + k] - breve.wealth.start;
            r.wealth = std::max(r.wealth, relative(closed.values[k], breve.wealth.values[j]));
        }
        return r;
    });
    double worst_strategy = 0.0, worst_wealth = 0.0;
    std::size_t non_adapted = 0;
    for (const auto& r : results) {
        worst_strategy = std::max(worst_strategy, r.strategy);
        worst_wealth = std::max(worst_wealth, r.wealth);
        if (!r.breve_adapted) ++non_adapted;
    }
    Estimate e;
    e.mean = worst_strategy;
    e.n = results.size();
    auto report = make_report("max relative |nu_hat - pullback(nu_breve)|", ensemble, e);
    const std::string rule = "max rel diff <= " + format_double(tolerance);
    report.verdicts.push_back(
        {"hat_vs_pullback", worst_strategy <= tolerance, worst_strategy, tolerance, rule});
    report.verdicts.push_back(
        {"closed_form_wealth", worst_wealth <= tolerance, worst_wealth, tolerance, rule});
    report.details = {{"paths_with_non_adapted_breve", non_adapted}};
    return report;
}

EnsembleReport conditional_value_check(const MarketScenario& scenario, unsigned workers,
                                       const Thresholds& thresholds) {
    require_m_independent_theta(scenario, "conditional value check");
    Ensemble ensemble(scenario, workers, true);

    struct PathResult {
        double utility;
        double self_financing_gap;
        bool self_financing_nonpositive;
    };
    const auto results = ensemble.map([&](const PathBundle& b) {
        const double v = closed_form_wealth(scenario, b).values.back();
        const double self_financing =
            wealth(hat_strategy(scenario, b), b, scenario.t, scenario.x).values.back();
        return PathResult{power_utility(v, scenario.p), std::abs(self_financing - v) / v,
                          self_financing <= 0.0};
    });
    std::vector<double> utilities(results.size());
    double gap_sum = 0.0;
    std::size_t nonpositive = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        utilities[i] = results[i].utility;
        gap_sum += results[i].self_financing_gap;
        if (results[i].self_financing_nonpositive) ++nonpositive;
    }
    const auto e = estimate(utilities);

    const auto b0 = ensemble.bundle(0);
    const auto start = start_index(scenario, b0);
    const double lambda_t = b0.grids.lambda[start];
    const double lambda_T = b0.grids.lambda.back();
    const double formula = value_formula(b0.theta_market, b0.grids.market, lambda_t, lambda_T,
                                         scenario.p, scenario.x);
    const double alternative = value_formula_alternative(
        b0.theta_market, b0.grids.market, lambda_t, lambda_T, scenario.p, scenario.x);

    auto report = make_report("E[U(V_T(nu_hat)) | Lambda]", ensemble, e);
    report.verdicts.push_back(
        equality_verdict("conditional_value", e, formula, thresholds.equality_sigmas));
    report.details = {
        {"formula", formula},
        {"alternative_formula", alternative},
        {"alternative_abs_diff", std::abs(e.mean - alternative)},
        {"alternative_z", e.std_error > 0.0 ? std::abs(e.mean - alternative) / e.std_error : 0.0},
        {"alternative_agrees", std::abs(e.mean - alternative) <=
                                   thresholds.equality_sigmas * e.std_error},
        {"lambda_t", lambda_t},
        {"lambda_T", lambda_T},
        {"self_financing_mean_relative_gap", gap_sum / static_cast<double>(results.size())},
        {"self_financing_nonpositive_paths", nonpositive},
    };
    return report;
}

ScanTable optimality_scan(const MarketScenario& scenario, PerturbationKind kind,
                          std::span<const double> epsilons, bool freeze_lambda, unsigned workers,
                          const Thresholds& thresholds) {
    Ensemble ensemble(scenario, workers, freeze_lambda);
    std::vector<FractionRule> rules{{PerturbationKind::scale, 0.0}};
    for (double eps : epsilons) rules.push_back({kind, eps});

    const auto per_path = ensemble.map([&](const PathBundle& b) {
        std::vector<double> u(rules.size());
        for (std::size_t r = 0; r < rules.size(); ++r) {
            u[r] = power_utility(terminal_wealth(rules[r], scenario, b), scenario.p);
        }
        return u;
    });

    auto column = [&](std::size_t r) {
        std::vector<double> c(per_path.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = per_path[i][r];
        return estimate(c);
    };

    ScanTable table;
    table.kind = kind;
    table.baseline = column(0);
    table.pass = true;
    for (std::size_t r = 1; r < rules.size(); ++r) {
        ScanRow row;
        row.epsilon = rules[r].parameter;
        row.value = column(r);
        row.pass = table.baseline.mean >=
                   row.value.mean - thresholds.inequality_sigmas *
                                        (table.baseline.std_error + row.value.std_error);
        table.pass = table.pass && row.pass;
        table.rows.push_back(row);
    }
    return table;
}

nlohmann::json to_json(const ScanTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"epsilon", r.epsilon},
                        {"J_mean", r.value.mean},
                        {"J_stderr", r.value.std_error},
                        {"pass", r.pass}});
    }
    return {{"family", to_string(table.kind)},
            {"baseline", estimate_json(table.baseline)},
            {"rows", rows},
            {"pass", table.pass}};
}

void write_scan_csv(std::ostream& out, const ScanTable& table) {
    out << "epsilon,J_mean,J_stderr,pass\n";
    for (const auto& r : table.rows) {
        out << format_double(r.epsilon) << ',' << format_double(r.value.mean) << ','
            << format_double(r.value.std_error) << ',' << (r.pass ? "true" : "false") << '\n';
    }
}

EnsembleReport tower_check(const MarketScenario& scenario, unsigned workers,
                           const Thresholds& thresholds, std::span<const double> family_epsilons) {
    if (scenario.t != 0.0) throw PreconditionError("tower check is defined at t = 0 only");
    require_m_independent_theta(scenario, "tower check");
    Ensemble ensemble(scenario, workers, false);

    std::vector<FractionRule> family;
    for (double eps : family_epsilons) family.push_back({PerturbationKind::scale, eps});

    const auto per_path = ensemble.map([&](const PathBundle& b) {
        std::vector<double> out(2 + family.size());
        out[0] = power_utility(closed_form_wealth(scenario, b).values.back(), scenario.p);
        out[1] = value_formula(b.theta_market, b.grids.market, 0.0, b.grids.lambda.back(),
                               scenario.p, scenario.x);
        for (std::size_t f = 0; f < family.size(); ++f) {
            out[2 + f] = power_utility(terminal_wealth(family[f], scenario, b), scenario.p);
        }
        return out;
    });
    auto column = [&](std::size_t c) {
        std::vector<double> v(per_path.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = per_path[i][c];
        return estimate(v);
    };

    const auto unconditional = column(0);
    const auto averaged = column(1);
    auto report = make_report("E[U(V_T(nu_hat))]", ensemble, unconditional);

    Verdict tower;
    tower.name = "tower";
    tower.value = std::abs(unconditional.mean - averaged.mean);
    const double combined = std::hypot(unconditional.std_error, averaged.std_error);
    const double k = effective_sigmas(thresholds.equality_sigmas, unconditional.n);
    tower.threshold = combined > 0.0 ? k * combined
                                     : 1e-12 * std::max(1.0, std::abs(averaged.mean));
    tower.rule = "|unconditional - averaged formula| <= " +
                 format_double(thresholds.equality_sigmas) + " combined stderr (t-adjusted)";
    tower.pass = tower.value <= tower.threshold;
    report.verdicts.push_back(tower);

    nlohmann::json family_rows = nlohmann::json::array();
    if (!family.empty()) {
        Verdict jensen;
        jensen.name = "jensen";
        jensen.rule = "averaged formula >= best family member - " +
                      format_double(thresholds.equality_sigmas) + " combined stderr (t-adjusted)";
        jensen.pass = true;
        double worst_margin = INFINITY;
        for (std::size_t f = 0; f < family.size(); ++f) {
            const auto e = column(2 + f);
            const double slack = effective_sigmas(thresholds.equality_sigmas, e.n) *
                                 std::hypot(averaged.std_error, e.std_error);
            const double margin = averaged.mean - e.mean + slack;
            worst_margin = std::min(worst_margin, margin);
            family_rows.push_back({{"epsilon", family[f].parameter}, {"estimate", estimate_json(e)}});
        }
        jensen.value = worst_margin;
        jensen.threshold = 0.0;
        jensen.pass = worst_margin >= 0.0;
        report.verdicts.push_back(jensen);
    }

    report.details = {{"unconditional", estimate_json(unconditional)},
                      {"averaged_formula", estimate_json(averaged)},
                      {"family", family_rows},
                      {"rejections", ensemble.rejections()}};
    return report;
}

Strategy reference_integrand() {
    return Strategy::path_functional(
        [](const CausalView& v) {
            const auto i = v.interval();
            return std::tanh(v.m(i)) + 0.5 * std::cos(v.lambda(i + 1));
        },
        "tanh(M)+cos(Lambda)/2");
}

MarketIntegrand reference_market_integrand(const PathBundle& bundle) {
    const auto physical = Strategy::path_functional(
        [](const CausalView& v) {
            const auto i = v.interval();
            return std::sin(v.m(i)) + v.lambda(i);
        },
        "sin(M)+Lambda");
    return pushforward(physical, bundle);
}

MarketIntegrand identity_market_integrand(const PathBundle& bundle) {
    const auto& market = bundle.grids.market;
    MarketIntegrand nu;
    nu.values.assign(market.begin(), market.end() - 1);
    nu.lambda_adapted = is_lambda_adapted(nu.values, bundle.grids);
    return nu;
}

std::vector<VerificationRecord> forward_records(const Ensemble& ensemble) {
    const auto nu = reference_integrand();
    const double horizon = ensemble.scenario().horizon;
    return ensemble.map([&](const PathBundle& b) { return verify_forward(b, nu, horizon); });
}

std::vector<VerificationRecord> backward_records(const Ensemble& ensemble) {
    const double horizon = ensemble.scenario().horizon;
    return ensemble.map([&](const PathBundle& b) {
        return verify_backward(b, reference_market_integrand(b), horizon);
    });
}

Verdict exactness_verdict(const std::string& name, std::span<const VerificationRecord> records,
                          double threshold) {
    Verdict v;
    v.name = name;
    v.threshold = threshold;
    v.rule = "max rel_diff <= " + format_double(threshold);
    for (const auto& r : records) v.value = std::max(v.value, r.rel_diff);
    v.pass = v.value <= threshold;
    return v;
}

EnsembleReport failure_demonstration(const Ensemble& ensemble) {
    const double horizon = ensemble.scenario().horizon;
    const auto diffs = ensemble.map([&](const PathBundle& b) {
        return verify_backward(b, identity_market_integrand(b), horizon,
                               VerificationMode::demonstrate_failure)
            .abs_diff;
    });
    const auto e = estimate(diffs);
    auto report = make_report("mean |backward discrepancy| for non-adapted integrand", ensemble, e);
    Verdict v;
    v.name = "expected-fail";
    v.value = e.mean;
    v.threshold = 5.0 * e.std_error;
    v.rule = "mean |diff| > 5 stderr";
    v.pass = e.mean > v.threshold;
    report.verdicts.push_back(v);
    report.details = {{"z", e.std_error > 0.0 ? e.mean / e.std_error : INFINITY}};
    return report;
}

EnsembleReport isometry_check(const Ensemble& ensemble, const Thresholds& thresholds) {
    const auto nu = reference_integrand();
    const double horizon = ensemble.scenario().horizon;
    struct PathResult {
        double squared_integral;
        double quadratic;
    };
    const auto results = ensemble.map([&](const PathBundle& b) {
        const auto values = strategy_values(nu, b);
        const double integral = ito_integral_M(values, b, 0.0, horizon).back();
        double q = 0.0;
        const auto& lambda = b.grids.lambda;
        for (std::size_t i = 0; i < values.size(); ++i) {
            q += values[i] * values[i] * (lambda[i + 1] - lambda[i]);
        }
        return PathResult{integral * integral, q};
    });
    std::vector<double> squares(results.size()), quads(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        squares[i] = results[i].squared_integral;
        quads[i] = results[i].quadratic;
    }
    const auto diff = estimate_difference(squares, quads);
    auto report = make_report("E[(int nu dM)^2 - int nu^2 dLambda]", ensemble, diff);
    report.verdicts.push_back(equality_verdict("ito_isometry", diff, 0.0, thresholds.equality_sigmas));
    report.details = {{"E_squared_integral", estimate_json(estimate(squares))},
                      {"E_quadratic_variation", estimate_json(estimate(quads))}};
    return report;
}

EnsembleReport martingale_check(const Ensemble& ensemble, const Thresholds& thresholds) {
    struct PathResult {
        double m_T;
        double lambda_T;
        double m_mid;
        double increment;
        std::vector<double> normalized_jumps;
    };
    const auto results = ensemble.map([&](const PathBundle& b) {
        const auto& g = b.grids;
        const double mid_time = 0.5 * g.physical.back();
        auto it = std::lower_bound(g.physical.begin(), g.physical.end(), mid_time);
        const auto mid = static_cast<std::size_t>(it - g.physical.begin());
        PathResult r{b.m.back(), g.lambda.back(), b.m[mid], b.m.back() - b.m[mid], {}};
        for (std::size_t i = 1; i < g.physical.size(); ++i) {
            const double size = g.lambda[i] - g.lambda_left[i];
            if (size > 0.0) {
                r.normalized_jumps.push_back((b.w[g.image[i]] - b.w[g.image_left[i]]) /
                                             std::sqrt(size));
            }
        }
        return r;
    });

    std::vector<double> m_T, m_T_sq, lambda_T, up, down, jump_sq;
    for (const auto& r : results) {
        m_T.push_back(r.m_T);
        m_T_sq.push_back(r.m_T * r.m_T);
        lambda_T.push_back(r.lambda_T);
        (r.m_mid > 0.0 ? up : down).push_back(r.increment);
        for (double z : r.normalized_jumps) jump_sq.push_back(z * z);
    }
    const auto mean_m = estimate(m_T);
    auto report = make_report("E[M_T]", ensemble, mean_m);
    const double k = thresholds.equality_sigmas;
    report.verdicts.push_back(equality_verdict("mean_M_T", mean_m, 0.0, k));
    report.verdicts.push_back(
        equality_verdict("second_moment_M_T", estimate_difference(m_T_sq, lambda_T), 0.0, k));
    if (up.size() > 1) {
        report.verdicts.push_back(
            equality_verdict("increment_given_positive", estimate(up), 0.0, k));
    }
    if (down.size() > 1) {
        report.verdicts.push_back(
            equality_verdict("increment_given_nonpositive", estimate(down), 0.0, k));
    }
    if (jump_sq.size() > 1) {
        report.verdicts.push_back(
            equality_verdict("jump_variance_ratio", estimate(jump_sq), 1.0, k));
    }
    report.details = {{"E_M_T_squared", estimate_json(estimate(m_T_sq))},
                      {"E_Lambda_T", estimate_json(estimate(lambda_T))},
                      {"jumps", jump_sq.size()}};
    return report;
}

}  // namespace tcbm
