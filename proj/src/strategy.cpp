#include "tcbm/strategy.hpp"

#include "tcbm/errors.hpp"

namespace tcbm {

namespace {

[[noreturn]] void non_causal(const char* what, std::size_t k, std::size_t limit) {
    throw ContractError(std::string("non-causal strategy: read ") + what + "[" +
                        std::to_string(k) + "] but only indices <= " + std::to_string(limit) +
                        " are observable");
}

}  // namespace

CausalView::CausalView(std::size_t interval, std::span<const double> times,
                       std::span<const double> lambda, std::span<const double> lambda_left,
                       std::span<const double> m)
    : interval_(interval), times_(times), lambda_(lambda), lambda_left_(lambda_left), m_(m) {
    if (interval + 1 >= times.size()) {
        throw PreconditionError("causal view interval beyond the physical grid");
    }
}

double CausalView::time(std::size_t k) const {
    if (k > interval_ + 1) non_causal("t", k, interval_ + 1);
    return times_[k];
}

double CausalView::lambda(std::size_t k) const {
    if (k > interval_ + 1) non_causal("Lambda", k, interval_ + 1);
    return lambda_[k];
}

double CausalView::lambda_left(std::size_t k) const {
    if (k > interval_ + 1) non_causal("Lambda_left", k, interval_ + 1);
    return lambda_left_[k];
}

double CausalView::m(std::size_t k) const {
    if (k > interval_) non_causal("M", k, interval_);
    return m_[k];
}

std::string to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::constant: return "constant";
        case StrategyKind::deterministic_time_function: return "deterministic_time_function";
        case StrategyKind::path_functional: return "path_functional";
        case StrategyKind::closed_form_optimal: return "closed_form_optimal";
    }
    return "unknown";
}

Strategy::Strategy(StrategyKind kind, Evaluator evaluator, std::string name)
    : kind_(kind), evaluator_(std::move(evaluator)), name_(std::move(name)) {}

Strategy Strategy::constant(double value) {
    Strategy s(StrategyKind::constant, [value](const CausalView&) { return value; },
               "constant");
    s.function_ = [value](double) { return value; };
    return s;
}

Strategy Strategy::time_function(TimeFunction f, std::string name) {
    Strategy s(StrategyKind::deterministic_time_function,
               [f](const CausalView& v) { return f(v.left_time()); }, std::move(name));
    s.function_ = std::move(f);
    return s;
}

Strategy Strategy::path_functional(Evaluator evaluator, std::string name) {
    return Strategy(StrategyKind::path_functional, std::move(evaluator), std::move(name));
}

std::vector<double> evaluate_on_grid(const Strategy& strategy, std::span<const double> times,
                                     std::span<const double> lambda,
                                     std::span<const double> lambda_left,
                                     std::span<const double> m) {
    if (times.size() < 2) return {};
    std::vector<double> values(times.size() - 1);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        values[i] = strategy(CausalView(i, times, lambda, lambda_left, m));
    }
    return values;
}

}  // namespace tcbm
