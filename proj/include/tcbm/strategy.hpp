#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tcbm {

/// What a strategy may see when choosing the amount held over the physical grid
/// interval (t_i, t_{i+1}].
///
/// The evaluation time is s = t_{i+1}. Λ is visible on grid times <= s (the
/// past closed at s, including a jump of Λ at s) and M on grid times < s. Any
/// accessor call outside that range throws ContractError.
class CausalView {
public:
    CausalView(std::size_t interval, std::span<const double> times,
               std::span<const double> lambda, std::span<const double> lambda_left,
               std::span<const double> m);

    std::size_t interval() const noexcept { return interval_; }
    double evaluation_time() const noexcept { return times_[interval_ + 1]; }
    // Left end t_i of the holding interval; deterministic integrands are sampled here.
    double left_time() const noexcept { return times_[interval_]; }

    double time(std::size_t k) const;
    double lambda(std::size_t k) const;
    double lambda_left(std::size_t k) const;
    double m(std::size_t k) const;

    std::span<const double> lambda_past() const noexcept { return lambda_.first(interval_ + 2); }
    std::span<const double> m_past() const noexcept { return m_.first(interval_ + 1); }

private:
    std::size_t interval_;
    std::span<const double> times_;
    std::span<const double> lambda_;
    std::span<const double> lambda_left_;
    std::span<const double> m_;
};

enum class StrategyKind { constant, deterministic_time_function, path_functional, closed_form_optimal };

std::string to_string(StrategyKind kind);

/// A causal functional ν(Λ-past closed at s, M-past open at s, s), producing the
/// amount invested. Paths generated on a grid are càglàd: the value returned for
/// interval i is held on (t_i, t_{i+1}].
class Strategy {
public:
    using Evaluator = std::function<double(const CausalView&)>;
    using TimeFunction = std::function<double(double)>;

    Strategy(StrategyKind kind, Evaluator evaluator, std::string name);

    static Strategy constant(double value);
    // Sampled at the left end of each holding interval.
    static Strategy time_function(TimeFunction f, std::string name);
    static Strategy path_functional(Evaluator evaluator, std::string name);

    double operator()(const CausalView& view) const { return evaluator_(view); }

    StrategyKind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    // Set for constant and deterministic time-function strategies.
    const TimeFunction& function() const noexcept { return function_; }

private:
    StrategyKind kind_;
    Evaluator evaluator_;
    std::string name_;
    TimeFunction function_;
};

// One value per physical interval (times.size() - 1 values).
std::vector<double> evaluate_on_grid(const Strategy& strategy, std::span<const double> times,
                                     std::span<const double> lambda,
                                     std::span<const double> lambda_left,
                                     std::span<const double> m);

}  // namespace tcbm
