#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcbm {

// Spec parameters that cannot produce a valid time-change or scenario.
class InvalidSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Evaluation outside the domain of a function (e.g. market time beyond T_bar).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A strategy read data it is not allowed to see at its evaluation time.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// An operation was called on inputs that violate its stated precondition.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Market grid is missing an image point of the physical grid. Always a bug.
class AlignmentError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Too many paths with negative terminal wealth.
class InadmissibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& message)
        : std::runtime_error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    // 0 when the error is not tied to a particular line (e.g. a missing key).
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace tcbm
