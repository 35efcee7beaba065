#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace rpsim {

/// Input that violates a structural invariant (grid alignment, model constants, config fields).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A time or step size that does not land on the noise lattice.
class AlignmentError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Base for failures that happen while computing (as opposed to bad input).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;

    [[nodiscard]] std::optional<std::int64_t> step_index() const noexcept { return step_index_; }
    void set_step_index(std::int64_t j) noexcept { step_index_ = j; }

private:
    std::optional<std::int64_t> step_index_;
};

/// The implicit solve exhausted its iteration caps above the residual tolerance.
class NonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The drift or diffusion returned NaN/inf.
class NonFiniteEvaluation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Not enough usable data for a statistic (e.g. fewer than three rows for an order fit).
class InsufficientData : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace rpsim
