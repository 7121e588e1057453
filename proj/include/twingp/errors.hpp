#pragma once

#include <stdexcept>

namespace twingp {

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The evolving system left the underdamped region where a damped
/// frequency exists.
struct OverdampedError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A closed-form inversion lost identifiability (collapsed denominator).
struct SingularInversionError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A measurement is inconsistent with the forward model (negative radicand).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct NotPositiveDefiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptimizationFailedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SelectionFailedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace twingp
