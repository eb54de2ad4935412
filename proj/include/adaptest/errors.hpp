#ifndef ADAPTEST_ERRORS_HPP
#define ADAPTEST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace adaptest {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// KL divergence against a point-mass alternative (r in {0,1}).
class DegenerateAlternativeError : public Error {
public:
    using Error::Error;
};

// f(x, p, u) requested with p == u.
class ZeroSeparationError : public Error {
public:
    using Error::Error;
};

// Envelope line with a nonpositive coefficient, or unsorted input.
class InvalidConstraintError : public Error {
public:
    using Error::Error;
};

// Finite lower-bound program with no usable levels.
class InfeasibleSeparationError : public Error {
public:
    using Error::Error;
};

// Single-question solver invoked on a miclassified case.
class CaseMismatchError : public Error {
public:
    using Error::Error;
};

// Ability indistinguishable from a grade threshold; the lower bound diverges.
class DegenerateAbilityError : public Error {
public:
    using Error::Error;
};

// Response outcome other than 0 or 1.
class InvalidOutcomeError : public Error {
public:
    using Error::Error;
};

// Malformed or unknown configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace adaptest

#endif  // ADAPTEST_ERRORS_HPP
