#pragma once

#include <stdexcept>
#include <string>

namespace hgpop {

// Argument outside the mathematical domain of a function (e.g. log_gamma(-1)).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Caller skipped a required step, e.g. evaluating the likelihood on
// estimates that were never thresholded against the observed counts.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Malformed user input: shapes, configs, files.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A metric that has no value for the given input (zero variance, no positive truth).
class UndefinedMetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure during optimization; the message carries the epoch and state.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested operation is not supported for this input (e.g. a K != 2 landscape).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hgpop
