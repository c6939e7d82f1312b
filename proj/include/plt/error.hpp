#pragma once

#include <stdexcept>
#include <string>

namespace plt {

// Usage or configuration mistakes: bad parameters, wrong interval type, empty windows.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to reach its tolerance. Distinct from proven divergence,
// which is reported as +inf by the fractional integrals.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class Divergence : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

// Requested computation exists mathematically but is outside what this library certifies.
class Unsupported : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

// Geometric degeneracy (affinely dependent points, collinear input).
class Degenerate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace plt
