#pragma once

#include <stdexcept>
#include <string>

namespace starksense {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter outside its documented domain (gamma <= 0, levels < 3, ...).
struct InvalidParams : Error {
    using Error::Error;
};

// Drive detuning Delta <= 0: the single-root branch does not apply;
// callers wanting Delta < 0 must enumerate all roots instead.
struct NegativeDetuning : Error {
    using Error::Error;
};

// A perturbation-series denominator fell below the degeneracy threshold;
// the series is not meaningful near a multi-photon resonance.
struct DegeneratePerturbation : Error {
    using Error::Error;
};

// Exact zero denominator in a closed-form expression.
struct DivisionByZero : Error {
    using Error::Error;
};

// Iterative solver exhausted its iteration budget.
struct NoConvergence : Error {
    using Error::Error;
};

// Measured inputs contradict each other beyond propagated uncertainty.
struct InconsistentInput : Error {
    using Error::Error;
};

// Adaptive integrator forced below its minimum step size.
struct StepSizeFailure : Error {
    using Error::Error;
};

// Trajectory does not cover the requested averaging window.
struct WindowTooShort : Error {
    using Error::Error;
};

// Uncertainty propagation failed on every corner evaluation.
struct AllCornersFailed : Error {
    using Error::Error;
};

// Basis truncation is too small: enlarging it still moves the result.
struct ConvergenceWarning : Error {
    using Error::Error;
};

}  // namespace starksense
