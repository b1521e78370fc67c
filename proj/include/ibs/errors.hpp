#pragma once

#include <stdexcept>

namespace ibs {

/// Base class for all library failures.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid mathematical-domain input (non-positive spot, sigma <= 0, ...).
struct DomainError : Error { using Error::Error; };

/// Bubble amplitude at the volatility pole f ~ sigma.
struct SingularityError : Error { using Error::Error; };

/// Potential at the pole U = mu - r (infinite bubble).
struct PoleError : Error { using Error::Error; };

/// Tabulated data does not cover the requested interval.
struct CoverageError : Error { using Error::Error; };

/// No sign change of the residual in the search interval.
struct NoRootError : Error { using Error::Error; };

/// Iteration cap exceeded without meeting the tolerance.
struct ConvergenceError : Error { using Error::Error; };

/// Malformed input file or configuration document.
struct ParseError : Error { using Error::Error; };

/// Query outside the computed grid.
struct ExtrapolationError : Error { using Error::Error; };

/// Non-finite values produced during time stepping.
struct InstabilityError : Error { using Error::Error; };

/// Calibration cannot proceed (too many failed samples, empty result).
struct InfeasibleError : Error { using Error::Error; };

/// Mismatched container sizes.
struct ShapeError : Error { using Error::Error; };

}  // namespace ibs
