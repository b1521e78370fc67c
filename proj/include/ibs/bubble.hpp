#pragma once

#include "ibs/pricing.hpp"

#include <json.hpp>

#include <functional>
#include <utility>
#include <variant>
#include <vector>

namespace ibs {

/// f(t) = 0 everywhere; equilibrium dynamics.
struct ZeroBubble {};

/// f(t) = f0 on [t1, t2] and zero outside.
struct StepBubble {
    double t1 = 0.0;
    double t2 = 0.0;
    double f0 = 0.0;
};

/// Accumulated potential modeled as rho(t, T) = a + b t^c, the shape used
/// for fitted calibrations. Induces U(t) = -c b t^(c-1); domain t >= 1.
/// The constant a is kept as a diagnostic only: rho is always evaluated
/// through the integral -b (T^c - t^c) so that rho(T, T) = 0 holds exactly.
struct PowerLawRhoBubble {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// Bubble amplitudes sampled on a strictly increasing day grid.
struct TabulatedBubble {
    std::vector<std::pair<double, double>> samples;  // (day, amplitude)
};

struct BubbleSpec {
    std::variant<ZeroBubble, StepBubble, PowerLawRhoBubble, TabulatedBubble> value;

    BubbleSpec() : value(ZeroBubble{}) {}
    BubbleSpec(ZeroBubble b) : value(b) {}
    BubbleSpec(StepBubble b) : value(b) {}
    BubbleSpec(PowerLawRhoBubble b) : value(b) {}
    BubbleSpec(TabulatedBubble b) : value(std::move(b)) {}

    /// Structural invariants: step has t1 <= t2, tabulated days strictly
    /// increasing, power-law c != 0. Throws DomainError.
    void validate() const;

    nlohmann::json to_json() const;
    static BubbleSpec from_json(const nlohmann::json& doc);
};

/// Potential samples U(t_k) on a strictly increasing day grid.
struct PotentialSeries {
    std::vector<double> days;
    std::vector<double> values;  // per-day rates

    void validate() const;
};

/// Effective potential induced by a bubble amplitude:
///   U = (r - mu) f / (sigma - f).
/// Throws SingularityError when f is within 1e-9 (relative) of sigma.
double potential_from_bubble(double f, const MarketParams& params);

/// Algebraic inverse of potential_from_bubble:
///   f = sigma U / (r - mu + U).
/// Throws PoleError when r - mu + U vanishes (infinite bubble).
double bubble_from_potential(double u, const MarketParams& params);

/// Bubble amplitude f(t) of a spec at a given day.
double bubble_amplitude(const BubbleSpec& spec, double t, const MarketParams& params);

/// Potential evaluator U(t) for a spec; usable as a PDE coefficient.
std::function<double(double)> potential_evaluator(const BubbleSpec& spec,
                                                  const MarketParams& params);

/// Accumulated potential rho(t, T) = integral of U(lambda) d lambda over
/// [t, T]. Zero and step bubbles integrate analytically, power-law uses
/// the antiderivative -b (T^c - t^c), tabulated uses the trapezoidal rule
/// on the given grid (CoverageError if the samples do not span [t, T]).
double accumulated_potential(const BubbleSpec& spec, double t, double maturity,
                             const MarketParams& params);

}  // namespace ibs
