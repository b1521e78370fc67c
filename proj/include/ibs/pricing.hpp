#pragma once

#include <functional>
#include <optional>
#include <utility>

namespace ibs {

enum class PayoffKind { EuropeanCall };

/// Model parameters in trading-day units: r and mu are rates per day,
/// sigma is volatility per sqrt(day).
struct MarketParams {
    double r = 0.0;
    double mu = 0.0;
    double sigma = 0.0;

    /// Throws DomainError unless sigma > 0 and all fields are finite.
    void validate() const;
};

struct OptionContract {
    double strike = 0.0;
    double maturity = 0.0;  // days
    PayoffKind payoff = PayoffKind::EuropeanCall;

    void validate() const;  // strike >= 0, maturity > 0
};

/// Terminal claim value for the contract's payoff kind.
double payoff_value(const OptionContract& contract, double s);

/// Fixed-node Gauss-Legendre quadrature for the propagator integral in
/// x = ln S'. Automatic bounds span half_width_sigmas standard deviations
/// of the lognormal kernel around its mean; explicit bounds override them.
struct QuadratureConfig {
    int n_points = 256;
    double half_width_sigmas = 8.0;
    std::optional<std::pair<double, double>> bounds;  // explicit [x_lo, x_hi]

    void validate() const;  // n_points >= 16, half_width_sigmas >= 8
};

struct QuadratureDiag {
    double truncated_mass = 0.0;  // kernel probability outside the bounds
    bool truncated = false;       // true when truncated_mass > 1e-8
};

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal PDF.
double norm_pdf(double x);

/// Equilibrium Black-Scholes price (closed form, continuous discounting).
/// At t == maturity returns the payoff exactly.
double bs_closed_form(double s, double t, const OptionContract& contract,
                      const MarketParams& params);

/// Closed-form call delta N(d1); payoff slope at t == maturity.
double bs_delta(double s, double t, const OptionContract& contract,
                const MarketParams& params);

/// Price by numerical quadrature of the pricing kernel against the
/// contract payoff. Converges to bs_closed_form as n_points grows.
double bs_propagator_price(double s, double t, const OptionContract& contract,
                           const MarketParams& params,
                           const QuadratureConfig& quad = {},
                           QuadratureDiag* diag = nullptr);

/// Arbitrary-claim overload: payoff given as a function of S'.
double bs_propagator_price(double s, double t, double maturity,
                           const std::function<double(double)>& payoff,
                           const MarketParams& params,
                           const QuadratureConfig& quad = {},
                           QuadratureDiag* diag = nullptr);

/// Rescaled price under an accumulated potential rho:
///   pi(S, t) = exp(-rho) * pi_BS(exp(rho) S, t).
/// rho == 0 reproduces bs_closed_form exactly (shared code path).
double semiclassical_price(double s, double t, double rho,
                           const OptionContract& contract,
                           const MarketParams& params);

}  // namespace ibs
