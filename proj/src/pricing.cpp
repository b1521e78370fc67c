#include "ibs/pricing.hpp"

#include "ibs/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace ibs {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// Nodes/weights of the 16-point Gauss-Legendre rule on [-1, 1] (positive
// half; the rule is symmetric).
constexpr std::array<double, 8> kGl16X = {
    0.0950125098376374402, 0.2816035507792589132, 0.4580167776572273863,
    0.6178762444026437484, 0.7554044083550030339, 0.8656312023878317439,
    0.9445750230732325761, 0.9894009349916499326};
constexpr std::array<double, 8> kGl16W = {
    0.1894506104550684963, 0.1826034150449235889, 0.1691565193950025382,
    0.1495959888165767320, 0.1246289712555338720, 0.0951585116824927848,
    0.0622535239386478929, 0.0271524594117540949};

// Integrates fn over [a, b] with composite 16-point Gauss-Legendre using
// at least the requested number of nodes.
double gauss_legendre(const std::function<double(double)>& fn, double a,
                      double b, int min_nodes) {
    if (b <= a) return 0.0;
    int panels = (min_nodes + 15) / 16;
    double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        double mid = a + (p + 0.5) * h;
        double half = 0.5 * h;
        double acc = 0.0;
        for (int k = 0; k < 8; ++k) {
            acc += kGl16W[k] *
                   (fn(mid - half * kGl16X[k]) + fn(mid + half * kGl16X[k]));
        }
        total += half * acc;
    }
    return total;
}

void check_pricing_domain(double s, double t, const OptionContract& contract,
                          const MarketParams& params) {
    params.validate();
    contract.validate();
    if (!(s > 0.0) || !std::isfinite(s))
        throw DomainError("spot must be positive, got " + std::to_string(s));
    if (!(t >= 0.0) || !(t <= contract.maturity))
        throw DomainError("time " + std::to_string(t) + " outside [0, " +
                          std::to_string(contract.maturity) + "]");
}

}  // namespace

void MarketParams::validate() const {
    if (!std::isfinite(r) || !std::isfinite(mu) || !std::isfinite(sigma))
        throw DomainError("market params must be finite");
    if (!(sigma > 0.0))
        throw DomainError("sigma must be positive, got " + std::to_string(sigma));
}

void OptionContract::validate() const {
    if (!(strike >= 0.0) || !std::isfinite(strike))
        throw DomainError("strike must be nonnegative");
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        throw DomainError("maturity must be positive");
}

void QuadratureConfig::validate() const {
    if (n_points < 16)
        throw DomainError("quadrature needs at least 16 points");
    if (!(half_width_sigmas >= 8.0))
        throw DomainError("quadrature bounds must cover >= 8 standard deviations");
    if (bounds && !(bounds->first < bounds->second))
        throw DomainError("quadrature bounds must be increasing");
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double payoff_value(const OptionContract& contract, double s) {
    switch (contract.payoff) {
        case PayoffKind::EuropeanCall:
            return std::max(s - contract.strike, 0.0);
    }
    throw DomainError("unknown payoff kind");
}

double bs_closed_form(double s, double t, const OptionContract& contract,
                      const MarketParams& params) {
    check_pricing_domain(s, t, contract, params);
    double tau = contract.maturity - t;
    if (tau == 0.0) return payoff_value(contract, s);
    // A zero-strike call is the asset itself.
    if (contract.strike == 0.0) return s;
    double st = params.sigma * std::sqrt(tau);
    double d1 = (std::log(s / contract.strike) +
                 (params.r + 0.5 * params.sigma * params.sigma) * tau) / st;
    double d2 = d1 - st;
    return s * norm_cdf(d1) -
           contract.strike * std::exp(-params.r * tau) * norm_cdf(d2);
}

double bs_delta(double s, double t, const OptionContract& contract,
                const MarketParams& params) {
    check_pricing_domain(s, t, contract, params);
    double tau = contract.maturity - t;
    if (tau == 0.0) return s > contract.strike ? 1.0 : 0.0;
    if (contract.strike == 0.0) return 1.0;
    double st = params.sigma * std::sqrt(tau);
    double d1 = (std::log(s / contract.strike) +
                 (params.r + 0.5 * params.sigma * params.sigma) * tau) / st;
    return norm_cdf(d1);
}

double bs_propagator_price(double s, double t, double maturity,
                           const std::function<double(double)>& payoff,
                           const MarketParams& params,
                           const QuadratureConfig& quad, QuadratureDiag* diag) {
    params.validate();
    quad.validate();
    if (!(s > 0.0)) throw DomainError("spot must be positive");
    if (!(t >= 0.0) || !(t <= maturity)) throw DomainError("time outside [0, T]");
    double tau = maturity - t;
    if (tau == 0.0) return payoff(s);

    // Kernel in x = ln S' is Gaussian with this mean and deviation.
    double st = params.sigma * std::sqrt(tau);
    double mean = std::log(s) + (params.r - 0.5 * params.sigma * params.sigma) * tau;
    double lo = mean - quad.half_width_sigmas * st;
    double hi = mean + quad.half_width_sigmas * st;
    if (quad.bounds) {
        lo = quad.bounds->first;
        hi = quad.bounds->second;
    }
    double lost = norm_cdf((lo - mean) / st) + norm_cdf(-(hi - mean) / st);
    if (diag) {
        diag->truncated_mass = lost;
        diag->truncated = lost > 1e-8;
    }

    double disc = std::exp(-params.r * tau);
    auto integrand = [&](double x) {
        double z = (x - mean) / st;
        return disc * norm_pdf(z) / st * payoff(std::exp(x));
    };
    return gauss_legendre(integrand, lo, hi, quad.n_points);
}

double bs_propagator_price(double s, double t, const OptionContract& contract,
                           const MarketParams& params,
                           const QuadratureConfig& quad, QuadratureDiag* diag) {
    check_pricing_domain(s, t, contract, params);
    quad.validate();
    double tau = contract.maturity - t;
    if (tau == 0.0) return payoff_value(contract, s);

    // The call payoff has a kink at ln K; split the integral there so each
    // piece is smooth and Gauss-Legendre converges at full rate.
    double st = params.sigma * std::sqrt(tau);
    double mean = std::log(s) + (params.r - 0.5 * params.sigma * params.sigma) * tau;
    double lo = mean - quad.half_width_sigmas * st;
    double hi = mean + quad.half_width_sigmas * st;
    if (quad.bounds) {
        lo = quad.bounds->first;
        hi = quad.bounds->second;
    }
    double lost = norm_cdf((lo - mean) / st) + norm_cdf(-(hi - mean) / st);
    if (diag) {
        diag->truncated_mass = lost;
        diag->truncated = lost > 1e-8;
    }

    double disc = std::exp(-params.r * tau);
    auto integrand = [&](double x) {
        double z = (x - mean) / st;
        return disc * norm_pdf(z) / st *
               payoff_value(contract, std::exp(x));
    };
    double kink = contract.strike > 0.0 ? std::log(contract.strike) : lo;
    if (kink <= lo || kink >= hi)
        return gauss_legendre(integrand, lo, hi, quad.n_points);
    int n_lo = std::max(16, static_cast<int>(quad.n_points * (kink - lo) / (hi - lo)));
    int n_hi = std::max(16, quad.n_points - n_lo);
    return gauss_legendre(integrand, lo, kink, n_lo) +
           gauss_legendre(integrand, kink, hi, n_hi);
}

double semiclassical_price(double s, double t, double rho,
                           const OptionContract& contract,
                           const MarketParams& params) {
    if (!std::isfinite(rho)) throw DomainError("rho must be finite");
    if (rho == 0.0) return bs_closed_form(s, t, contract, params);
    double scale = std::exp(rho);
    return bs_closed_form(scale * s, t, contract, params) / scale;
}

}  // namespace ibs
