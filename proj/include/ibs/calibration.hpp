#pragma once

#include "ibs/bubble.hpp"
#include "ibs/market_data.hpp"
#include "ibs/pde.hpp"
#include "ibs/pricing.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace ibs {

/// Per-day mispricing m(t_k) = pi_emp(t_k) - pi_BS(S_emp(t_k), t_k).
struct MispricingSeries {
    std::vector<double> days;
    std::vector<double> values;
};

struct NewtonConfig {
    double bracket_lo = -5.0;
    double bracket_hi = 5.0;
    int max_iter = 50;
    /// Guaranteed bound: |residual| < residual_tol * (pi_BS + 1). The
    /// iteration itself stops on a much tighter step criterion.
    double residual_tol = 1e-10;
};

struct LmConfig {
    int max_iter = 200;
    double step_tol = 1e-9;    // relative parameter step
    double grad_tol = 1e-10;   // gradient
    double lambda0 = 1e-3;
    double lambda_max = 1e14;
    std::vector<double> c_starts = {-0.5, -0.1, 0.5};  // multi-start values
};

/// Result of the nonlinear least-squares fit of rho(t, T) = a + b t^c.
struct RhoFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double residual_rms = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    /// False when |b| is negligible and c cannot be identified (flat data).
    bool c_identifiable = true;

    /// Fitted model value a + b t^c.
    double rho_at(double t) const;

    nlohmann::json to_json() const;
};

struct CalibrationConfig {
    NewtonConfig newton;
    LmConfig lm;
    /// Grid for the chi-squared PDE repricings; defaults to a strike-aligned
    /// grid starting at the first sample day.
    std::optional<GridSpec> pde_grid;
    /// Abort when more than this fraction of days fails the root solve.
    double max_failure_fraction = 0.5;
};

struct CalibrationResult {
    std::vector<double> rho_days;     // days with a successful root solve
    std::vector<double> rho_values;   // pointwise rho*(t_k)
    std::vector<double> failed_days;  // excluded from the fit
    RhoFit fit;
    PotentialSeries potential;        // U(t) sampled at the series days
    std::vector<double> bubble_days;
    std::vector<double> bubble_values;
    std::vector<double> bubble_pole_days;  // flagged and omitted
    double chi2_bs = 0.0;
    double chi2_interacting = 0.0;

    nlohmann::json to_json() const;
};

/// Mispricing of every sample against the closed-form equilibrium price.
/// Pricing domain errors are rethrown with the sample index attached.
MispricingSeries compute_mispricing(const MarketSeries& series,
                                    const OptionContract& contract,
                                    const MarketParams& params);

/// Solves the semiclassical mispricing equation
///   (pi_BS(S, t) + m) e^rho - pi_BS(e^rho S, t) = 0
/// for rho by Newton-Raphson with the analytic delta-based derivative,
/// starting at rho = 0, falling back to bisection on the configured
/// bracket. Throws NoRootError when pi_BS + m <= 0 or no sign change
/// exists in the bracket, ConvergenceError past the iteration cap.
double solve_rho_pointwise(double s, double t, double m,
                           const OptionContract& contract,
                           const MarketParams& params,
                           const NewtonConfig& cfg = {});

/// Levenberg-Marquardt fit of rho(t, T) = a + b t^c from a single starting
/// point. Requires >= 4 points with all days >= 1.
RhoFit fit_rho_model(const std::vector<double>& days,
                     const std::vector<double>& rho,
                     const std::array<double, 3>& init,
                     const LmConfig& cfg = {});

/// Multi-start variant: a0 = mean(rho), b0 = rho(t_1) - a0, c0 swept over
/// cfg.c_starts; returns the lowest-residual fit.
RhoFit fit_rho_model(const std::vector<double>& days,
                     const std::vector<double>& rho, const LmConfig& cfg = {});

/// Analytic potential of a fitted rho model: U(t) = -c b t^(c-1), t >= 1.
class FittedPotential {
public:
    explicit FittedPotential(const RhoFit& fit);

    double operator()(double t) const;  // throws DomainError for t < 1
    PotentialSeries sample(const std::vector<double>& days) const;

    double b() const { return b_; }
    double c() const { return c_; }

private:
    double b_;
    double c_;
};

FittedPotential potential_from_fit(const RhoFit& fit);

struct BubbleSeries {
    std::vector<double> days;
    std::vector<double> values;
    std::vector<double> pole_days;  // samples at the U = mu - r pole
};

/// Pointwise bubble extraction f* = sigma U / (r - mu + U); pole samples
/// are flagged and omitted. Throws InfeasibleError when every sample sits
/// at the pole.
BubbleSeries extract_bubble(const PotentialSeries& potential,
                            const MarketParams& params);

/// Sum of squared price differences. Throws ShapeError on length mismatch.
double chi_squared(std::span<const double> model,
                   std::span<const double> empirical);

/// Full calibration pipeline: mispricing, pointwise rho* inversion, rho
/// model fit, potential, bubble extraction, and the chi-squared pair from
/// Crank-Nicolson repricings (U = 0 and fitted U) along the empirical path.
CalibrationResult calibrate(const MarketSeries& series,
                            const OptionContract& contract,
                            const MarketParams& params,
                            const CalibrationConfig& cfg = {});

}  // namespace ibs
