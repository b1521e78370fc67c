#pragma once

#include "ibs/pricing.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace ibs {

/// Time-dependent potential U(t) used as a PDE coefficient.
using PotentialFn = std::function<double(double)>;

/// Uniform space/time discretization of [s_min, s_max] x [t_start, T].
/// n_space counts interior price nodes (two boundary nodes are added),
/// n_time counts backward time steps.
struct GridSpec {
    double s_min = 0.0;
    double s_max = 0.0;
    int n_space = 0;
    int n_time = 0;
    double t_start = 0.0;

    void validate(double strike) const;

    /// Grid with the strike placed exactly on a node, s_max slightly above
    /// 4x strike. Keeps the payoff kink grid-aligned so the scheme shows
    /// clean second-order behavior under refinement.
    static GridSpec aligned_to_strike(double strike, int n_space, int n_time,
                                      double t_start = 0.0, double s_min = -1.0);
};

/// Solution of the interacting pricing PDE on a grid. Values are stored per
/// time level (ascending t), per price node (ascending S). Immutable after
/// construction.
struct PriceSurface {
    GridSpec grid;
    double maturity = 0.0;
    MarketParams params;
    std::vector<double> times;                // n_time + 1 levels
    std::vector<double> spots;                // n_space + 2 nodes
    std::vector<std::vector<double>> values;  // [time][spot]

    /// Bilinear interpolation in (t, S); throws ExtrapolationError outside
    /// the grid.
    double value_at(double t, double s) const;

    /// CSV matrix: header row of S nodes, one row per time level.
    void write_csv(std::ostream& out) const;
};

/// Crank-Nicolson backward induction for
///   d pi/dt + sigma^2/2 S^2 pi_SS + (r + U(t)) (S pi_S - pi) = 0,
///   pi(T, S) = payoff(S),
/// with U evaluated at step midpoints and two fully-implicit half-steps
/// replacing the first step to damp payoff-kink oscillations. Boundary
/// conditions (call): pi(s_min, t) = 0 and
/// pi(s_max, t) = s_max - K exp(-int_t^T (r + U)).
PriceSurface solve_interacting(const OptionContract& contract,
                               const MarketParams& params,
                               const PotentialFn& potential,
                               const GridSpec& grid);

/// Surface values along an empirical path; throws ExtrapolationError with
/// the offending sample index for out-of-grid points.
std::vector<double> evaluate_on_path(const PriceSurface& surface,
                                     const std::vector<double>& days,
                                     const std::vector<double>& spots);

}  // namespace ibs
