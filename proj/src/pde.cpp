#include "ibs/pde.hpp"

#include "ibs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace ibs {

namespace {

// Thomas algorithm; diagonals indexed 0..n-1, lo[0] and up[n-1] unused.
// Overwrites rhs with the solution.
void solve_tridiagonal(std::vector<double>& lo, std::vector<double>& diag,
                       std::vector<double>& up, std::vector<double>& rhs) {
    size_t n = diag.size();
    for (size_t i = 1; i < n; ++i) {
        double w = lo[i] / diag[i - 1];
        diag[i] -= w * up[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i > 0; --i)
        rhs[i - 1] = (rhs[i - 1] - up[i - 1] * rhs[i]) / diag[i - 1];
}

}  // namespace

void GridSpec::validate(double strike) const {
    if (!(s_min > 0.0) || !(s_min < s_max))
        throw DomainError("grid requires 0 < s_min < s_max");
    if (n_space < 16 || n_time < 16)
        throw DomainError("grid requires n_space >= 16 and n_time >= 16");
    if (!(s_max >= 4.0 * strike))
        throw DomainError("grid requires s_max >= 4x strike");
    if (!(t_start >= 0.0))
        throw DomainError("grid requires t_start >= 0");
}

GridSpec GridSpec::aligned_to_strike(double strike, int n_space, int n_time,
                                     double t_start, double s_min) {
    if (!(strike > 0.0))
        throw DomainError("aligned grid needs a positive strike");
    if (s_min <= 0.0) s_min = strike / 100.0;
    int intervals = n_space + 1;
    int below = static_cast<int>(
        std::floor(intervals * (strike - s_min) / (4.04 * strike - s_min)));
    below = std::max(below, 1);
    double ds = (strike - s_min) / below;
    return GridSpec{s_min, s_min + intervals * ds, n_space, n_time, t_start};
}

double PriceSurface::value_at(double t, double s) const {
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
        throw ExtrapolationError("time " + std::to_string(t) + " outside grid");
    if (s < spots.front() || s > spots.back())
        throw ExtrapolationError("spot " + std::to_string(s) + " outside grid");
    t = std::clamp(t, times.front(), times.back());

    double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
    double ds = spots[1] - spots[0];
    size_t j = std::min(static_cast<size_t>((t - times.front()) / dt),
                        times.size() - 2);
    size_t i = std::min(static_cast<size_t>((s - spots.front()) / ds),
                        spots.size() - 2);
    double wt = (t - times[j]) / dt;
    double ws = (s - spots[i]) / ds;
    return (1 - wt) * ((1 - ws) * values[j][i] + ws * values[j][i + 1]) +
           wt * ((1 - ws) * values[j + 1][i] + ws * values[j + 1][i + 1]);
}

void PriceSurface::write_csv(std::ostream& out) const {
    char buf[32];
    out << "t";
    for (double s : spots) {
        std::snprintf(buf, sizeof buf, "%.17g", s);
        out << ',' << buf;
    }
    out << '\n';
    for (size_t j = 0; j < times.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", times[j]);
        out << buf;
        for (double v : values[j]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

PriceSurface solve_interacting(const OptionContract& contract,
                               const MarketParams& params,
                               const PotentialFn& potential,
                               const GridSpec& grid) {
    contract.validate();
    params.validate();
    grid.validate(contract.strike);
    if (!(grid.t_start < contract.maturity))
        throw DomainError("grid t_start must precede maturity");

    int n = grid.n_space;
    int total = n + 2;
    double ds = (grid.s_max - grid.s_min) / (n + 1);
    double dt = (contract.maturity - grid.t_start) / grid.n_time;

    PriceSurface surf;
    surf.grid = grid;
    surf.maturity = contract.maturity;
    surf.params = params;
    surf.times.resize(grid.n_time + 1);
    for (int j = 0; j <= grid.n_time; ++j)
        surf.times[j] = grid.t_start + j * dt;
    surf.spots.resize(total);
    for (int i = 0; i < total; ++i) surf.spots[i] = grid.s_min + i * ds;
    surf.values.assign(grid.n_time + 1,
                       std::vector<double>(total, 0.0));

    // Terminal slice is the payoff exactly.
    std::vector<double> v(total);
    for (int i = 0; i < total; ++i)
        v[i] = payoff_value(contract, surf.spots[i]);
    surf.values[grid.n_time] = v;

    double neg_floor = -1e-8 * std::max(contract.strike, 1.0);
    std::vector<double> lo(n), diag(n), up(n), rhs(n);

    // Running integral of (r + U) from the current level up to T, advanced
    // by the midpoint rule step by step; feeds the s_max boundary value.
    double rate_integral = 0.0;

    // One theta-step of width `delta` ending at time level `t_new`.
    auto step = [&](double theta, double delta, double t_new) {
        double rate = params.r + potential(t_new + 0.5 * delta);
        rate_integral += rate * delta;
        double bnd_hi_new =
            grid.s_max - contract.strike * std::exp(-rate_integral);

        double c_last = 0.0;
        for (int i = 1; i <= n; ++i) {
            double s = surf.spots[i];
            double diff = 0.5 * params.sigma * params.sigma * s * s / (ds * ds);
            double drift = rate * s / (2.0 * ds);
            double a = diff - drift;          // coefficient of v[i-1]
            double b = -2.0 * diff - rate;    // coefficient of v[i]
            double c = diff + drift;          // coefficient of v[i+1]
            lo[i - 1] = -delta * theta * a;
            diag[i - 1] = 1.0 - delta * theta * b;
            up[i - 1] = -delta * theta * c;
            rhs[i - 1] = v[i] + delta * (1.0 - theta) *
                                    (a * v[i - 1] + b * v[i] + c * v[i + 1]);
            c_last = c;
        }
        // Dirichlet boundaries: v[0] = 0 at both levels, v[total-1] known at
        // the new level; fold the known value into the last interior row.
        rhs[n - 1] += delta * theta * c_last * bnd_hi_new;

        solve_tridiagonal(lo, diag, up, rhs);
        for (int i = 1; i <= n; ++i) v[i] = rhs[i - 1];
        v[0] = 0.0;
        v[total - 1] = bnd_hi_new;
    };

    auto check_and_floor = [&](int level) {
        for (int i = 0; i < total; ++i) {
            if (!std::isfinite(v[i]))
                throw InstabilityError("non-finite value at time level " +
                                       std::to_string(level));
            if (v[i] < 0.0) {
                if (v[i] < neg_floor)
                    throw InstabilityError(
                        "value below numerical floor at time level " +
                        std::to_string(level));
                v[i] = 0.0;
            }
        }
    };

    // Backward induction; first step as two implicit half-steps.
    int j = grid.n_time - 1;
    {
        double t_new = surf.times[j];
        step(1.0, 0.5 * dt, t_new + 0.5 * dt);
        step(1.0, 0.5 * dt, t_new);
        check_and_floor(j);
        surf.values[j] = v;
        --j;
    }
    for (; j >= 0; --j) {
        step(0.5, dt, surf.times[j]);
        check_and_floor(j);
        surf.values[j] = v;
    }
    return surf;
}

std::vector<double> evaluate_on_path(const PriceSurface& surface,
                                     const std::vector<double>& days,
                                     const std::vector<double>& spots) {
    if (days.size() != spots.size())
        throw ShapeError("path days/spots size mismatch");
    std::vector<double> out(days.size());
    for (size_t k = 0; k < days.size(); ++k) {
        try {
            out[k] = surface.value_at(days[k], spots[k]);
        } catch (const ExtrapolationError& e) {
            throw ExtrapolationError("path sample " + std::to_string(k) + ": " +
                                     e.what());
        }
    }
    return out;
}

}  // namespace ibs
