#include "ibs/calibration.hpp"

#include "ibs/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace ibs {

namespace {

struct Model {
    const std::vector<double>& t;
    const std::vector<double>& y;

    double sse(const std::array<double, 3>& p) const {
        double acc = 0.0;
        for (size_t k = 0; k < t.size(); ++k) {
            double res = p[0] + p[1] * std::pow(t[k], p[2]) - y[k];
            acc += res * res;
        }
        return acc;
    }
};

// Solves a symmetric 3x3 system by Gaussian elimination with partial
// pivoting; returns false when the matrix is numerically singular.
bool solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> b,
            std::array<double, 3>& x) {
    std::array<int, 3> idx = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::abs(m[idx[row]][col]) > std::abs(m[idx[piv]][col])) piv = row;
        std::swap(idx[col], idx[piv]);
        double d = m[idx[col]][col];
        if (std::abs(d) < 1e-300) return false;
        for (int row = col + 1; row < 3; ++row) {
            double w = m[idx[row]][col] / d;
            for (int cc = col; cc < 3; ++cc) m[idx[row]][cc] -= w * m[idx[col]][cc];
            b[idx[row]] -= w * b[idx[col]];
        }
    }
    for (int col = 2; col >= 0; --col) {
        double acc = b[idx[col]];
        for (int cc = col + 1; cc < 3; ++cc) acc -= m[idx[col]][cc] * x[cc];
        x[col] = acc / m[idx[col]][col];
        if (!std::isfinite(x[col])) return false;
    }
    return true;
}

}  // namespace

double RhoFit::rho_at(double t) const { return a + b * std::pow(t, c); }

nlohmann::json RhoFit::to_json() const {
    return nlohmann::json{{"a", a},
                          {"b", b},
                          {"c", c},
                          {"residual_rms", residual_rms},
                          {"gradient_norm", gradient_norm},
                          {"iterations", iterations},
                          {"converged", converged},
                          {"c_identifiable", c_identifiable}};
}

nlohmann::json CalibrationResult::to_json() const {
    auto zip = [](const std::vector<double>& xs, const std::vector<double>& ys) {
        auto rows = nlohmann::json::array();
        for (size_t i = 0; i < xs.size(); ++i) rows.push_back({xs[i], ys[i]});
        return rows;
    };
    nlohmann::json doc;
    doc["rho_points"] = zip(rho_days, rho_values);
    doc["failed_days"] = failed_days;
    doc["fit"] = fit.to_json();
    doc["potential"] = zip(potential.days, potential.values);
    doc["bubble"] = zip(bubble_days, bubble_values);
    doc["bubble_pole_days"] = bubble_pole_days;
    doc["chi2"] = {{"black_scholes", chi2_bs}, {"interacting", chi2_interacting}};
    return doc;
}

MispricingSeries compute_mispricing(const MarketSeries& series,
                                    const OptionContract& contract,
                                    const MarketParams& params) {
    series.validate();
    if (series.size() == 0) throw DomainError("market series is empty");
    MispricingSeries out;
    out.days = series.days;
    out.values.resize(series.size());
    for (size_t k = 0; k < series.size(); ++k) {
        try {
            out.values[k] = series.option[k] -
                            bs_closed_form(series.underlying[k], series.days[k],
                                           contract, params);
        } catch (const DomainError& e) {
            throw DomainError("sample " + std::to_string(k) + " (day " +
                              std::to_string(series.days[k]) + "): " + e.what());
        }
    }
    return out;
}

double solve_rho_pointwise(double s, double t, double m,
                           const OptionContract& contract,
                           const MarketParams& params, const NewtonConfig& cfg) {
    double pi_bs = bs_closed_form(s, t, contract, params);
    double pi_emp = pi_bs + m;
    if (!(pi_emp > 0.0))
        throw NoRootError("implied empirical price " + std::to_string(pi_emp) +
                          " is not positive");
    if (m == 0.0) return 0.0;

    auto g = [&](double rho) {
        double scale = std::exp(rho);
        return pi_emp * scale - bs_closed_form(scale * s, t, contract, params);
    };
    auto g_prime = [&](double rho) {
        double scale = std::exp(rho);
        return pi_emp * scale -
               scale * s * bs_delta(scale * s, t, contract, params);
    };
    auto check_residual = [&](double rho) {
        double res = g(rho);
        if (!(std::abs(res) < cfg.residual_tol * (pi_bs + 1.0)))
            throw ConvergenceError("rho residual " + std::to_string(res) +
                                   " above tolerance");
        return rho;
    };

    // Plain Newton from rho = 0 with the analytic derivative; any sign of
    // divergence (leaving the bracket, flat derivative, iteration cap)
    // falls through to the bisection path below.
    double rho = 0.0;
    bool newton_converged = false;
    for (int it = 0; it < cfg.max_iter && !newton_converged; ++it) {
        double val = g(rho);
        if (val == 0.0) return rho;
        double der = g_prime(rho);
        if (!std::isfinite(der) || der == 0.0) break;
        double next = rho - val / der;
        if (!std::isfinite(next) || next < cfg.bracket_lo || next > cfg.bracket_hi)
            break;
        double step = std::abs(next - rho);
        rho = next;
        newton_converged = step <= 1e-13 * std::max(1.0, std::abs(rho));
    }
    if (newton_converged) return check_residual(rho);

    // Bisection fallback on a scanned bracket.
    constexpr int kScan = 40;
    double lo = cfg.bracket_lo, hi = cfg.bracket_hi;
    double bl = std::numeric_limits<double>::quiet_NaN();
    double bh = bl;
    double prev_x = lo, prev_v = g(lo);
    for (int i = 1; i <= kScan; ++i) {
        double x = lo + (hi - lo) * i / kScan;
        double val = g(x);
        if ((prev_v < 0.0 && val > 0.0) || (prev_v > 0.0 && val < 0.0) ||
            val == 0.0) {
            bl = prev_x;
            bh = x;
            break;
        }
        prev_x = x;
        prev_v = val;
    }
    if (!std::isfinite(bl))
        throw NoRootError("no sign change of the mispricing residual in [" +
                          std::to_string(cfg.bracket_lo) + ", " +
                          std::to_string(cfg.bracket_hi) + "]");

    double fl = g(bl);
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (bl + bh);
        double fm = g(mid);
        // Newton polish from inside the bracket once it is tight.
        if (bh - bl < 1e-6) {
            double der = g_prime(mid);
            if (std::isfinite(der) && der != 0.0) {
                double next = mid - fm / der;
                if (next > bl && next < bh &&
                    std::abs(next - mid) <= 1e-13 * std::max(1.0, std::abs(next)))
                    return check_residual(next);
            }
        }
        if (fm == 0.0 || bh - bl <= 1e-15 * std::max(1.0, std::abs(mid)))
            return check_residual(mid);
        if ((fl < 0.0) != (fm < 0.0)) {
            bh = mid;
        } else {
            bl = mid;
            fl = fm;
        }
    }
    throw ConvergenceError("rho bisection exceeded the iteration cap");
}

RhoFit fit_rho_model(const std::vector<double>& days,
                     const std::vector<double>& rho,
                     const std::array<double, 3>& init, const LmConfig& cfg) {
    if (days.size() != rho.size())
        throw ShapeError("rho fit days/values size mismatch");
    if (days.size() < 4)
        throw DomainError("rho fit needs at least 4 points");
    for (double t : days)
        if (!(t >= 1.0))
            throw DomainError("rho fit requires all days >= 1");
    if (init[2] == 0.0) throw DomainError("rho fit requires c != 0");

    Model model{days, rho};
    std::array<double, 3> p = init;
    double sse = model.sse(p);
    double lambda = cfg.lambda0;
    RhoFit fit;
    int it = 0;
    bool converged = false;
    double grad_norm = std::numeric_limits<double>::infinity();

    for (; it < cfg.max_iter && !converged; ++it) {
        // Assemble the normal equations.
        std::array<std::array<double, 3>, 3> jtj{};
        std::array<double, 3> jtr{};
        for (size_t k = 0; k < days.size(); ++k) {
            double tc = std::pow(days[k], p[2]);
            double res = p[0] + p[1] * tc - rho[k];
            std::array<double, 3> row = {1.0, tc, p[1] * std::log(days[k]) * tc};
            for (int i = 0; i < 3; ++i) {
                jtr[i] += row[i] * res;
                for (int jj = 0; jj < 3; ++jj) jtj[i][jj] += row[i] * row[jj];
            }
        }
        grad_norm = std::max({std::abs(jtr[0]), std::abs(jtr[1]), std::abs(jtr[2])});
        if (grad_norm < cfg.grad_tol) {
            converged = true;
            break;
        }

        double max_diag = std::max({jtj[0][0], jtj[1][1], jtj[2][2], 1e-300});
        bool accepted = false;
        while (!accepted) {
            auto damped = jtj;
            for (int i = 0; i < 3; ++i) {
                double d = jtj[i][i] > 0.0 ? jtj[i][i] : max_diag;
                damped[i][i] += lambda * d;
            }
            std::array<double, 3> delta{};
            std::array<double, 3> neg = {-jtr[0], -jtr[1], -jtr[2]};
            bool ok = solve3(damped, neg, delta);
            if (ok) {
                std::array<double, 3> trial = {p[0] + delta[0], p[1] + delta[1],
                                               p[2] + delta[2]};
                double trial_sse =
                    trial[2] == 0.0 ? std::numeric_limits<double>::infinity()
                                    : model.sse(trial);
                if (std::isfinite(trial_sse) && trial_sse <= sse) {
                    double pnorm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                    double dnorm = std::sqrt(delta[0] * delta[0] +
                                             delta[1] * delta[1] +
                                             delta[2] * delta[2]);
                    p = trial;
                    sse = trial_sse;
                    lambda = std::max(lambda * 0.1, 1e-12);
                    accepted = true;
                    if (dnorm <= cfg.step_tol * (pnorm + 1e-30)) converged = true;
                    break;
                }
            }
            lambda *= 10.0;
            if (lambda > cfg.lambda_max) break;  // damping overflow
        }
        if (!accepted) break;
    }

    // Gradient at the returned parameters.
    {
        std::array<double, 3> jtr{};
        for (size_t k = 0; k < days.size(); ++k) {
            double tc = std::pow(days[k], p[2]);
            double res = p[0] + p[1] * tc - rho[k];
            jtr[0] += res;
            jtr[1] += tc * res;
            jtr[2] += p[1] * std::log(days[k]) * tc * res;
        }
        grad_norm = std::max({std::abs(jtr[0]), std::abs(jtr[1]), std::abs(jtr[2])});
    }

    fit.a = p[0];
    fit.b = p[1];
    fit.c = p[2];
    fit.residual_rms = std::sqrt(sse / days.size());
    fit.gradient_norm = grad_norm;
    fit.iterations = it;
    fit.converged = converged;
    double scale = 0.0;
    for (double y : rho) scale += y * y;
    scale = std::sqrt(scale / rho.size());
    fit.c_identifiable = std::abs(fit.b) > 1e-8 * std::max(scale, 1e-12);
    return fit;
}

RhoFit fit_rho_model(const std::vector<double>& days,
                     const std::vector<double>& rho, const LmConfig& cfg) {
    if (days.size() < 4)
        throw DomainError("rho fit needs at least 4 points");
    double a0 = 0.0;
    for (double y : rho) a0 += y;
    a0 /= rho.size();
    double b0 = rho.front() - a0;

    RhoFit best;
    double best_sse = std::numeric_limits<double>::infinity();
    bool have = false;
    for (double c0 : cfg.c_starts) {
        RhoFit fit = fit_rho_model(days, rho, {a0, b0, c0}, cfg);
        double sse = fit.residual_rms * fit.residual_rms * days.size();
        if (!have || sse < best_sse ||
            (sse == best_sse && fit.converged && !best.converged)) {
            best = fit;
            best_sse = sse;
            have = true;
        }
    }
    return best;
}

FittedPotential::FittedPotential(const RhoFit& fit) : b_(fit.b), c_(fit.c) {
    if (c_ == 0.0) throw DomainError("fitted potential requires c != 0");
}

double FittedPotential::operator()(double t) const {
    if (!(t >= 1.0))
        throw DomainError("fitted potential defined for t >= 1, got " +
                          std::to_string(t));
    return -c_ * b_ * std::pow(t, c_ - 1.0);
}

PotentialSeries FittedPotential::sample(const std::vector<double>& days) const {
    PotentialSeries out;
    out.days = days;
    out.values.reserve(days.size());
    for (double t : days) out.values.push_back((*this)(t));
    out.validate();
    return out;
}

FittedPotential potential_from_fit(const RhoFit& fit) {
    return FittedPotential(fit);
}

BubbleSeries extract_bubble(const PotentialSeries& potential,
                            const MarketParams& params) {
    potential.validate();
    BubbleSeries out;
    for (size_t k = 0; k < potential.days.size(); ++k) {
        try {
            double f = bubble_from_potential(potential.values[k], params);
            out.days.push_back(potential.days[k]);
            out.values.push_back(f);
        } catch (const PoleError&) {
            out.pole_days.push_back(potential.days[k]);
        }
    }
    if (out.days.empty() && !potential.days.empty())
        throw InfeasibleError("every potential sample sits at the pole U = mu - r");
    return out;
}

double chi_squared(std::span<const double> model,
                   std::span<const double> empirical) {
    if (model.size() != empirical.size())
        throw ShapeError("chi-squared series length mismatch: " +
                         std::to_string(model.size()) + " vs " +
                         std::to_string(empirical.size()));
    double acc = 0.0;
    for (size_t k = 0; k < model.size(); ++k) {
        double res = model[k] - empirical[k];
        acc += res * res;
    }
    return acc;
}

CalibrationResult calibrate(const MarketSeries& series,
                            const OptionContract& contract,
                            const MarketParams& params,
                            const CalibrationConfig& cfg) {
    series.validate();
    if (series.size() < 5)
        throw DomainError("calibration needs a series spanning >= 5 days");

    MispricingSeries mis = compute_mispricing(series, contract, params);

    CalibrationResult result;
    for (size_t k = 0; k < series.size(); ++k) {
        try {
            double rho = solve_rho_pointwise(series.underlying[k], series.days[k],
                                             mis.values[k], contract, params,
                                             cfg.newton);
            result.rho_days.push_back(series.days[k]);
            result.rho_values.push_back(rho);
        } catch (const NoRootError&) {
            result.failed_days.push_back(series.days[k]);
        } catch (const ConvergenceError&) {
            result.failed_days.push_back(series.days[k]);
        }
    }
    if (result.failed_days.size() >
        cfg.max_failure_fraction * static_cast<double>(series.size()))
        throw InfeasibleError(
            "root solve failed on " + std::to_string(result.failed_days.size()) +
            " of " + std::to_string(series.size()) + " days");

    result.fit = fit_rho_model(result.rho_days, result.rho_values, cfg.lm);
    FittedPotential potential = potential_from_fit(result.fit);
    result.potential = potential.sample(series.days);

    BubbleSeries bubble = extract_bubble(result.potential, params);
    result.bubble_days = bubble.days;
    result.bubble_values = bubble.values;
    result.bubble_pole_days = bubble.pole_days;

    GridSpec grid = cfg.pde_grid
                        ? *cfg.pde_grid
                        : GridSpec::aligned_to_strike(contract.strike, 800, 400,
                                                      series.days.front());
    PriceSurface bs_surface = solve_interacting(
        contract, params, [](double) { return 0.0; }, grid);
    PriceSurface fit_surface =
        solve_interacting(contract, params, potential, grid);
    auto bs_prices = evaluate_on_path(bs_surface, series.days, series.underlying);
    auto fit_prices =
        evaluate_on_path(fit_surface, series.days, series.underlying);
    result.chi2_bs = chi_squared(bs_prices, series.option);
    result.chi2_interacting = chi_squared(fit_prices, series.option);
    return result;
}

}  // namespace ibs
