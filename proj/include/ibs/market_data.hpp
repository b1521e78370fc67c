#pragma once

#include "ibs/bubble.hpp"
#include "ibs/pde.hpp"
#include "ibs/pricing.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ibs {

/// Aligned daily samples of the underlying and the option price.
/// Day indices run 1..N in trading-day order.
struct MarketSeries {
    std::vector<double> days;
    std::vector<std::string> dates;     // ISO-8601, one per sample
    std::vector<double> underlying;     // S_emp(t_k)
    std::vector<double> option;         // pi_emp(t_k)
    std::string contract_id;

    size_t size() const { return days.size(); }
    void validate() const;
};

struct EstimationWindow {
    int pre_window = 90;   // days of history used for sigma and mu
    double rate = 0.0;     // configured risk-free rate per day
};

/// Reads a CSV file with header `date,underlying,option`. Dates must be
/// strictly increasing ISO-8601; parse failures name the offending line.
MarketSeries load_series(const std::filesystem::path& path);

/// Writes the same CSV schema (full precision, deterministic formatting).
void write_series_csv(const MarketSeries& series, std::ostream& out);

/// sigma = sample standard deviation and mu = sample mean of the daily log
/// returns over the trailing window; r comes from the window config.
/// A constant price series yields sigma = 0, which pricing rejects.
MarketParams estimate_params(const std::vector<double>& pre_series,
                             const EstimationWindow& window);

/// Intrinsic option value max(F - K, 0) used as the simulated market price.
double simulated_option_price(double future_price, double strike);

/// Exact-lognormal daily GBM path S_{k+1} = S_k exp(mu - sigma^2/2 + sigma Z).
/// sigma = 0 gives the deterministic exponential s0 exp(mu t).
std::vector<double> gbm_path(const MarketParams& params, double s0, int n_days,
                             std::uint64_t seed);

struct SynthConfig {
    double s0 = -1.0;            // opening price; defaults to the strike
    std::string start_date = "2020-01-01";
    std::optional<GridSpec> pde_grid;  // grid for the option repricing
};

/// Synthetic daily market: exact-lognormal GBM path for the underlying and
/// option prices from the interacting PDE under the given bubble. Days run
/// 1..n_days; reproducible per seed.
MarketSeries synthesize_market(const MarketParams& params,
                               const OptionContract& contract,
                               const BubbleSpec& spec, int n_days,
                               std::uint64_t seed,
                               const SynthConfig& cfg = {});

}  // namespace ibs
