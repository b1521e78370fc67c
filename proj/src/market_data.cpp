#include "ibs/market_data.hpp"

#include "ibs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace ibs {

namespace {

bool parse_double(const std::string& cell, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(cell, &pos);
        return pos == cell.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

// Days since a fixed epoch for a yyyy-mm-dd date; proleptic Gregorian.
long day_number(int y, int m, int d) {
    y -= m <= 2;
    long era = (y >= 0 ? y : y - 399) / 400;
    unsigned yoe = static_cast<unsigned>(y - era * 400);
    unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string date_offset(const std::string& iso, int offset) {
    int y = std::stoi(iso.substr(0, 4));
    int m = std::stoi(iso.substr(5, 2));
    int d = std::stoi(iso.substr(8, 2));
    long n = day_number(y, m, d) + offset + 719468;
    long era = (n >= 0 ? n : n - 146096) / 146097;
    unsigned doe = static_cast<unsigned>(n - era * 146097);
    unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    long yy = static_cast<long>(yoe) + era * 400;
    unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    unsigned mp = (5 * doy + 2) / 153;
    unsigned dd = doy - (153 * mp + 2) / 5 + 1;
    unsigned mm = mp + (mp < 10 ? 3 : -9);
    yy += (mm <= 2);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", yy, mm, dd);
    return buf;
}

bool looks_like_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

}  // namespace

void MarketSeries::validate() const {
    if (days.size() != underlying.size() || days.size() != option.size() ||
        days.size() != dates.size())
        throw ShapeError("market series columns have mismatched lengths");
    for (size_t i = 0; i < days.size(); ++i) {
        if (i > 0 && !(days[i - 1] < days[i]))
            throw DomainError("market series days must be strictly increasing");
        if (!(underlying[i] > 0.0))
            throw DomainError("underlying price must be positive at day " +
                              std::to_string(days[i]));
    }
}

MarketSeries load_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string());

    MarketSeries series;
    series.contract_id = path.stem().string();
    std::string line;
    size_t line_no = 0;

    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    if (header.size() != 3 || header[0] != "date" || header[1] != "underlying" ||
        header[2] != "option")
        throw ParseError(path.string() +
                         ":1: expected header date,underlying,option");

    std::string prev_date;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        std::string where = path.string() + ":" + std::to_string(line_no);
        if (cells.size() != 3)
            throw ParseError(where + ": expected 3 columns, got " +
                             std::to_string(cells.size()));
        if (!looks_like_iso_date(cells[0]))
            throw ParseError(where + ": bad date \"" + cells[0] + "\"");
        if (!prev_date.empty() && cells[0] <= prev_date)
            throw ParseError(where + ": dates not strictly increasing at \"" +
                             cells[0] + "\"");
        double s = 0.0, pi = 0.0;
        if (!parse_double(cells[1], s))
            throw ParseError(where + ": non-numeric underlying \"" + cells[1] + "\"");
        if (!parse_double(cells[2], pi))
            throw ParseError(where + ": non-numeric option \"" + cells[2] + "\"");
        prev_date = cells[0];
        series.dates.push_back(cells[0]);
        series.days.push_back(static_cast<double>(series.dates.size()));
        series.underlying.push_back(s);
        series.option.push_back(pi);
    }
    series.validate();
    return series;
}

void write_series_csv(const MarketSeries& series, std::ostream& out) {
    out << "date,underlying,option\n";
    char buf[64];
    for (size_t i = 0; i < series.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", series.underlying[i],
                      series.option[i]);
        out << series.dates[i] << ',' << buf << '\n';
    }
}

MarketParams estimate_params(const std::vector<double>& pre_series,
                             const EstimationWindow& window) {
    if (window.pre_window < 2)
        throw DomainError("estimation window must span at least 2 days");
    if (static_cast<int>(pre_series.size()) < window.pre_window)
        throw DomainError("insufficient history: need " +
                          std::to_string(window.pre_window) + " days, have " +
                          std::to_string(pre_series.size()));

    size_t begin = pre_series.size() - window.pre_window;
    std::vector<double> returns;
    returns.reserve(window.pre_window - 1);
    for (size_t i = begin + 1; i < pre_series.size(); ++i) {
        if (!(pre_series[i] > 0.0) || !(pre_series[i - 1] > 0.0))
            throw DomainError("prices must be positive for return estimation");
        returns.push_back(std::log(pre_series[i] / pre_series[i - 1]));
    }

    double mean = 0.0;
    for (double ret : returns) mean += ret;
    mean /= returns.size();
    double ss = 0.0;
    for (double ret : returns) ss += (ret - mean) * (ret - mean);
    double sigma = returns.size() > 1 ? std::sqrt(ss / (returns.size() - 1)) : 0.0;

    return MarketParams{window.rate, mean, sigma};
}

double simulated_option_price(double future_price, double strike) {
    if (!(future_price >= 0.0) || !(strike >= 0.0))
        throw DomainError("prices must be nonnegative");
    return std::max(future_price - strike, 0.0);
}

std::vector<double> gbm_path(const MarketParams& params, double s0, int n_days,
                             std::uint64_t seed) {
    if (!(s0 > 0.0)) throw DomainError("path needs a positive opening price");
    if (!(params.sigma >= 0.0) || !std::isfinite(params.sigma) ||
        !std::isfinite(params.mu))
        throw DomainError("path needs finite mu and sigma >= 0");
    if (n_days < 1) throw DomainError("path needs at least 1 day");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> path(n_days);
    path[0] = s0;
    double drift = params.mu - 0.5 * params.sigma * params.sigma;
    for (int k = 1; k < n_days; ++k)
        path[k] = path[k - 1] * std::exp(drift + params.sigma * normal(rng));
    return path;
}

MarketSeries synthesize_market(const MarketParams& params,
                               const OptionContract& contract,
                               const BubbleSpec& spec, int n_days,
                               std::uint64_t seed, const SynthConfig& cfg) {
    params.validate();
    contract.validate();
    spec.validate();
    if (n_days < 2) throw DomainError("synthesis needs at least 2 days");
    if (!(n_days <= contract.maturity))
        throw DomainError("synthesis horizon exceeds contract maturity");

    double s0 = cfg.s0 > 0.0 ? cfg.s0 : contract.strike;
    if (!(s0 > 0.0)) throw DomainError("synthesis needs a positive opening price");
    if (!looks_like_iso_date(cfg.start_date))
        throw ParseError("start date must be ISO-8601 yyyy-mm-dd, got \"" +
                         cfg.start_date + "\"");

    // Exact lognormal daily stepping of the underlying.
    std::vector<double> path = gbm_path(params, s0, n_days, seed);

    MarketSeries series;
    series.contract_id = "synthetic";
    series.days.resize(n_days);
    series.dates.resize(n_days);
    series.underlying = path;
    for (int k = 0; k < n_days; ++k) {
        series.days[k] = k + 1.0;
        series.dates[k] = date_offset(cfg.start_date, k);
    }

    // Option prices from the interacting PDE with the planted bubble. The
    // power-law potential is singular below day 1, so the solve starts there.
    GridSpec grid;
    if (cfg.pde_grid) {
        grid = *cfg.pde_grid;
    } else {
        // Fine enough that the discretization mispricing of the generated
        // prices stays below 1e-3 relative even close to expiry.
        grid = GridSpec::aligned_to_strike(contract.strike, 3200, 1000, 1.0);
        double lo = *std::min_element(path.begin(), path.end());
        double hi = *std::max_element(path.begin(), path.end());
        if (lo <= grid.s_min || hi >= grid.s_max)
            throw DomainError("synthetic path escapes the default grid");
    }
    auto potential = potential_evaluator(spec, params);
    PriceSurface surface = solve_interacting(contract, params, potential, grid);
    series.option = evaluate_on_path(surface, series.days, series.underlying);
    series.validate();
    return series;
}

}  // namespace ibs
