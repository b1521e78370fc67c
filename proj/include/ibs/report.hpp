#pragma once

#include "ibs/calibration.hpp"
#include "ibs/market_data.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ibs {

inline constexpr const char* kToolName = "ibs";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kConfigVersion = 1;

/// Everything a command run needs; defaults match the daily-data scale the
/// toolkit targets. CLI flags override a JSON config file, which overrides
/// these defaults.
struct RunConfig {
    // Paths.
    std::filesystem::path input;             // market CSV
    std::filesystem::path output_dir = ".";  // or $IBS_OUT_DIR
    std::filesystem::path bubble_path;       // bubble spec JSON
    std::filesystem::path calibration_path;  // result.json from `calibrate`

    // Market parameter overrides; estimated from the series when absent.
    std::optional<double> rate;
    std::optional<double> drift;
    std::optional<double> sigma;
    std::optional<double> strike;
    std::optional<double> maturity;

    // Synthesis.
    int n_days = 62;
    std::uint64_t seed = 1u;
    std::optional<double> s0;
    std::string start_date = "2020-01-01";

    // PDE grid; strike-aligned unless explicit bounds are given.
    int n_space = 800;
    int n_time = 400;
    std::optional<double> s_min;
    std::optional<double> s_max;

    // Solver tolerances.
    NewtonConfig newton;
    LmConfig lm;

    // Parameter estimation.
    int pre_window = 90;
};

/// Applies a JSON config document onto cfg (unknown keys rejected).
void apply_config_file(RunConfig& cfg, const nlohmann::json& doc);

/// Simple polyline series for the SVG plots.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Deterministic standalone SVG line plot.
void write_svg_plot(std::ostream& out, const std::string& title,
                    const std::vector<PlotSeries>& series);

/// Two-column CSV with a header line; %.17g formatting.
void write_csv_columns(std::ostream& out, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns);

/// Provenance block embedded in every result.json.
nlohmann::json provenance_block(const RunConfig& cfg, const std::string& command,
                                const MarketParams& params,
                                const OptionContract& contract,
                                const GridSpec& grid);

// Command entry points used by the CLI; each writes its artifacts under
// cfg.output_dir and returns a process exit code.
int cmd_synth(const RunConfig& cfg);
int cmd_calibrate(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);

}  // namespace ibs
