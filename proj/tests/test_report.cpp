#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ibs/errors.hpp"
#include "ibs/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ibs;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Closed-form option prices: the mispricing of this market is exactly zero.
void write_equilibrium_csv(const std::filesystem::path& path, int n_days) {
    MarketParams params{0.00019, 0.001, 0.0046};
    OptionContract contract{100.0, static_cast<double>(n_days),
                            PayoffKind::EuropeanCall};
    auto spots = gbm_path(params, contract.strike, n_days, 5);
    MarketSeries series;
    for (int k = 0; k < n_days; ++k) {
        series.days.push_back(k + 1.0);
        series.dates.push_back(k < 9 ? "2021-01-0" + std::to_string(k + 1)
                                     : "2021-01-" + std::to_string(k + 1));
        series.underlying.push_back(spots[k]);
        series.option.push_back(
            bs_closed_form(spots[k], k + 1.0, contract, params));
    }
    std::ofstream out(path);
    write_series_csv(series, out);
}

}  // namespace

TEST_CASE("csv column writer") {
    std::ostringstream out;
    write_csv_columns(out, {"day", "value"}, {{1.0, 2.0}, {0.5, 0.25}});
    CHECK(out.str() == "day,value\n1,0.5\n2,0.25\n");
    std::ostringstream bad;
    CHECK_THROWS_AS(write_csv_columns(bad, {"day"}, {{1.0}, {2.0}}), ShapeError);
    CHECK_THROWS_AS(write_csv_columns(bad, {"a", "b"}, {{1.0}, {2.0, 3.0}}),
                    ShapeError);
}

TEST_CASE("svg plot is deterministic and contains the series") {
    std::vector<PlotSeries> series = {
        {"alpha", {1, 2, 3}, {0.1, 0.4, 0.2}},
        {"beta", {1, 2, 3}, {0.3, 0.2, 0.5}},
    };
    std::ostringstream a, b;
    write_svg_plot(a, "demo", series);
    write_svg_plot(b, "demo", series);
    CHECK(a.str() == b.str());
    std::string svg = a.str();
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("alpha") != std::string::npos);
    CHECK(svg.find("beta") != std::string::npos);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 10);
    size_t polylines = 0;
    for (size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos;
         ++pos)
        ++polylines;
    CHECK(polylines == 2);
}

TEST_CASE("config file application") {
    RunConfig cfg;
    nlohmann::json doc = {
        {"sigma", 0.0046},
        {"rate", 0.00019},
        {"n_space", 256},
        {"seed", 42},
        {"lm", {{"max_iter", 55}}},
        {"newton", {{"bracket_hi", 3.0}}},
    };
    apply_config_file(cfg, doc);
    CHECK(cfg.sigma == 0.0046);
    CHECK(cfg.rate == 0.00019);
    CHECK(cfg.n_space == 256);
    CHECK(cfg.seed == 42);
    CHECK(cfg.lm.max_iter == 55);
    CHECK(cfg.newton.bracket_hi == 3.0);
    CHECK_THROWS_AS(apply_config_file(cfg, nlohmann::json{{"volatility", 1}}),
                    ParseError);
    CHECK_THROWS_AS(apply_config_file(cfg, nlohmann::json::array()), ParseError);
}

TEST_CASE("synth command writes a reproducible market") {
    auto dir_a = temp_dir("ibs_report_synth_a");
    auto dir_b = temp_dir("ibs_report_synth_b");
    RunConfig cfg;
    cfg.seed = 9;
    cfg.n_days = 20;
    cfg.n_space = 200;
    cfg.n_time = 64;
    cfg.maturity = 20.0;
    cfg.output_dir = dir_a;
    CHECK(cmd_synth(cfg) == 0);
    cfg.output_dir = dir_b;
    CHECK(cmd_synth(cfg) == 0);
    CHECK(slurp(dir_a / "market.csv") == slurp(dir_b / "market.csv"));

    auto result = nlohmann::json::parse(slurp(dir_a / "result.json"));
    CHECK(result["provenance"]["command"] == "synth");
    CHECK(result["provenance"]["seed"] == 9);
    CHECK(result["provenance"]["params"].contains("sigma"));
    CHECK(result["provenance"]["grid"]["n_space"] == 200);
    CHECK(result["rows"] == 20);
}

TEST_CASE("calibrate command artifacts on an equilibrium market") {
    auto dir = temp_dir("ibs_report_cal");
    auto csv = dir / "input.csv";
    write_equilibrium_csv(csv, 20);

    RunConfig cfg;
    cfg.input = csv;
    cfg.output_dir = dir / "out";
    cfg.sigma = 0.0046;
    cfg.drift = 0.001;
    cfg.rate = 0.00019;
    cfg.n_space = 400;
    cfg.n_time = 128;
    CHECK(cmd_calibrate(cfg) == 0);

    for (const char* name : {"mispricing.csv", "rho.csv", "potential.csv",
                             "bubble.csv", "result.json", "mispricing.svg",
                             "rho.svg", "potential.svg", "bubble.svg"})
        CHECK(std::filesystem::exists(cfg.output_dir / name));

    auto result = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
    CHECK(std::abs(result["calibration"]["fit"]["b"].get<double>()) < 1e-6);
    CHECK(result["provenance"]["command"] == "calibrate");
    CHECK(result["provenance"]["lm"].contains("step_tol"));
}

TEST_CASE("calibrate command fitted rho column follows the fitted model") {
    auto dir = temp_dir("ibs_report_planted");
    MarketParams params{0.00019, 0.001, 0.0046};
    OptionContract contract{100.0, 62.0, PayoffKind::EuropeanCall};
    BubbleSpec spec(PowerLawRhoBubble{0.1242, -0.2159, -0.1162});
    MarketSeries series = synthesize_market(params, contract, spec, 62, 41);
    auto csv = dir / "input.csv";
    {
        std::ofstream out(csv);
        write_series_csv(series, out);
    }

    RunConfig cfg;
    cfg.input = csv;
    cfg.output_dir = dir / "out";
    cfg.sigma = 0.0046;
    cfg.drift = 0.001;
    cfg.rate = 0.00019;
    cfg.n_space = 400;
    cfg.n_time = 200;
    REQUIRE(cmd_calibrate(cfg) == 0);

    auto result = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
    double a = result["calibration"]["fit"]["a"].get<double>();
    double b = result["calibration"]["fit"]["b"].get<double>();
    double c = result["calibration"]["fit"]["c"].get<double>();
    CHECK(std::abs(b - (-0.2159)) / 0.2159 < 0.1);
    CHECK(std::abs(c - (-0.1162)) / 0.1162 < 0.1);

    // The fitted column of rho.csv is exactly a + b t^c.
    std::ifstream rho_csv(cfg.output_dir / "rho.csv");
    std::string line;
    REQUIRE(std::getline(rho_csv, line));
    CHECK(line == "day,empirical,fitted");
    size_t rows = 0;
    while (std::getline(rho_csv, line)) {
        ++rows;
        std::stringstream row(line);
        std::string day_s, emp_s, fit_s;
        REQUIRE(std::getline(row, day_s, ','));
        REQUIRE(std::getline(row, emp_s, ','));
        REQUIRE(std::getline(row, fit_s, ','));
        double day = std::stod(day_s);
        double fitted = std::stod(fit_s);
        CHECK(fitted == doctest::Approx(a + b * std::pow(day, c)).epsilon(1e-9));
    }
    CHECK(rows >= 60);
}

TEST_CASE("simulate command compares the two models") {
    auto dir = temp_dir("ibs_report_sim");
    auto csv = dir / "input.csv";
    write_equilibrium_csv(csv, 20);

    auto bubble_path = dir / "bubble.json";
    {
        std::ofstream out(bubble_path);
        out << BubbleSpec{}.to_json().dump() << '\n';
    }

    RunConfig cfg;
    cfg.input = csv;
    cfg.output_dir = dir / "out";
    cfg.bubble_path = bubble_path;
    cfg.sigma = 0.0046;
    cfg.drift = 0.001;
    cfg.rate = 0.00019;
    cfg.n_space = 400;
    cfg.n_time = 128;
    CHECK(cmd_simulate(cfg) == 0);

    auto table = slurp(cfg.output_dir / "prices.csv");
    CHECK(table.rfind("day,empirical,bs,interacting", 0) == 0);
    auto result = nlohmann::json::parse(slurp(cfg.output_dir / "result.json"));
    // Zero bubble: both repricings are the same solve.
    double chi_bs = result["chi2"]["black_scholes"].get<double>();
    double chi_int = result["chi2"]["interacting"].get<double>();
    CHECK(chi_bs == chi_int);
    CHECK(std::filesystem::exists(cfg.output_dir / "prices.svg"));

    SUBCASE("missing potential source is a config error") {
        RunConfig none = cfg;
        none.bubble_path.clear();
        CHECK_THROWS_AS(cmd_simulate(none), ParseError);
    }
}

TEST_CASE("report command regenerates plots") {
    auto dir = temp_dir("ibs_report_rep");
    auto csv = dir / "input.csv";
    write_equilibrium_csv(csv, 20);
    RunConfig cfg;
    cfg.input = csv;
    cfg.output_dir = dir / "out";
    cfg.sigma = 0.0046;
    cfg.drift = 0.001;
    cfg.rate = 0.00019;
    cfg.n_space = 400;
    cfg.n_time = 128;
    REQUIRE(cmd_calibrate(cfg) == 0);

    std::filesystem::remove(cfg.output_dir / "rho.svg");
    RunConfig rep;
    rep.input = cfg.output_dir;
    CHECK(cmd_report(rep) == 0);
    CHECK(std::filesystem::exists(cfg.output_dir / "rho.svg"));

    RunConfig missing;
    missing.input = dir / "nowhere";
    CHECK_THROWS_AS(cmd_report(missing), ParseError);
}
