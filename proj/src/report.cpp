#include "ibs/report.hpp"

#include "ibs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace ibs {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    return out;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        nlohmann::json doc;
        in >> doc;
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

BubbleSpec load_bubble_file(const std::filesystem::path& path) {
    return BubbleSpec::from_json(read_json_file(path));
}

MarketParams resolve_params(const RunConfig& cfg, const MarketSeries* series) {
    MarketParams params;
    if (series && !(cfg.sigma && cfg.drift)) {
        EstimationWindow window{
            std::min(cfg.pre_window, static_cast<int>(series->size())),
            cfg.rate.value_or(0.0)};
        params = estimate_params(series->underlying, window);
    } else if (series) {
        // Fully specified by flags/config; rate defaults to 0 like the
        // estimation path.
        params = MarketParams{cfg.rate.value_or(0.0), 0.0, 0.0};
    } else {
        // Synthesis with nothing given: defaults at the daily scale of the
        // toolkit.
        params = MarketParams{0.00019, 0.001, 0.0046};
    }
    if (cfg.rate) params.r = *cfg.rate;
    if (cfg.drift) params.mu = *cfg.drift;
    if (cfg.sigma) params.sigma = *cfg.sigma;
    params.validate();
    return params;
}

OptionContract resolve_contract(const RunConfig& cfg, const MarketSeries* series) {
    double strike = cfg.strike.value_or(
        series ? series->underlying.front() : 100.0);
    double maturity = cfg.maturity.value_or(
        series ? series->days.back() : static_cast<double>(cfg.n_days));
    OptionContract contract{strike, maturity, PayoffKind::EuropeanCall};
    contract.validate();
    return contract;
}

GridSpec resolve_grid(const RunConfig& cfg, double strike, double t_start) {
    if (cfg.s_min && cfg.s_max)
        return GridSpec{*cfg.s_min, *cfg.s_max, cfg.n_space, cfg.n_time, t_start};
    return GridSpec::aligned_to_strike(strike, cfg.n_space, cfg.n_time, t_start,
                                       cfg.s_min.value_or(-1.0));
}

void write_result_json(const std::filesystem::path& dir, nlohmann::json doc) {
    auto out = open_output(dir / "result.json");
    out << doc.dump(2) << '\n';
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

CsvTable read_csv_columns(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty file");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);
    table.columns.resize(table.header.size());
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ls(line);
        size_t col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col >= table.columns.size())
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": too many columns");
            try {
                table.columns[col].push_back(std::stod(cell));
            } catch (...) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": non-numeric cell \"" + cell + "\"");
            }
            ++col;
        }
    }
    return table;
}

void plot_csv(const std::filesystem::path& csv_path,
              const std::filesystem::path& svg_path, const std::string& title) {
    CsvTable table = read_csv_columns(csv_path);
    if (table.header.size() < 2 || table.columns[0].empty()) return;
    std::vector<PlotSeries> series;
    for (size_t col = 1; col < table.header.size(); ++col)
        series.push_back({table.header[col], table.columns[0], table.columns[col]});
    auto out = open_output(svg_path);
    write_svg_plot(out, title, series);
}

}  // namespace

void apply_config_file(RunConfig& cfg, const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("config document must be an object");
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "input") cfg.input = value.get<std::string>();
            else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
            else if (key == "bubble") cfg.bubble_path = value.get<std::string>();
            else if (key == "calibration")
                cfg.calibration_path = value.get<std::string>();
            else if (key == "rate") cfg.rate = value.get<double>();
            else if (key == "drift") cfg.drift = value.get<double>();
            else if (key == "sigma") cfg.sigma = value.get<double>();
            else if (key == "strike") cfg.strike = value.get<double>();
            else if (key == "maturity") cfg.maturity = value.get<double>();
            else if (key == "n_days") cfg.n_days = value.get<int>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "s0") cfg.s0 = value.get<double>();
            else if (key == "start_date") cfg.start_date = value.get<std::string>();
            else if (key == "n_space") cfg.n_space = value.get<int>();
            else if (key == "n_time") cfg.n_time = value.get<int>();
            else if (key == "s_min") cfg.s_min = value.get<double>();
            else if (key == "s_max") cfg.s_max = value.get<double>();
            else if (key == "pre_window") cfg.pre_window = value.get<int>();
            else if (key == "newton") {
                const auto& n = value;
                if (n.contains("bracket_lo"))
                    cfg.newton.bracket_lo = n["bracket_lo"].get<double>();
                if (n.contains("bracket_hi"))
                    cfg.newton.bracket_hi = n["bracket_hi"].get<double>();
                if (n.contains("max_iter"))
                    cfg.newton.max_iter = n["max_iter"].get<int>();
                if (n.contains("residual_tol"))
                    cfg.newton.residual_tol = n["residual_tol"].get<double>();
            } else if (key == "lm") {
                const auto& l = value;
                if (l.contains("max_iter"))
                    cfg.lm.max_iter = l["max_iter"].get<int>();
                if (l.contains("step_tol"))
                    cfg.lm.step_tol = l["step_tol"].get<double>();
                if (l.contains("grad_tol"))
                    cfg.lm.grad_tol = l["grad_tol"].get<double>();
                if (l.contains("c_starts"))
                    cfg.lm.c_starts = l["c_starts"].get<std::vector<double>>();
            } else {
                throw ParseError("unknown config key \"" + key + "\"");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad config value: ") + e.what());
    }
}

void write_svg_plot(std::ostream& out, const std::string& title,
                    const std::vector<PlotSeries>& series) {
    constexpr int kW = 860, kH = 480;
    constexpr int kLeft = 72, kRight = 24, kTop = 44, kBottom = 48;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
        for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
    }
    if (!(xmin < xmax)) { xmin -= 0.5; xmax += 0.5; }
    if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) {
        return kLeft + (x - xmin) / (xmax - xmin) * (kW - kLeft - kRight);
    };
    auto py = [&](double y) {
        return kH - kBottom - (y - ymin) / (ymax - ymin) * (kH - kTop - kBottom);
    };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
        << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH
        << "\">\n";
    out << "<rect width=\"" << kW << "\" height=\"" << kH
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"16\" text-anchor=\"middle\">" << title << "</text>\n";

    // Axes with five ticks per side.
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i < 5; ++i) {
        double xv = xmin + (xmax - xmin) * i / 4;
        double yv = ymin + (ymax - ymin) * i / 4;
        out << "<line x1=\"" << fmt(px(xv), "%.2f") << "\" y1=\"" << kH - kBottom
            << "\" x2=\"" << fmt(px(xv), "%.2f") << "\" y2=\"" << kTop
            << "\" stroke=\"#ddd\"/>\n";
        out << "<line x1=\"" << kLeft << "\" y1=\"" << fmt(py(yv), "%.2f")
            << "\" x2=\"" << kW - kRight << "\" y2=\"" << fmt(py(yv), "%.2f")
            << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << fmt(px(xv), "%.2f") << "\" y=\"" << kH - kBottom + 16
            << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt(py(yv) + 4, "%.2f")
            << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
    out << "</g>\n";
    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
        << kW - kLeft - kRight << "\" height=\"" << kH - kTop - kBottom
        << "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (size_t idx = 0; idx < series.size(); ++idx) {
        const auto& s = series[idx];
        const char* color = kPalette[idx % 4];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (size_t k = 0; k < s.x.size(); ++k) {
            if (k) out << ' ';
            out << fmt(px(s.x[k]), "%.2f") << ',' << fmt(py(s.y[k]), "%.2f");
        }
        out << "\"/>\n";
        int ly = kTop + 18 + static_cast<int>(idx) * 18;
        out << "<line x1=\"" << kW - kRight - 150 << "\" y1=\"" << ly - 4
            << "\" x2=\"" << kW - kRight - 126 << "\" y2=\"" << ly - 4
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kW - kRight - 120 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
            << "</text>\n";
    }
    out << "</svg>\n";
}

void write_csv_columns(std::ostream& out, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size())
        throw ShapeError("csv header/column count mismatch");
    for (size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    size_t rows = columns.empty() ? 0 : columns[0].size();
    for (const auto& col : columns)
        if (col.size() != rows) throw ShapeError("csv columns have unequal length");
    for (size_t row = 0; row < rows; ++row) {
        for (size_t i = 0; i < columns.size(); ++i)
            out << (i ? "," : "") << fmt(columns[i][row], "%.17g");
        out << '\n';
    }
}

nlohmann::json provenance_block(const RunConfig& cfg, const std::string& command,
                                const MarketParams& params,
                                const OptionContract& contract,
                                const GridSpec& grid) {
    return nlohmann::json{
        {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
        {"config_version", kConfigVersion},
        {"command", command},
        {"input", cfg.input.string()},
        {"seed", cfg.seed},
        {"start_date", cfg.start_date},
        {"pre_window", cfg.pre_window},
        {"params",
         {{"r", params.r}, {"mu", params.mu}, {"sigma", params.sigma}}},
        {"contract",
         {{"strike", contract.strike},
          {"maturity", contract.maturity},
          {"payoff", "european_call"}}},
        {"grid",
         {{"s_min", grid.s_min},
          {"s_max", grid.s_max},
          {"n_space", grid.n_space},
          {"n_time", grid.n_time},
          {"t_start", grid.t_start}}},
        {"newton",
         {{"bracket_lo", cfg.newton.bracket_lo},
          {"bracket_hi", cfg.newton.bracket_hi},
          {"max_iter", cfg.newton.max_iter},
          {"residual_tol", cfg.newton.residual_tol}}},
        {"lm",
         {{"max_iter", cfg.lm.max_iter},
          {"step_tol", cfg.lm.step_tol},
          {"grad_tol", cfg.lm.grad_tol},
          {"c_starts", cfg.lm.c_starts}}}};
}

int cmd_synth(const RunConfig& cfg) {
    BubbleSpec spec = cfg.bubble_path.empty() ? BubbleSpec{}
                                              : load_bubble_file(cfg.bubble_path);
    MarketParams params = resolve_params(cfg, nullptr);
    OptionContract contract = resolve_contract(cfg, nullptr);
    GridSpec grid = resolve_grid(cfg, contract.strike, 1.0);
    std::filesystem::create_directories(cfg.output_dir);

    SynthConfig synth;
    synth.s0 = cfg.s0.value_or(-1.0);
    synth.start_date = cfg.start_date;
    synth.pde_grid = grid;
    MarketSeries series =
        synthesize_market(params, contract, spec, cfg.n_days, cfg.seed, synth);

    {
        auto out = open_output(cfg.output_dir / "market.csv");
        write_series_csv(series, out);
    }
    nlohmann::json doc;
    doc["provenance"] = provenance_block(cfg, "synth", params, contract, grid);
    doc["bubble"] = spec.to_json();
    doc["rows"] = series.size();
    write_result_json(cfg.output_dir, doc);

    std::cout << "wrote " << (cfg.output_dir / "market.csv").string() << " ("
              << series.size() << " rows)\n";
    return 0;
}

int cmd_calibrate(const RunConfig& cfg) {
    MarketSeries series = load_series(cfg.input);
    MarketParams params = resolve_params(cfg, &series);
    OptionContract contract = resolve_contract(cfg, &series);

    CalibrationConfig cal_cfg;
    cal_cfg.newton = cfg.newton;
    cal_cfg.lm = cfg.lm;
    cal_cfg.pde_grid = resolve_grid(cfg, contract.strike, series.days.front());

    std::filesystem::create_directories(cfg.output_dir);
    CalibrationResult result = calibrate(series, contract, params, cal_cfg);
    MispricingSeries mis = compute_mispricing(series, contract, params);

    {
        auto out = open_output(cfg.output_dir / "mispricing.csv");
        write_csv_columns(out, {"day", "mispricing"}, {mis.days, mis.values});
    }
    {
        std::vector<double> fitted;
        fitted.reserve(result.rho_days.size());
        for (double day : result.rho_days)
            fitted.push_back(result.fit.rho_at(day));
        auto out = open_output(cfg.output_dir / "rho.csv");
        write_csv_columns(out, {"day", "empirical", "fitted"},
                          {result.rho_days, result.rho_values, fitted});
    }
    {
        auto out = open_output(cfg.output_dir / "potential.csv");
        write_csv_columns(out, {"day", "potential"},
                          {result.potential.days, result.potential.values});
    }
    {
        auto out = open_output(cfg.output_dir / "bubble.csv");
        write_csv_columns(out, {"day", "bubble"},
                          {result.bubble_days, result.bubble_values});
    }
    nlohmann::json doc;
    doc["provenance"] = provenance_block(cfg, "calibrate", params, contract,
                                         *cal_cfg.pde_grid);
    doc["calibration"] = result.to_json();
    write_result_json(cfg.output_dir, doc);

    plot_csv(cfg.output_dir / "mispricing.csv", cfg.output_dir / "mispricing.svg",
             "Mispricing m(t)");
    plot_csv(cfg.output_dir / "rho.csv", cfg.output_dir / "rho.svg",
             "Accumulated potential rho(t,T)");
    plot_csv(cfg.output_dir / "potential.csv", cfg.output_dir / "potential.svg",
             "Potential U(t)");
    plot_csv(cfg.output_dir / "bubble.csv", cfg.output_dir / "bubble.svg",
             "Arbitrage bubble f(t)");

    std::cout << "fit: a=" << fmt(result.fit.a) << " b=" << fmt(result.fit.b)
              << " c=" << fmt(result.fit.c)
              << " rms=" << fmt(result.fit.residual_rms)
              << (result.fit.converged ? "" : " (not converged)") << '\n'
              << "chi2: black_scholes=" << fmt(result.chi2_bs)
              << " interacting=" << fmt(result.chi2_interacting) << '\n';
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    MarketSeries series = load_series(cfg.input);
    MarketParams params = resolve_params(cfg, &series);
    OptionContract contract = resolve_contract(cfg, &series);

    PotentialFn potential;
    nlohmann::json source;
    if (!cfg.calibration_path.empty()) {
        nlohmann::json doc = read_json_file(cfg.calibration_path);
        if (!doc.contains("calibration") || !doc["calibration"].contains("fit"))
            throw ParseError(cfg.calibration_path.string() +
                             ": no calibration fit block");
        const auto& f = doc["calibration"]["fit"];
        RhoFit fit;
        fit.a = f.at("a").get<double>();
        fit.b = f.at("b").get<double>();
        fit.c = f.at("c").get<double>();
        potential = FittedPotential(fit);
        source = {{"kind", "calibration"},
                  {"path", cfg.calibration_path.string()},
                  {"fit", {{"a", fit.a}, {"b", fit.b}, {"c", fit.c}}}};
    } else if (!cfg.bubble_path.empty()) {
        BubbleSpec spec = load_bubble_file(cfg.bubble_path);
        potential = potential_evaluator(spec, params);
        source = {{"kind", "bubble"}, {"spec", spec.to_json()}};
    } else {
        throw ParseError("simulate needs --calibration or --bubble");
    }

    GridSpec grid = resolve_grid(cfg, contract.strike, series.days.front());
    std::filesystem::create_directories(cfg.output_dir);
    PriceSurface bs_surface = solve_interacting(
        contract, params, [](double) { return 0.0; }, grid);
    PriceSurface int_surface =
        solve_interacting(contract, params, potential, grid);
    auto bs_prices = evaluate_on_path(bs_surface, series.days, series.underlying);
    auto int_prices =
        evaluate_on_path(int_surface, series.days, series.underlying);
    double chi2_bs = chi_squared(bs_prices, series.option);
    double chi2_int = chi_squared(int_prices, series.option);

    {
        auto out = open_output(cfg.output_dir / "prices.csv");
        write_csv_columns(out, {"day", "empirical", "bs", "interacting"},
                          {series.days, series.option, bs_prices, int_prices});
    }
    nlohmann::json doc;
    doc["provenance"] = provenance_block(cfg, "simulate", params, contract, grid);
    doc["potential_source"] = source;
    doc["chi2"] = {{"black_scholes", chi2_bs}, {"interacting", chi2_int}};
    write_result_json(cfg.output_dir, doc);

    plot_csv(cfg.output_dir / "prices.csv", cfg.output_dir / "prices.svg",
             "Option prices along the empirical path");

    std::cout << "chi2: black_scholes=" << fmt(chi2_bs)
              << " interacting=" << fmt(chi2_int) << '\n';
    return 0;
}

int cmd_report(const RunConfig& cfg) {
    std::filesystem::path dir =
        cfg.input.empty() ? cfg.output_dir : cfg.input;
    nlohmann::json doc = read_json_file(dir / "result.json");

    if (doc.contains("provenance"))
        std::cout << "command: "
                  << doc["provenance"].value("command", std::string("?")) << '\n';
    if (doc.contains("chi2"))
        std::cout << "chi2: black_scholes="
                  << fmt(doc["chi2"].value("black_scholes", 0.0))
                  << " interacting=" << fmt(doc["chi2"].value("interacting", 0.0))
                  << '\n';
    if (doc.contains("calibration")) {
        const auto& cal = doc["calibration"];
        if (cal.contains("fit")) {
            const auto& f = cal["fit"];
            std::cout << "fit: a=" << fmt(f.value("a", 0.0))
                      << " b=" << fmt(f.value("b", 0.0))
                      << " c=" << fmt(f.value("c", 0.0)) << '\n';
        }
        if (cal.contains("chi2"))
            std::cout << "chi2: black_scholes="
                      << fmt(cal["chi2"].value("black_scholes", 0.0))
                      << " interacting="
                      << fmt(cal["chi2"].value("interacting", 0.0)) << '\n';
    }

    const std::pair<const char*, const char*> plots[] = {
        {"mispricing.csv", "Mispricing m(t)"},
        {"rho.csv", "Accumulated potential rho(t,T)"},
        {"potential.csv", "Potential U(t)"},
        {"bubble.csv", "Arbitrage bubble f(t)"},
        {"prices.csv", "Option prices along the empirical path"},
    };
    for (const auto& [csv_name, title] : plots) {
        auto csv_path = dir / csv_name;
        if (!std::filesystem::exists(csv_path)) continue;
        auto svg_path = csv_path;
        svg_path.replace_extension(".svg");
        plot_csv(csv_path, svg_path, title);
        std::cout << "wrote " << svg_path.string() << '\n';
    }
    return 0;
}

}  // namespace ibs
