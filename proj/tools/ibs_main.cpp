// Command line front end: synth, calibrate, simulate, report.

#include "ibs/errors.hpp"
#include "ibs/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

namespace {

// Every flag lands in `cli`; after parsing, values the user actually typed
// are copied over the config-file-merged defaults so the CLI always wins.
struct CliValues {
    std::string config;
    std::string input;
    std::string output_dir;
    std::string bubble;
    std::string calibration;
    double rate = 0, drift = 0, sigma = 0, strike = 0, maturity = 0;
    double s0 = 0, s_min = 0, s_max = 0;
    int n_days = 0, n_space = 0, n_time = 0, pre_window = 0;
    int newton_max_iter = 0, lm_max_iter = 0;
    double newton_bracket_lo = 0, newton_bracket_hi = 0, newton_residual_tol = 0;
    double lm_step_tol = 0, lm_grad_tol = 0;
    std::vector<double> lm_c_starts;
    std::uint64_t seed = 0;
    std::string start_date;
};

void add_common_flags(CLI::App* cmd, CliValues& v) {
    cmd->add_option("--config", v.config, "JSON config file merged under CLI flags");
    cmd->add_option("-o,--out", v.output_dir, "output directory");
    cmd->add_option("-r,--rate", v.rate, "risk-free rate per day");
    cmd->add_option("--drift", v.drift, "drift mu per day");
    cmd->add_option("--sigma", v.sigma, "volatility per sqrt(day)");
    cmd->add_option("--strike", v.strike, "option strike");
    cmd->add_option("--maturity", v.maturity, "maturity in days");
    cmd->add_option("--n-space", v.n_space, "interior price nodes of the PDE grid");
    cmd->add_option("--n-time", v.n_time, "time steps of the PDE grid");
    cmd->add_option("--s-min", v.s_min, "lower price bound of the PDE grid");
    cmd->add_option("--s-max", v.s_max, "upper price bound of the PDE grid");
    cmd->add_option("--pre-window", v.pre_window,
                    "days of history for sigma/mu estimation");
    cmd->add_option("--newton-max-iter", v.newton_max_iter,
                    "root solver iteration cap");
    cmd->add_option("--newton-bracket-lo", v.newton_bracket_lo,
                    "lower rho bracket of the root solver");
    cmd->add_option("--newton-bracket-hi", v.newton_bracket_hi,
                    "upper rho bracket of the root solver");
    cmd->add_option("--newton-residual-tol", v.newton_residual_tol,
                    "root solver residual tolerance scale");
    cmd->add_option("--lm-max-iter", v.lm_max_iter,
                    "least-squares iteration cap");
    cmd->add_option("--lm-step-tol", v.lm_step_tol,
                    "least-squares relative step tolerance");
    cmd->add_option("--lm-grad-tol", v.lm_grad_tol,
                    "least-squares gradient tolerance");
    cmd->add_option("--lm-c-start", v.lm_c_starts,
                    "multi-start values for the exponent c (repeatable)");
}

void merge(const CLI::App* cmd, const CliValues& v, ibs::RunConfig& cfg) {
    auto given = [cmd](const std::string& name) {
        return cmd->count(name) > 0;
    };
    if (given("--out")) cfg.output_dir = v.output_dir;
    if (given("--rate")) cfg.rate = v.rate;
    if (given("--drift")) cfg.drift = v.drift;
    if (given("--sigma")) cfg.sigma = v.sigma;
    if (given("--strike")) cfg.strike = v.strike;
    if (given("--maturity")) cfg.maturity = v.maturity;
    if (given("--n-space")) cfg.n_space = v.n_space;
    if (given("--n-time")) cfg.n_time = v.n_time;
    if (given("--s-min")) cfg.s_min = v.s_min;
    if (given("--s-max")) cfg.s_max = v.s_max;
    if (given("--pre-window")) cfg.pre_window = v.pre_window;
    if (given("--newton-max-iter")) cfg.newton.max_iter = v.newton_max_iter;
    if (given("--newton-bracket-lo")) cfg.newton.bracket_lo = v.newton_bracket_lo;
    if (given("--newton-bracket-hi")) cfg.newton.bracket_hi = v.newton_bracket_hi;
    if (given("--newton-residual-tol"))
        cfg.newton.residual_tol = v.newton_residual_tol;
    if (given("--lm-max-iter")) cfg.lm.max_iter = v.lm_max_iter;
    if (given("--lm-step-tol")) cfg.lm.step_tol = v.lm_step_tol;
    if (given("--lm-grad-tol")) cfg.lm.grad_tol = v.lm_grad_tol;
    if (given("--lm-c-start")) cfg.lm.c_starts = v.lm_c_starts;
}

ibs::RunConfig build_config(const CLI::App* cmd, const CliValues& v) {
    ibs::RunConfig cfg;
    if (const char* env = std::getenv("IBS_OUT_DIR"); env && *env)
        cfg.output_dir = env;
    if (!v.config.empty()) {
        std::ifstream in(v.config);
        if (!in) throw ibs::ParseError("cannot open config " + v.config);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ibs::ParseError(v.config + ": " + e.what());
        }
        ibs::apply_config_file(cfg, doc);
    }
    merge(cmd, v, cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Arbitrage-bubble calibration and simulation for the "
                 "interacting Black-Scholes model"};
    app.require_subcommand(1);
    CliValues v;

    auto* synth = app.add_subcommand(
        "synth", "generate a synthetic daily market CSV");
    add_common_flags(synth, v);
    synth->add_option("--bubble", v.bubble, "bubble spec JSON file");
    synth->add_option("--n-days", v.n_days, "number of trading days");
    synth->add_option("--seed", v.seed, "random seed");
    synth->add_option("--s0", v.s0, "opening price (defaults to the strike)");
    synth->add_option("--start-date", v.start_date, "ISO date of day 1");

    auto* calibrate = app.add_subcommand(
        "calibrate", "extract rho*, U(t) and f(t) from a market CSV");
    add_common_flags(calibrate, v);
    calibrate->add_option("-i,--input", v.input, "market CSV")->required();

    auto* simulate = app.add_subcommand(
        "simulate", "reprice a market under a calibrated or explicit bubble");
    add_common_flags(simulate, v);
    simulate->add_option("-i,--input", v.input, "market CSV")->required();
    simulate->add_option("--calibration", v.calibration,
                         "result.json produced by calibrate");
    simulate->add_option("--bubble", v.bubble, "bubble spec JSON file");

    auto* report = app.add_subcommand(
        "report", "summarize a result directory and regenerate plots");
    add_common_flags(report, v);
    report->add_option("-i,--input", v.input, "result directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(synth)) {
            ibs::RunConfig cfg = build_config(synth, v);
            if (synth->count("--bubble")) cfg.bubble_path = v.bubble;
            if (synth->count("--n-days")) cfg.n_days = v.n_days;
            if (synth->count("--seed")) cfg.seed = v.seed;
            if (synth->count("--s0")) cfg.s0 = v.s0;
            if (synth->count("--start-date")) cfg.start_date = v.start_date;
            return ibs::cmd_synth(cfg);
        }
        if (app.got_subcommand(calibrate)) {
            ibs::RunConfig cfg = build_config(calibrate, v);
            cfg.input = v.input;
            return ibs::cmd_calibrate(cfg);
        }
        if (app.got_subcommand(simulate)) {
            ibs::RunConfig cfg = build_config(simulate, v);
            cfg.input = v.input;
            if (simulate->count("--calibration")) cfg.calibration_path = v.calibration;
            if (simulate->count("--bubble")) cfg.bubble_path = v.bubble;
            return ibs::cmd_simulate(cfg);
        }
        ibs::RunConfig cfg = build_config(report, v);
        if (report->count("--input")) cfg.input = v.input;
        return ibs::cmd_report(cfg);
    } catch (const ibs::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ibs::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ibs::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
