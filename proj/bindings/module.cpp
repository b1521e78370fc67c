// Python bindings for the core pricing, bubble, PDE and calibration
// operations.

#include "ibs/bubble.hpp"
#include "ibs/calibration.hpp"
#include "ibs/errors.hpp"
#include "ibs/market_data.hpp"
#include "ibs/pde.hpp"
#include "ibs/pricing.hpp"
#include "ibs/report.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace ibs;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Arbitrage-bubble calibration and simulation for the "
              "interacting Black-Scholes model";
    m.attr("__version__") = kToolVersion;

    py::register_exception<Error>(m, "IbsError", PyExc_RuntimeError);

    py::enum_<PayoffKind>(m, "PayoffKind")
        .value("EUROPEAN_CALL", PayoffKind::EuropeanCall);

    py::class_<MarketParams>(m, "MarketParams")
        .def(py::init([](double r, double mu, double sigma) {
                 return MarketParams{r, mu, sigma};
             }),
             py::arg("r"), py::arg("mu"), py::arg("sigma"))
        .def_readwrite("r", &MarketParams::r)
        .def_readwrite("mu", &MarketParams::mu)
        .def_readwrite("sigma", &MarketParams::sigma)
        .def("validate", &MarketParams::validate);

    py::class_<OptionContract>(m, "OptionContract")
        .def(py::init([](double strike, double maturity, PayoffKind payoff) {
                 return OptionContract{strike, maturity, payoff};
             }),
             py::arg("strike"), py::arg("maturity"),
             py::arg("payoff") = PayoffKind::EuropeanCall)
        .def_readwrite("strike", &OptionContract::strike)
        .def_readwrite("maturity", &OptionContract::maturity)
        .def_readwrite("payoff", &OptionContract::payoff);

    py::class_<QuadratureConfig>(m, "QuadratureConfig")
        .def(py::init<>())
        .def_readwrite("n_points", &QuadratureConfig::n_points)
        .def_readwrite("half_width_sigmas", &QuadratureConfig::half_width_sigmas)
        .def_readwrite("bounds", &QuadratureConfig::bounds);

    py::class_<BubbleSpec>(m, "BubbleSpec")
        .def("validate", &BubbleSpec::validate)
        .def("to_json",
             [](const BubbleSpec& spec) { return spec.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) {
            return BubbleSpec::from_json(nlohmann::json::parse(text));
        });
    m.def("bubble_zero", [] { return BubbleSpec{}; });
    m.def("bubble_step",
          [](double t1, double t2, double f0) {
              return BubbleSpec(StepBubble{t1, t2, f0});
          },
          py::arg("t1"), py::arg("t2"), py::arg("f0"));
    m.def("bubble_power_law_rho",
          [](double a, double b, double c) {
              return BubbleSpec(PowerLawRhoBubble{a, b, c});
          },
          py::arg("a"), py::arg("b"), py::arg("c"));
    m.def("bubble_tabulated",
          [](std::vector<std::pair<double, double>> samples) {
              return BubbleSpec(TabulatedBubble{std::move(samples)});
          },
          py::arg("samples"));

    m.def("bs_closed_form", &bs_closed_form, py::arg("s"), py::arg("t"),
          py::arg("contract"), py::arg("params"));
    m.def("bs_delta", &bs_delta, py::arg("s"), py::arg("t"), py::arg("contract"),
          py::arg("params"));
    m.def("bs_propagator_price",
          [](double s, double t, const OptionContract& contract,
             const MarketParams& params, const QuadratureConfig& quad) {
              return bs_propagator_price(s, t, contract, params, quad);
          },
          py::arg("s"), py::arg("t"), py::arg("contract"), py::arg("params"),
          py::arg("quad") = QuadratureConfig{});
    m.def("semiclassical_price", &semiclassical_price, py::arg("s"), py::arg("t"),
          py::arg("rho"), py::arg("contract"), py::arg("params"));

    m.def("potential_from_bubble", &potential_from_bubble, py::arg("f"),
          py::arg("params"));
    m.def("bubble_from_potential", &bubble_from_potential, py::arg("u"),
          py::arg("params"));
    m.def("bubble_amplitude", &bubble_amplitude, py::arg("spec"), py::arg("t"),
          py::arg("params"));
    m.def("accumulated_potential", &accumulated_potential, py::arg("spec"),
          py::arg("t"), py::arg("maturity"), py::arg("params"));

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init([](double s_min, double s_max, int n_space, int n_time,
                         double t_start) {
                 return GridSpec{s_min, s_max, n_space, n_time, t_start};
             }),
             py::arg("s_min"), py::arg("s_max"), py::arg("n_space"),
             py::arg("n_time"), py::arg("t_start") = 0.0)
        .def_static("aligned_to_strike", &GridSpec::aligned_to_strike,
                    py::arg("strike"), py::arg("n_space"), py::arg("n_time"),
                    py::arg("t_start") = 0.0, py::arg("s_min") = -1.0)
        .def_readwrite("s_min", &GridSpec::s_min)
        .def_readwrite("s_max", &GridSpec::s_max)
        .def_readwrite("n_space", &GridSpec::n_space)
        .def_readwrite("n_time", &GridSpec::n_time)
        .def_readwrite("t_start", &GridSpec::t_start);

    py::class_<PriceSurface>(m, "PriceSurface")
        .def_readonly("times", &PriceSurface::times)
        .def_readonly("spots", &PriceSurface::spots)
        .def_readonly("values", &PriceSurface::values)
        .def("value_at", &PriceSurface::value_at, py::arg("t"), py::arg("s"))
        .def("to_csv", [](const PriceSurface& surf) {
            std::ostringstream out;
            surf.write_csv(out);
            return out.str();
        });

    m.def("solve_interacting", &solve_interacting, py::arg("contract"),
          py::arg("params"), py::arg("potential"), py::arg("grid"));
    m.def("evaluate_on_path", &evaluate_on_path, py::arg("surface"),
          py::arg("days"), py::arg("spots"));

    py::class_<MarketSeries>(m, "MarketSeries")
        .def(py::init<>())
        .def_readwrite("days", &MarketSeries::days)
        .def_readwrite("dates", &MarketSeries::dates)
        .def_readwrite("underlying", &MarketSeries::underlying)
        .def_readwrite("option", &MarketSeries::option)
        .def_readwrite("contract_id", &MarketSeries::contract_id)
        .def("__len__", &MarketSeries::size)
        .def("validate", &MarketSeries::validate)
        .def("to_csv", [](const MarketSeries& series) {
            std::ostringstream out;
            write_series_csv(series, out);
            return out.str();
        });

    py::class_<EstimationWindow>(m, "EstimationWindow")
        .def(py::init([](int pre_window, double rate) {
                 return EstimationWindow{pre_window, rate};
             }),
             py::arg("pre_window") = 90, py::arg("rate") = 0.0)
        .def_readwrite("pre_window", &EstimationWindow::pre_window)
        .def_readwrite("rate", &EstimationWindow::rate);

    m.def("load_series", &load_series, py::arg("path"));
    m.def("estimate_params", &estimate_params, py::arg("pre_series"),
          py::arg("window") = EstimationWindow{});
    m.def("simulated_option_price", &simulated_option_price,
          py::arg("future_price"), py::arg("strike"));
    m.def("gbm_path", &gbm_path, py::arg("params"), py::arg("s0"),
          py::arg("n_days"), py::arg("seed"));
    m.def("synthesize_market",
          [](const MarketParams& params, const OptionContract& contract,
             const BubbleSpec& spec, int n_days, std::uint64_t seed) {
              return synthesize_market(params, contract, spec, n_days, seed);
          },
          py::arg("params"), py::arg("contract"), py::arg("spec"),
          py::arg("n_days"), py::arg("seed"));

    py::class_<MispricingSeries>(m, "MispricingSeries")
        .def_readonly("days", &MispricingSeries::days)
        .def_readonly("values", &MispricingSeries::values);

    py::class_<RhoFit>(m, "RhoFit")
        .def(py::init<>())
        .def_readwrite("a", &RhoFit::a)
        .def_readwrite("b", &RhoFit::b)
        .def_readwrite("c", &RhoFit::c)
        .def_readonly("residual_rms", &RhoFit::residual_rms)
        .def_readonly("gradient_norm", &RhoFit::gradient_norm)
        .def_readonly("iterations", &RhoFit::iterations)
        .def_readonly("converged", &RhoFit::converged)
        .def_readonly("c_identifiable", &RhoFit::c_identifiable)
        .def("rho_at", &RhoFit::rho_at, py::arg("t"));

    py::class_<PotentialSeries>(m, "PotentialSeries")
        .def(py::init([](std::vector<double> days, std::vector<double> values) {
                 return PotentialSeries{std::move(days), std::move(values)};
             }),
             py::arg("days"), py::arg("values"))
        .def_readwrite("days", &PotentialSeries::days)
        .def_readwrite("values", &PotentialSeries::values);

    py::class_<BubbleSeries>(m, "BubbleSeries")
        .def_readonly("days", &BubbleSeries::days)
        .def_readonly("values", &BubbleSeries::values)
        .def_readonly("pole_days", &BubbleSeries::pole_days);

    py::class_<FittedPotential>(m, "FittedPotential")
        .def(py::init<const RhoFit&>(), py::arg("fit"))
        .def("__call__", &FittedPotential::operator(), py::arg("t"))
        .def("sample", &FittedPotential::sample, py::arg("days"));

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("rho_days", &CalibrationResult::rho_days)
        .def_readonly("rho_values", &CalibrationResult::rho_values)
        .def_readonly("failed_days", &CalibrationResult::failed_days)
        .def_readonly("fit", &CalibrationResult::fit)
        .def_readonly("potential", &CalibrationResult::potential)
        .def_readonly("bubble_days", &CalibrationResult::bubble_days)
        .def_readonly("bubble_values", &CalibrationResult::bubble_values)
        .def_readonly("bubble_pole_days", &CalibrationResult::bubble_pole_days)
        .def_readonly("chi2_bs", &CalibrationResult::chi2_bs)
        .def_readonly("chi2_interacting", &CalibrationResult::chi2_interacting)
        .def("to_json",
             [](const CalibrationResult& res) { return res.to_json().dump(); });

    m.def("compute_mispricing", &compute_mispricing, py::arg("series"),
          py::arg("contract"), py::arg("params"));
    m.def("solve_rho_pointwise",
          [](double s, double t, double mispricing,
             const OptionContract& contract, const MarketParams& params) {
              return solve_rho_pointwise(s, t, mispricing, contract, params);
          },
          py::arg("s"), py::arg("t"), py::arg("mispricing"), py::arg("contract"),
          py::arg("params"));
    m.def("fit_rho_model",
          [](const std::vector<double>& days, const std::vector<double>& rho) {
              return fit_rho_model(days, rho);
          },
          py::arg("days"), py::arg("rho"));
    m.def("potential_from_fit", &potential_from_fit, py::arg("fit"));
    m.def("extract_bubble", &extract_bubble, py::arg("potential"),
          py::arg("params"));
    m.def("chi_squared",
          [](const std::vector<double>& model, const std::vector<double>& emp) {
              return chi_squared(model, emp);
          },
          py::arg("model"), py::arg("empirical"));
    m.def("calibrate",
          [](const MarketSeries& series, const OptionContract& contract,
             const MarketParams& params, std::optional<GridSpec> grid) {
              CalibrationConfig cfg;
              cfg.pde_grid = grid;
              return calibrate(series, contract, params, cfg);
          },
          py::arg("series"), py::arg("contract"), py::arg("params"),
          py::arg("grid") = std::nullopt);
}
