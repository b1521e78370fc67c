#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ibs/bubble.hpp"
#include "ibs/errors.hpp"
#include "ibs/pde.hpp"
#include "ibs/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

using namespace ibs;

namespace {

const MarketParams kParams{0.00019, 0.001, 0.0046};
const OptionContract kAtm{100.0, 62.0, PayoffKind::EuropeanCall};

// Max |pde - cf| over nodes with |ln(S/K)| < 1, normalized by the largest
// closed-form value on that band, plus the pointwise error at the strike
// node. The closed form is the oracle.
struct SurfaceError {
    double normalized_max = 0.0;
    double atm_rel = 0.0;
};

SurfaceError error_vs_closed_form(const PriceSurface& surf,
                                  const OptionContract& contract,
                                  const MarketParams& params) {
    SurfaceError err;
    double max_abs = 0.0, cf_max = 0.0;
    for (size_t i = 1; i + 1 < surf.spots.size(); ++i) {
        double s = surf.spots[i];
        if (std::abs(std::log(s / contract.strike)) >= 1.0) continue;
        double cf = bs_closed_form(s, surf.times.front(), contract, params);
        double diff = std::abs(surf.values.front()[i] - cf);
        max_abs = std::max(max_abs, diff);
        cf_max = std::max(cf_max, cf);
        if (std::abs(s - contract.strike) < 1e-9) err.atm_rel = diff / cf;
    }
    err.normalized_max = max_abs / cf_max;
    return err;
}

}  // namespace

TEST_CASE("zero potential recovers the equilibrium price") {
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 800, 800);
    PriceSurface surf = solve_interacting(kAtm, kParams,
                                          [](double) { return 0.0; }, grid);
    SurfaceError err = error_vs_closed_form(surf, kAtm, kParams);
    CHECK(err.normalized_max < 1e-4);
    CHECK(err.atm_rel < 2e-3);
}

TEST_CASE("constant potential equals a shifted risk-free rate") {
    double u0 = 1.0e-4;
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 1600, 800);
    PriceSurface surf = solve_interacting(kAtm, kParams,
                                          [u0](double) { return u0; }, grid);
    MarketParams shifted = kParams;
    shifted.r += u0;
    SurfaceError err = error_vs_closed_form(surf, kAtm, shifted);
    CHECK(err.normalized_max < 1e-4);
    CHECK(err.atm_rel < 1e-3);
}

TEST_CASE("fitted-form potential agrees with the semiclassical price") {
    PowerLawRhoBubble pl{0.1242, -0.2159, -0.1162};
    BubbleSpec spec(pl);
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 800, 400, 1.0);
    PriceSurface surf = solve_interacting(
        kAtm, kParams, potential_evaluator(spec, kParams), grid);

    double rho = accumulated_potential(spec, 1.0, kAtm.maturity, kParams);
    double sc = semiclassical_price(kAtm.strike, 1.0, rho, kAtm, kParams);
    double pde = surf.value_at(1.0, kAtm.strike);
    CHECK(pde == doctest::Approx(sc).epsilon(0.01));
}

TEST_CASE("constant accumulated potential consistency at the money") {
    // rho = 0.01 spread uniformly over the lifetime.
    double u0 = 0.01 / kAtm.maturity;
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 800, 400);
    PriceSurface surf = solve_interacting(kAtm, kParams,
                                          [u0](double) { return u0; }, grid);
    double sc = semiclassical_price(kAtm.strike, 0.0, 0.01, kAtm, kParams);
    CHECK(surf.value_at(0.0, kAtm.strike) == doctest::Approx(sc).epsilon(0.01));
}

TEST_CASE("terminal slice equals the payoff exactly") {
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 64, 32);
    PriceSurface surf = solve_interacting(kAtm, kParams,
                                          [](double) { return 0.0; }, grid);
    for (size_t i = 0; i < surf.spots.size(); ++i)
        CHECK(surf.values.back()[i] == payoff_value(kAtm, surf.spots[i]));
}

TEST_CASE("call values nondecreasing in S at every level") {
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 200, 200);
    PriceSurface surf = solve_interacting(kAtm, kParams,
                                          [](double) { return 0.0; }, grid);
    for (const auto& level : surf.values)
        for (size_t i = 1; i < level.size(); ++i)
            CHECK(level[i] - level[i - 1] >= -1e-10);
}

TEST_CASE("raising U uniformly equals raising r, bitwise") {
    // Dyadic values keep r + U(t) exact in both factorizations.
    double r0 = 0.0009765625;   // 2^-10
    double u0 = 0.001953125;    // 2^-9
    double delta = 0.00390625;  // 2^-8
    MarketParams pa{r0, 0.0, 0.0046};
    MarketParams pb{r0 + delta, 0.0, 0.0046};
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 64, 32);
    PriceSurface sa = solve_interacting(
        kAtm, pa, [=](double) { return u0 + delta; }, grid);
    PriceSurface sb = solve_interacting(
        kAtm, pb, [=](double) { return u0; }, grid);
    for (size_t j = 0; j < sa.values.size(); ++j)
        for (size_t i = 0; i < sa.values[j].size(); ++i)
            CHECK(sa.values[j][i] == sb.values[j][i]);
}

TEST_CASE("path evaluation") {
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 128, 64);
    PriceSurface surf = solve_interacting(kAtm, kParams,
                                          [](double) { return 0.0; }, grid);

    SUBCASE("node-aligned query returns the stored value") {
        size_t j = 10, i = 40;
        CHECK(surf.value_at(surf.times[j], surf.spots[i]) == surf.values[j][i]);
    }
    SUBCASE("midpoint of a linear region averages the neighbors") {
        // The terminal payoff is linear above the strike.
        size_t i = surf.spots.size() - 10;
        double mid = 0.5 * (surf.spots[i] + surf.spots[i + 1]);
        double avg = 0.5 * (surf.values.back()[i] + surf.values.back()[i + 1]);
        CHECK(surf.value_at(surf.times.back(), mid) == doctest::Approx(avg).epsilon(1e-14));
    }
    SUBCASE("out-of-grid sample names the index") {
        std::vector<double> days = {1.0, 2.0};
        std::vector<double> spots = {100.0, surf.spots.back() * 2.0};
        try {
            evaluate_on_path(surf, days, spots);
            FAIL("expected ExtrapolationError");
        } catch (const ExtrapolationError& e) {
            CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
        }
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(evaluate_on_path(surf, {1.0, 2.0}, {100.0}), ShapeError);
    }
}

TEST_CASE("path values stable under grid refinement") {
    // Days near expiry are excluded: an at-the-money value one day before
    // maturity spans only a few cells of kink width at any practical grid,
    // so pointwise relative comparisons there measure resolution, not the
    // interpolation quality this test is after.
    std::vector<double> days, spots;
    for (int d = 1; d <= 30; ++d) {
        days.push_back(d);
        spots.push_back(100.0);
    }
    GridSpec coarse = GridSpec::aligned_to_strike(kAtm.strike, 1600, 400);
    GridSpec fine = GridSpec::aligned_to_strike(kAtm.strike, 3200, 800);
    auto zero = [](double) { return 0.0; };
    auto pc = evaluate_on_path(solve_interacting(kAtm, kParams, zero, coarse),
                               days, spots);
    auto pf = evaluate_on_path(solve_interacting(kAtm, kParams, zero, fine),
                               days, spots);
    double worst = 0.0;
    for (size_t k = 0; k < pc.size(); ++k)
        worst = std::max(worst, std::abs(pc[k] - pf[k]) / pf[k]);
    CHECK(worst < 1e-3);
}

TEST_CASE("grid validation") {
    GridSpec zero_min{0.0, 400.0, 64, 64};
    GridSpec short_max{1.0, 399.0, 64, 64};
    GridSpec few_space{1.0, 404.0, 8, 64};
    GridSpec few_time{1.0, 404.0, 64, 8};
    CHECK_THROWS_AS(zero_min.validate(100.0), DomainError);
    CHECK_THROWS_AS(short_max.validate(100.0), DomainError);
    CHECK_THROWS_AS(few_space.validate(100.0), DomainError);
    CHECK_THROWS_AS(few_time.validate(100.0), DomainError);
    CHECK_NOTHROW(GridSpec::aligned_to_strike(100.0, 64, 64).validate(100.0));
    CHECK_THROWS_AS(GridSpec::aligned_to_strike(0.0, 64, 64), DomainError);
}

TEST_CASE("non-finite potential raises an instability error") {
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 32, 16);
    auto nan_potential = [](double) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(solve_interacting(kAtm, kParams, nan_potential, grid),
                    InstabilityError);
}

TEST_CASE("surface csv export shape") {
    GridSpec grid = GridSpec::aligned_to_strike(kAtm.strike, 16, 16);
    PriceSurface surf = solve_interacting(kAtm, kParams,
                                          [](double) { return 0.0; }, grid);
    std::ostringstream out;
    surf.write_csv(out);
    std::string text = out.str();
    size_t rows = std::count(text.begin(), text.end(), '\n');
    CHECK(rows == surf.times.size() + 1);  // header + one row per level
    CHECK(text.rfind("t,", 0) == 0);
}
