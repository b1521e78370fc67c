#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ibs/errors.hpp"
#include "ibs/pricing.hpp"

#include <cmath>

using namespace ibs;

namespace {
const MarketParams kParams{0.00019, 0.001, 0.0046};
const OptionContract kAtm{100.0, 62.0, PayoffKind::EuropeanCall};
}  // namespace

TEST_CASE("payoff at maturity is exact") {
    CHECK(bs_closed_form(120.0, 62.0, kAtm, kParams) == 20.0);
    CHECK(bs_closed_form(80.0, 62.0, kAtm, kParams) == 0.0);
}

TEST_CASE("zero-strike call equals the asset") {
    OptionContract zero_strike{0.0, 62.0, PayoffKind::EuropeanCall};
    for (double t : {0.0, 10.0, 61.5})
        CHECK(bs_closed_form(137.5, t, zero_strike, kParams) == doctest::Approx(137.5).epsilon(1e-14));
}

TEST_CASE("closed form and propagator quadrature agree") {
    QuadratureConfig quad;
    quad.n_points = 512;
    for (double s : {80.0, 100.0, 125.0}) {
        double cf = bs_closed_form(s, 0.0, kAtm, kParams);
        double pq = bs_propagator_price(s, 0.0, kAtm, kParams, quad);
        CHECK(pq == doctest::Approx(cf).epsilon(1e-6));
    }
}

TEST_CASE("propagator quadrature converges as nodes double") {
    double cf = bs_closed_form(100.0, 0.0, kAtm, kParams);
    double prev_err = -1.0;
    for (int n : {64, 128, 256, 512}) {
        QuadratureConfig quad;
        quad.n_points = n;
        double err = std::abs(bs_propagator_price(100.0, 0.0, kAtm, kParams, quad) - cf);
        if (prev_err >= 0.0)
            CHECK((err <= prev_err || err < 1e-12 * cf));
        prev_err = err;
    }
    CHECK(prev_err < 1e-9 * cf);
}

TEST_CASE("zero claim prices to zero") {
    auto zero = [](double) { return 0.0; };
    CHECK(bs_propagator_price(100.0, 0.0, 62.0, zero, kParams) == 0.0);
}

TEST_CASE("kernel collapses to a delta as maturity approaches") {
    auto smooth = [](double s) { return 100.0 / (1.0 + std::exp(-(s - 100.0) / 5.0)); };
    double almost = 62.0 - 1e-8;
    double got = bs_propagator_price(100.0, almost, 62.0, smooth, kParams);
    CHECK(got == doctest::Approx(smooth(100.0)).epsilon(1e-4));
    CHECK(bs_propagator_price(100.0, 62.0, 62.0, smooth, kParams) == smooth(100.0));
}

TEST_CASE("pricing the forward claim reproduces the spot") {
    // Phi(S') = S' under the risk-neutral kernel discounts to S exactly.
    auto forward = [](double s) { return s; };
    for (double t : {0.0, 30.0, 61.0}) {
        double got = bs_propagator_price(100.0, t, 62.0, forward, kParams);
        CHECK(got == doctest::Approx(100.0).epsilon(1e-8));
    }
}

TEST_CASE("semiclassical price at rho 0 shares the closed-form path") {
    for (double s : {50.0, 100.0, 180.0})
        for (double t : {0.0, 31.0, 61.9})
            CHECK(semiclassical_price(s, t, 0.0, kAtm, kParams) ==
                  bs_closed_form(s, t, kAtm, kParams));
}

TEST_CASE("semiclassical rescaling of a zero-strike call is the identity") {
    OptionContract zero_strike{0.0, 62.0, PayoffKind::EuropeanCall};
    double got = semiclassical_price(77.0, 0.0, std::log(2.0), zero_strike, kParams);
    CHECK(got == doctest::Approx(77.0).epsilon(1e-12));
}

TEST_CASE("call monotone in spot and strike") {
    double prev = -1.0;
    for (double s = 50.0; s <= 200.0; s += 2.0) {
        double v = bs_closed_form(s, 10.0, kAtm, kParams);
        CHECK(v >= prev);
        prev = v;
    }
    prev = 1e18;
    for (double k = 50.0; k <= 200.0; k += 2.0) {
        OptionContract contract{k, 62.0, PayoffKind::EuropeanCall};
        double v = bs_closed_form(100.0, 10.0, contract, kParams);
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("delta matches a finite difference of the closed form") {
    double h = 1e-4;
    for (double s : {90.0, 100.0, 115.0}) {
        double fd = (bs_closed_form(s + h, 5.0, kAtm, kParams) -
                     bs_closed_form(s - h, 5.0, kAtm, kParams)) / (2.0 * h);
        CHECK(bs_delta(s, 5.0, kAtm, kParams) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(bs_closed_form(-1.0, 0.0, kAtm, kParams), DomainError);
    CHECK_THROWS_AS(bs_closed_form(0.0, 0.0, kAtm, kParams), DomainError);
    MarketParams bad = kParams;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(bs_closed_form(100.0, 0.0, kAtm, bad), DomainError);
    CHECK_THROWS_AS(bs_closed_form(100.0, 63.0, kAtm, kParams), DomainError);
    CHECK_THROWS_AS(bs_closed_form(100.0, -0.5, kAtm, kParams), DomainError);
    CHECK_THROWS_AS(semiclassical_price(100.0, 0.0, NAN, kAtm, kParams), DomainError);
}

TEST_CASE("quadrature config validation and truncation diagnostic") {
    QuadratureConfig bad;
    bad.n_points = 8;
    CHECK_THROWS_AS(bs_propagator_price(100.0, 0.0, kAtm, kParams, bad), DomainError);
    bad = QuadratureConfig{};
    bad.half_width_sigmas = 4.0;
    CHECK_THROWS_AS(bs_propagator_price(100.0, 0.0, kAtm, kParams, bad), DomainError);

    // Explicit bounds that clip half of the kernel flag the diagnostic.
    QuadratureConfig clipped;
    double mean = std::log(100.0) +
                  (kParams.r - 0.5 * kParams.sigma * kParams.sigma) * 62.0;
    clipped.bounds = {mean, mean + 8.0 * kParams.sigma * std::sqrt(62.0)};
    QuadratureDiag diag;
    bs_propagator_price(100.0, 0.0, kAtm, kParams, clipped, &diag);
    CHECK(diag.truncated);
    CHECK(diag.truncated_mass == doctest::Approx(0.5).epsilon(1e-6));

    QuadratureDiag fine;
    bs_propagator_price(100.0, 0.0, kAtm, kParams, QuadratureConfig{}, &fine);
    CHECK_FALSE(fine.truncated);
    CHECK(fine.truncated_mass < 1e-8);
}
