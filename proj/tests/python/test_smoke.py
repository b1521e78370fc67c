"""Smoke tests for the python bindings."""

import math

import pytest

import ibs

PARAMS = ibs.MarketParams(r=0.00019, mu=0.001, sigma=0.0046)
ATM = ibs.OptionContract(strike=100.0, maturity=62.0)


def test_version():
    assert ibs.__version__


def test_payoff_at_maturity():
    assert ibs.bs_closed_form(120.0, 62.0, ATM, PARAMS) == 120.0 - 100.0
    assert ibs.bs_closed_form(80.0, 62.0, ATM, PARAMS) == 0.0


def test_semiclassical_identity():
    for s in (80.0, 100.0, 130.0):
        assert ibs.semiclassical_price(s, 1.0, 0.0, ATM, PARAMS) == ibs.bs_closed_form(
            s, 1.0, ATM, PARAMS
        )


def test_propagator_matches_closed_form():
    cf = ibs.bs_closed_form(100.0, 0.0, ATM, PARAMS)
    pq = ibs.bs_propagator_price(100.0, 0.0, ATM, PARAMS)
    assert pq == pytest.approx(cf, rel=1e-6)


def test_rho_round_trip():
    rho0 = 0.07
    m = ibs.semiclassical_price(100.0, 10.0, rho0, ATM, PARAMS) - ibs.bs_closed_form(
        100.0, 10.0, ATM, PARAMS
    )
    assert ibs.solve_rho_pointwise(100.0, 10.0, m, ATM, PARAMS) == pytest.approx(
        rho0, abs=1e-9
    )


def test_bubble_algebra():
    f = 0.002
    u = ibs.potential_from_bubble(f, PARAMS)
    assert ibs.bubble_from_potential(u, PARAMS) == pytest.approx(f, rel=1e-12)
    with pytest.raises(ibs.IbsError):
        ibs.potential_from_bubble(PARAMS.sigma, PARAMS)


def test_accumulated_potential_step():
    spec = ibs.bubble_step(t1=20.0, t2=30.0, f0=0.002)
    u0 = ibs.potential_from_bubble(0.002, PARAMS)
    rho = ibs.accumulated_potential(spec, 1.0, 62.0, PARAMS)
    assert rho == pytest.approx(10.0 * u0, rel=1e-12)


def test_bubble_json_round_trip():
    spec = ibs.bubble_power_law_rho(a=0.1242, b=-0.2159, c=-0.1162)
    back = ibs.BubbleSpec.from_json(spec.to_json())
    assert back.to_json() == spec.to_json()


def test_pde_close_to_closed_form():
    grid = ibs.GridSpec.aligned_to_strike(ATM.strike, 400, 200)
    surface = ibs.solve_interacting(ATM, PARAMS, lambda t: 0.0, grid)
    cf = ibs.bs_closed_form(100.0, 0.0, ATM, PARAMS)
    assert surface.value_at(0.0, 100.0) == pytest.approx(cf, rel=0.02)


def test_fit_recovers_parameters():
    a, b, c = 0.1242, -0.2159, -0.1162
    days = list(range(1, 63))
    rho = [a + b * t**c for t in days]
    fit = ibs.fit_rho_model(days, rho)
    assert fit.converged
    assert fit.b == pytest.approx(b, rel=1e-6)
    assert fit.c == pytest.approx(c, rel=1e-6)
    u = ibs.potential_from_fit(fit)
    assert u(1.0) == pytest.approx(-c * b, rel=1e-6)


def test_end_to_end_small_calibration():
    spec = ibs.bubble_power_law_rho(a=0.1242, b=-0.2159, c=-0.1162)
    series = ibs.synthesize_market(PARAMS, ATM, spec, n_days=62, seed=11)
    assert len(series) == 62

    grid = ibs.GridSpec.aligned_to_strike(ATM.strike, 400, 200, t_start=1.0)
    result = ibs.calibrate(series, ATM, PARAMS, grid)
    assert result.chi2_interacting < result.chi2_bs
    assert result.fit.b == pytest.approx(-0.2159, rel=0.2)

    mis = ibs.compute_mispricing(series, ATM, PARAMS)
    assert len(mis.values) == 62


def test_estimate_params_and_gbm():
    path = ibs.gbm_path(PARAMS, 100.0, 120, seed=4)
    est = ibs.estimate_params(path, ibs.EstimationWindow(pre_window=90, rate=0.00019))
    assert est.r == 0.00019
    assert est.sigma > 0.0
    assert math.isfinite(est.mu)


def test_errors_are_python_exceptions():
    with pytest.raises(ibs.IbsError):
        ibs.bs_closed_form(-5.0, 0.0, ATM, PARAMS)
    with pytest.raises(ibs.IbsError):
        ibs.chi_squared([1.0], [1.0, 2.0])
