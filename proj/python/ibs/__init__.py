"""Arbitrage-bubble calibration and simulation for the interacting
Black-Scholes model.

The heavy lifting lives in the compiled ``ibs._core`` extension; this
package re-exports its public surface.
"""

from ._core import (  # noqa: F401
    BubbleSeries,
    BubbleSpec,
    CalibrationResult,
    EstimationWindow,
    FittedPotential,
    GridSpec,
    IbsError,
    MarketParams,
    MarketSeries,
    MispricingSeries,
    OptionContract,
    PayoffKind,
    PotentialSeries,
    PriceSurface,
    QuadratureConfig,
    RhoFit,
    __version__,
    accumulated_potential,
    bs_closed_form,
    bs_delta,
    bs_propagator_price,
    bubble_amplitude,
    bubble_from_potential,
    bubble_power_law_rho,
    bubble_step,
    bubble_tabulated,
    bubble_zero,
    calibrate,
    chi_squared,
    compute_mispricing,
    estimate_params,
    evaluate_on_path,
    extract_bubble,
    fit_rho_model,
    gbm_path,
    load_series,
    potential_from_bubble,
    potential_from_fit,
    semiclassical_price,
    simulated_option_price,
    solve_interacting,
    solve_rho_pointwise,
    synthesize_market,
)
