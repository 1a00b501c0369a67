"""Merton and fractional Heston simulation, calibration and hybrid LSTM forecasting."""

from ._core import (
    HestonParams,
    LevyforgeError,
    MertonParams,
    calibrate,
    compute_metrics,
    expected_jump_size,
    gwo_minimize,
    hybrid_forecast,
    mpa_minimize,
    run_cli,
    sample_alpha_stable,
    simulate_fractional_heston,
    simulate_merton,
)

__all__ = [
    "HestonParams",
    "LevyforgeError",
    "MertonParams",
    "calibrate",
    "compute_metrics",
    "expected_jump_size",
    "gwo_minimize",
    "hybrid_forecast",
    "mpa_minimize",
    "run_cli",
    "sample_alpha_stable",
    "simulate_fractional_heston",
    "simulate_merton",
]
