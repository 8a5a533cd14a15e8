"""Convex order checks between discrete measures, recovery of the convex
potential behind a violation, and the calendar-spread arbitrage it yields."""

from ._core import (
    CallSheet,
    ConvexOrderError,
    ConvexOrderReport,
    DiscreteMeasure,
    bl_extract,
    call_prices,
    correlation_cost,
    decide,
    default_tolerance,
    emd,
    estimate_v,
    gamma_process,
    gap,
    gaussian_samples,
    recover_f,
    simulate_market,
    strategy_from_sheets,
    two_point,
    w2_squared,
)

__all__ = [
    "CallSheet",
    "ConvexOrderError",
    "ConvexOrderReport",
    "DiscreteMeasure",
    "bl_extract",
    "call_prices",
    "correlation_cost",
    "decide",
    "default_tolerance",
    "emd",
    "estimate_v",
    "gamma_process",
    "gap",
    "gaussian_samples",
    "recover_f",
    "simulate_market",
    "strategy_from_sheets",
    "two_point",
    "w2_squared",
]
