from ._core import (
    Error,
    Model,
    black_scholes_call,
    bildt_value,
    cond_value,
    convex_payoff_set,
    evaluate,
    lcp_scan,
    load_model,
    merton_series_price,
    parse_model,
    price_mc,
    run_cli,
    simulate,
    solve,
    validate,
    verify_ordering,
    volatility_monotonicity,
)

__all__ = [
    "Error",
    "Model",
    "black_scholes_call",
    "bildt_value",
    "cond_value",
    "convex_payoff_set",
    "evaluate",
    "lcp_scan",
    "load_model",
    "merton_series_price",
    "parse_model",
    "price_mc",
    "run_cli",
    "simulate",
    "solve",
    "validate",
    "verify_ordering",
    "volatility_monotonicity",
]
