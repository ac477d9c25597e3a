"""Quantile hedging of a put on a nontradable asset.

Core pipeline: model a tradable/nontradable GBM pair (market), tabulate
conditional success probabilities (success), pick per-state capital by a
tangent construction (envelope), estimate capital-vs-success frontiers
and solve for minimal capital (engine), and validate the resulting claim
by delta hedging along simulated paths (backtest). An HTTP service and a
CSV-emitting CLI sit on top.
"""

from .backtest import (
    BacktestReport,
    PayoffFunction,
    build_payoff,
    price_and_delta,
    run_backtest,
)
from .engine import (
    CapitalSolution,
    EngineConfig,
    FrontierPoint,
    evaluate_slope,
    solve_capital,
    sweep,
)
from .envelope import TangentResult, batch_tangent, tangent_point
from .errors import NumericalError
from .market import (
    MarketParams,
    black_scholes_put,
    density_p_over_q,
    q_weight,
    sample_terminal,
    simulate_paths,
)
from .success import (
    ConditionalSuccessCurve,
    SuccessFactor,
    capital_grid,
    g_indicator,
    g_ratio,
    survival_grid,
    tabulate_g,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "MarketParams",
    "black_scholes_put",
    "density_p_over_q",
    "q_weight",
    "sample_terminal",
    "simulate_paths",
    "SuccessFactor",
    "ConditionalSuccessCurve",
    "capital_grid",
    "survival_grid",
    "g_indicator",
    "g_ratio",
    "tabulate_g",
    "TangentResult",
    "tangent_point",
    "batch_tangent",
    "EngineConfig",
    "FrontierPoint",
    "CapitalSolution",
    "evaluate_slope",
    "sweep",
    "solve_capital",
    "PayoffFunction",
    "BacktestReport",
    "build_payoff",
    "price_and_delta",
    "run_backtest",
    "NumericalError",
]
