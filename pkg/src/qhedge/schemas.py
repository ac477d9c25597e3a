"""Request and response models for the HTTP service.

These are the wire-format mirrors of the core dataclasses. Validation
here is structural (types, ranges, required fields); the core re-checks
everything it constructs, so a request that passes both layers is safe
to run.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .engine import CapitalSolution, EngineConfig, FrontierPoint
from .market import MarketParams
from .success import SuccessFactor

__all__ = [
    "MarketParamsModel",
    "EngineConfigModel",
    "MGridModel",
    "FrontierRequest",
    "FrontierRow",
    "FrontierResponse",
    "SolveRequest",
    "SolveResponse",
    "BacktestRequest",
    "BacktestResponse",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MarketParamsModel(_Strict):
    """Market parameters; defaults mirror the library's base experiment."""

    mu_x: float = 0.1
    sigma_x: float = 0.3
    mu_y: float = 0.1
    sigma_y: float = 0.3
    rho: float = 0.0
    x0: float = 1.0
    y0: float = 1.0
    maturity_t: float = 1.0
    strike_k: float = 1.0

    @model_validator(mode="after")
    def _core_checks(self) -> "MarketParamsModel":
        self.to_params()
        return self

    def to_params(self, rho: "float | None" = None) -> MarketParams:
        data = self.model_dump()
        if rho is not None:
            data["rho"] = rho
        return MarketParams(**data)


class EngineConfigModel(_Strict):
    """Monte Carlo settings; defaults are the desk-scale sizes."""

    n_w: int = Field(default=100_000, ge=1)
    n_x: int = Field(default=1000, ge=2)
    seed: int = Field(default=0, ge=0, lt=2**64)
    factor: Literal["indicator", "ratio"] = "indicator"

    def to_config(self) -> EngineConfig:
        return EngineConfig(n_w=self.n_w, n_x=self.n_x, seed=self.seed,
                            factor=SuccessFactor(self.factor))


class MGridModel(_Strict):
    """Slope grid: n points from lo to hi, log- or linearly spaced."""

    lo: float = 1e-3
    hi: float = 1e3
    n: int = Field(default=30, ge=1)
    spacing: Literal["log", "lin"] = "log"

    @model_validator(mode="after")
    def _ordered(self) -> "MGridModel":
        if not self.lo >= 0.0:
            raise ValueError("m_grid lo must be >= 0")
        if self.spacing == "log" and not self.lo > 0.0:
            raise ValueError("log-spaced m_grid needs lo > 0")
        if self.n > 1 and not self.lo < self.hi:
            raise ValueError("m_grid needs lo < hi when n > 1")
        return self

    def to_values(self) -> list[float]:
        if self.n == 1:
            return [float(self.lo)]
        if self.spacing == "log":
            return [float(v) for v in np.geomspace(self.lo, self.hi, self.n)]
        return [float(v) for v in np.linspace(self.lo, self.hi, self.n)]


class FrontierRequest(_Strict):
    market: MarketParamsModel = MarketParamsModel()
    engine: EngineConfigModel = EngineConfigModel()
    m_grid: MGridModel = MGridModel()
    rhos: "list[float] | None" = None

    def effective_rhos(self) -> list[float]:
        return [self.market.rho] if self.rhos is None else list(self.rhos)

    @model_validator(mode="after")
    def _rhos_valid(self) -> "FrontierRequest":
        if self.rhos is not None:
            if not self.rhos:
                raise ValueError("rhos must be nonempty when given")
            for rho in self.rhos:
                self.market.to_params(rho=rho)
        return self


class FrontierRow(_Strict):
    rho: float
    m: float
    capital: float
    capital_se: float
    success: float
    success_se: float

    @classmethod
    def from_point(cls, rho: float, point: FrontierPoint) -> "FrontierRow":
        return cls(rho=rho, m=point.m, capital=point.capital,
                   capital_se=point.capital_se, success=point.success,
                   success_se=point.success_se)


class FrontierResponse(_Strict):
    rows: list[FrontierRow]


class SolveRequest(_Strict):
    market: MarketParamsModel = MarketParamsModel()
    engine: EngineConfigModel = EngineConfigModel()
    target: float = Field(gt=0.0, le=1.0)


class SolveResponse(_Strict):
    target: float
    m_star: "float | None"
    capital: float
    achieved: float
    unconstrained: bool
    capital_se: float
    achieved_se: float

    @classmethod
    def from_solution(cls, sol: CapitalSolution) -> "SolveResponse":
        return cls(target=sol.target, m_star=sol.m_star, capital=sol.capital,
                   achieved=sol.achieved, unconstrained=sol.unconstrained,
                   capital_se=sol.capital_se, achieved_se=sol.achieved_se)


class BacktestRequest(_Strict):
    market: MarketParamsModel = MarketParamsModel()
    engine: EngineConfigModel = EngineConfigModel()
    m: "float | None" = None
    target: "float | None" = None
    n_paths: int = Field(default=10_000, ge=1)
    n_steps: int = Field(default=250, ge=1)
    path_seed: "int | None" = Field(default=None, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _payoff_selector(self) -> "BacktestRequest":
        if (self.m is None) == (self.target is None):
            raise ValueError("exactly one of m and target must be given")
        if self.m is not None and not self.m >= 0.0:
            raise ValueError("m must be >= 0")
        if self.target is not None and not 0.0 < self.target <= 1.0:
            raise ValueError("target must lie in (0, 1]")
        return self

    def effective_path_seed(self) -> int:
        # Hedged paths use their own stream so they stay independent of
        # the engine's terminal sample.
        if self.path_seed is not None:
            return self.path_seed
        return (self.engine.seed + 1) % 2**64


class BacktestResponse(_Strict):
    n_paths: int
    n_steps: int
    m_used: "float | None"
    predicted_success: float
    empirical_success: float
    success_gap: float
    mean_hedge_error: float
    std_hedge_error: float
    initial_capital_used: float
