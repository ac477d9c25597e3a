"""HTTP service exposing the frontier, solver, and backtest.

Endpoints are plain POST-JSON wrappers over the core library; the CLI
drives them through an in-process transport by default, and the same app
can be served over the network with uvicorn:

    uvicorn qhedge.service:app

Responses carry full round-trip floats (JSON shortest-repr), so a client
rendering them reproduces the core's numbers bit for bit.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .backtest import PayoffFunction, build_payoff, run_backtest
from .engine import evaluate_slope, solve_capital, sweep
from .errors import NumericalError
from .schemas import (
    BacktestRequest,
    BacktestResponse,
    FrontierRequest,
    FrontierResponse,
    FrontierRow,
    SolveRequest,
    SolveResponse,
)

__all__ = ["app"]

app = FastAPI(title="qhedge", version=__version__)


@app.exception_handler(NumericalError)
async def _numerical_error(_: Request, exc: NumericalError) -> JSONResponse:
    return JSONResponse(status_code=500,
                        content={"error": "numerical", "detail": str(exc)})


@app.exception_handler(ValueError)
async def _value_error(_: Request, exc: ValueError) -> JSONResponse:
    # Core-level validation that pydantic's structural checks let through.
    return JSONResponse(status_code=422,
                        content={"error": "config", "detail": str(exc)})


@app.get("/health")
async def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/v1/frontier", response_model=FrontierResponse)
def frontier(req: FrontierRequest) -> FrontierResponse:
    cfg = req.engine.to_config()
    m_values = req.m_grid.to_values()
    rows: list[FrontierRow] = []
    for rho in req.effective_rhos():
        params = req.market.to_params(rho=rho)
        for point in sweep(params, cfg, m_values):
            rows.append(FrontierRow.from_point(rho, point))
    return FrontierResponse(rows=rows)


@app.post("/v1/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    sol = solve_capital(req.market.to_params(), req.engine.to_config(),
                        req.target)
    return SolveResponse.from_solution(sol)


@app.post("/v1/backtest", response_model=BacktestResponse)
def backtest(req: BacktestRequest) -> BacktestResponse:
    params = req.market.to_params()
    cfg = req.engine.to_config()
    m_used = req.m
    if m_used is None:
        sol = solve_capital(params, cfg, req.target)
        m_used = sol.m_star
    if m_used is None:
        # Target already met with zero capital: hedge the zero claim.
        predicted = sol.achieved
        payoff = PayoffFunction(knots_w=np.array([-1.0, 1.0]),
                                knots_v=np.array([0.0, 0.0]))
    else:
        point = evaluate_slope(params, cfg, m_used, keep_detail=True)
        predicted = point.success
        payoff = build_payoff(point.detail.w, point.detail.x_max,
                              strike_k=params.strike_k)
    report = run_backtest(payoff, params, req.n_paths, req.n_steps,
                          req.effective_path_seed())
    return BacktestResponse(
        n_paths=report.n_paths,
        n_steps=report.n_steps,
        m_used=m_used,
        predicted_success=predicted,
        empirical_success=report.empirical_success,
        success_gap=report.empirical_success - predicted,
        mean_hedge_error=report.mean_hedge_error,
        std_hedge_error=report.std_hedge_error,
        initial_capital_used=report.initial_capital_used,
    )
