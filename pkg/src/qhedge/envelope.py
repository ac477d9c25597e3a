"""Tangent point of a tabulated nondecreasing function.

For a function g on a finite grid and a slope m >= 0, the tangent point
is the smallest grid x maximizing g(x) - m x. Geometrically this is where
the lowest line of slope m lying above g touches it first; economically,
with g a conditional success curve and m a price per unit of capital, it
is the capital level buying the most success per unit of cost.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence

import numpy as np

from .success import ConditionalSuccessCurve

__all__ = ["TangentResult", "tangent_point", "batch_tangent"]


@dataclasses.dataclass(frozen=True)
class TangentResult:
    """Smallest maximizer of g(x) - m x over the curve grid.

    pi is always a grid point; objective = g(pi) - m pi dominates
    g(x) - m x for every grid x, with ties broken toward smaller x.
    """

    pi: float
    g_at_pi: float
    objective: float


def _check_slope(m: float) -> float:
    m = float(m)
    if not np.isfinite(m) or m < 0.0:
        raise ValueError(f"slope m must be finite and >= 0, got {m}")
    return m


def tangent_point(curve: ConditionalSuccessCurve, m: float) -> TangentResult:
    """Tangent point of one curve at slope m.

    np.argmax returns the first occurrence of the maximum, which is
    exactly the smallest-x tie rule.
    """
    m = _check_slope(m)
    if not np.all(np.isfinite(curve.values)):
        raise ValueError("curve values must be finite")
    objective = curve.values - m * curve.grid
    idx = int(np.argmax(objective))
    return TangentResult(
        pi=float(curve.grid[idx]),
        g_at_pi=float(curve.values[idx]),
        objective=float(objective[idx]),
    )


def batch_tangent(
    curves: Sequence[ConditionalSuccessCurve], m: float
) -> list[TangentResult]:
    """Elementwise tangent_point over curves sharing one grid, order kept."""
    m = _check_slope(m)
    if not curves:
        raise ValueError("curves must be nonempty")
    grid = curves[0].grid
    for i, curve in enumerate(curves[1:], start=1):
        if curve.grid.shape != grid.shape or not np.array_equal(curve.grid, grid):
            raise ValueError(f"curve {i} grid differs from curve 0 grid")
    values = np.stack([c.values for c in curves])
    if not np.all(np.isfinite(values)):
        raise ValueError("curve values must be finite")
    objective = values - m * grid[None, :]
    idx = np.argmax(objective, axis=1)
    rows = np.arange(len(curves))
    pis = grid[idx]
    gs = values[rows, idx]
    objs = objective[rows, idx]
    return [
        TangentResult(pi=float(p), g_at_pi=float(g), objective=float(o))
        for p, g, o in zip(pis, gs, objs)
    ]
