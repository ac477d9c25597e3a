"""Success factors and the conditional success function G.

A success factor phi(v, d) scores how well terminal wealth v covers a
claim d, nondecreasing in v with values in [0, 1]. Two variants:

    indicator: phi = 1 if v >= d else 0            (covered or not)
    ratio:     phi = 1 if v >= d else v / d         (partial credit),
               with phi(v, 0) = 1 for any v >= 0.

For the put claim D = (K - Y_T)+ and terminal market information
W_T^X = w, the conditional success function is

    G(w, x) = dP/dQ(w) * E[ phi(x, D) | W_T^X = w ],

a nondecreasing function of the capital level x on [0, K]. Conditionally
on w, ln Y_T is normal with mean log_a(w) = ln y0 + (mu_y - sigma_y^2/2) T
+ sigma_y rho w and standard deviation s = sigma_y sqrt(T (1 - rho^2)),
which gives the indicator case in closed form and reduces the ratio case
to a one-dimensional integral evaluated by deterministic quadrature.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import log_ndtr, ndtr

from .market import MarketParams, density_p_over_q

__all__ = [
    "SuccessFactor",
    "ConditionalSuccessCurve",
    "g_indicator",
    "g_ratio",
    "tabulate_g",
    "capital_grid",
    "survival_grid",
]

# Capital levels within this relative distance of K are treated as K:
# ln(K - x) is singular there and success is certain anyway.
_K_CLAMP_REL = 1e-12

# Fixed Gauss-Legendre order per grid panel of the ratio-factor integral.
# Verified against adaptive quadrature to well below the 1e-8 contract.
_GL_ORDER = 16


class SuccessFactor(enum.Enum):
    """The two supported success-factor families."""

    INDICATOR = "indicator"
    RATIO = "ratio"

    def evaluate(self, v: float | np.ndarray, d: float | np.ndarray) -> np.ndarray:
        """Pointwise phi(v, d); used by tests and backtest reporting."""
        v = np.asarray(v, dtype=float)
        d = np.asarray(d, dtype=float)
        if self is SuccessFactor.INDICATOR:
            return (v >= d).astype(float)
        covered = v >= d
        with np.errstate(divide="ignore", invalid="ignore"):
            partial = np.where(d > 0.0, v / np.where(d > 0.0, d, 1.0), 1.0)
        return np.where(covered, 1.0, partial)


@dataclasses.dataclass(frozen=True)
class ConditionalSuccessCurve:
    """G(w, x) tabulated on an ascending capital grid for one fixed w.

    values are nondecreasing, nonnegative, and end at dP/dQ(w) (success is
    certain once capital covers the worst-case put payoff K).
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a nonempty 1-d array")
        if values.shape != grid.shape:
            raise ValueError("grid and values must have matching shapes")
        if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
            raise ValueError("grid must be strictly ascending")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def capital_grid(strike_k: float, n_x: int) -> np.ndarray:
    """Uniform capital grid {i K / n_x : i = 0..n_x} with the last point
    pinned to exactly K."""
    if n_x < 2:
        raise ValueError(f"n_x must be >= 2, got {n_x}")
    grid = np.arange(n_x + 1) * (strike_k / n_x)
    grid[-1] = strike_k
    return grid


def _cond_sd(params: MarketParams) -> float:
    return params.sigma_y * math.sqrt(params.maturity_t * (1.0 - params.rho * params.rho))


def _log_a(params: MarketParams, w: np.ndarray | float) -> np.ndarray | float:
    t = params.maturity_t
    return (np.log(params.y0) + (params.mu_y - 0.5 * params.sigma_y * params.sigma_y) * t
            + params.sigma_y * params.rho * w)


def _survival_indicator_grid(params: MarketParams, w: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """P(Y_T >= K - x | W_T^X = w) for each (w, grid x), shape (n_w, n_grid).

    Written in the same arrangement as the closed form,
    z = (ln((K - x)/y0) - mu_y T - sigma_y rho w + sigma_y^2 T / 2) / (sigma_y sqrt(T(1-rho^2))),
    survival = 1 - Phi(z) computed as Phi(-z). Grid points within 1e-12 K
    of K take the x = K limit, survival exactly 1.
    """
    k = params.strike_k
    t = params.maturity_t
    clamped = (k - grid) <= _K_CLAMP_REL * k
    out = np.empty((w.shape[0], grid.shape[0]))
    out[:, clamped] = 1.0
    open_grid = grid[~clamped]
    if open_grid.size:
        z = ((np.log((k - open_grid)[None, :] / params.y0)
              - params.mu_y * t
              - params.sigma_y * params.rho * w[:, None]
              + 0.5 * params.sigma_y * params.sigma_y * t)
             / (params.sigma_y * np.sqrt(t * (1.0 - params.rho * params.rho))))
        out[:, ~clamped] = ndtr(-z)
    return out


def _ratio_integral_columns(params: MarketParams, w: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """I(x_j) = E[ 1{Y_T < K - x_j} / (K - Y_T) | w ] for interior grid points.

    Returns shape (n_w, n_grid - 2), columns j = 1..n_x-1. Integrates
    phi(z) / (K - exp(log_a + s z)) in the log-payoff coordinate
    t = ln(K - x): panel boundaries ln(K - x_j) are shared across all w,
    so Gauss-Legendre nodes and the 1/(K - e^t) factor are computed once.
    The tail below the last boundary uses the exact series
    sum_k A^k e^{k^2 s^2/2} Phi(z_b - k s) / K^{k+1}, evaluated in log space.
    """
    k = params.strike_k
    s = _cond_sd(params)
    log_a = np.asarray(_log_a(params, w), dtype=float)
    n = grid.shape[0] - 1
    t_edges = np.log(k - grid[:n])  # strictly decreasing, t_0 = ln K

    # Tail below t_{n-1}: geometric expansion of 1/(K - u), u <= K - x_{n-1}.
    tail_b = (t_edges[-1] - log_a) / s
    u_ratio = (k - grid[n - 1]) / k
    k_max = max(4, int(math.ceil(13.0 / max(-math.log10(u_ratio), 0.3))))
    ks = np.arange(k_max + 1)
    log_terms = (ks[None, :] * log_a[:, None]
                 + 0.5 * (ks * ks)[None, :] * s * s
                 + log_ndtr(tail_b[:, None] - ks[None, :] * s)
                 - (ks[None, :] + 1) * math.log(k))
    tail = np.exp(log_terms).sum(axis=1)

    if n < 3:
        return tail[:, None]

    # Panels between consecutive boundaries, skipping the panel that ends at
    # ln K (only needed for x = 0, where the x * I(x) term vanishes anyway).
    lo = t_edges[2:]
    hi = t_edges[1:-1]
    gl_x, gl_w = leggauss(_GL_ORDER)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * gl_x[None, :]
    shared = (half[:, None] * gl_w[None, :]) / (k - np.exp(nodes))
    zz = (nodes[None, :, :] - log_a[:, None, None]) / s
    dens = np.exp(-0.5 * zz * zz) / (math.sqrt(2.0 * math.pi) * s)
    panel = (dens * shared[None, :, :]).sum(axis=2)
    upper = np.cumsum(panel[:, ::-1], axis=1)[:, ::-1]
    return np.concatenate([tail[:, None] + upper, tail[:, None]], axis=1)


def survival_grid(
    params: MarketParams,
    w: np.ndarray,
    grid: np.ndarray,
    factor: SuccessFactor,
) -> np.ndarray:
    """Conditional expected success E[phi(x, D) | w] on the grid, density-free.

    Shape (n_w, n_grid). Multiplying by dP/dQ(w) per row gives G.
    """
    w = np.asarray(w, dtype=float)
    surv = _survival_indicator_grid(params, w, grid)
    if factor is SuccessFactor.INDICATOR:
        return surv
    out = surv.copy()
    interior = _ratio_integral_columns(params, w, grid)
    out[:, 1:-1] += grid[None, 1:-1] * interior
    # x = K certain, x = 0 pays only when the put expires worthless; both
    # already carried by the indicator survival term.
    np.minimum(out, 1.0, out=out)
    return out


def g_indicator(params: MarketParams, w: float, x: float) -> float:
    """G(w, x) for the indicator factor, closed form."""
    _check_level(params, x)
    surv = _survival_indicator_grid(
        params, np.array([float(w)]), np.array([float(x)])
    )[0, 0]
    return float(density_p_over_q(params, w) * surv)


def g_ratio(params: MarketParams, w: float, x: float) -> float:
    """G(w, x) for the ratio factor, by adaptive quadrature.

    Absolute quadrature error at most 1e-8 on the conditional expectation.
    The grid tabulation path (tabulate_g / survival_grid) uses a fixed
    panel rule cross-checked against this implementation.
    """
    _check_level(params, x)
    w = float(w)
    x = float(x)
    k = params.strike_k
    dens = float(density_p_over_q(params, w))
    surv = _survival_indicator_grid(params, np.array([w]), np.array([x]))[0, 0]
    if x <= 0.0 or (k - x) <= _K_CLAMP_REL * k:
        return dens * float(surv)
    s = _cond_sd(params)
    log_a = float(_log_a(params, w))
    z_b = (math.log(k - x) - log_a) / s

    def integrand(z: float) -> float:
        return (math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
                / (k - math.exp(log_a + s * z)))

    integral, _ = quad(integrand, -np.inf, z_b, epsabs=1e-11, epsrel=1e-11, limit=200)
    return dens * min(float(surv) + x * integral, 1.0)


def tabulate_g(
    params: MarketParams, w: float, factor: SuccessFactor, n_x: int
) -> ConditionalSuccessCurve:
    """Tabulate G(w, .) on the uniform capital grid {i K / n_x : i = 0..n_x}."""
    grid = capital_grid(params.strike_k, n_x)
    surv = survival_grid(params, np.array([float(w)]), grid, factor)[0]
    dens = float(density_p_over_q(params, w))
    return ConditionalSuccessCurve(grid=grid, values=dens * surv)


def _check_level(params: MarketParams, x: float) -> None:
    if not 0.0 <= x <= params.strike_k:
        raise ValueError(f"capital level must lie in [0, {params.strike_k}], got {x}")
