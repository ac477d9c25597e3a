"""Capital-versus-success estimation and the frontier solvers.

The estimation recipe for one slope m:

  1. draw w_1..w_n, the terminal Brownian values of the tradable asset,
     i.i.d. N(0, T) under the real-world measure;
  2. tabulate the conditional success function G(w_i, x) on a uniform
     capital grid in [0, K];
  3. per sample, pick x_max(i), the smallest grid maximizer of
     G(w_i, x) - m x;
  4. report capital = mean of dQ/dP(w_i) x_max(i)  (a Q-price estimate)
     and success = mean of the density-free conditional success at
     (w_i, x_max(i))  (a P-expectation estimate).

Sweeping m with one shared sample (common random numbers) makes capital
and success exactly nonincreasing in m, sample by sample, which in turn
makes the capital solver's bisection well posed.

Determinism: samples come from a counter-based stream, and every
reduction accumulates fixed-size chunks in index order, so repeated runs
are bit-identical regardless of thread count.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import NumericalError, ensure_finite
from .market import MarketParams, density_p_over_q, q_weight, sample_terminal
from .success import SuccessFactor, capital_grid, survival_grid

__all__ = [
    "EngineConfig",
    "SlopeDetail",
    "FrontierPoint",
    "CapitalSolution",
    "evaluate_slope",
    "sweep",
    "solve_capital",
    "replay_capital",
]

# Reduction chunk size. Fixed so that sums are accumulated in the same
# order no matter how work is scheduled.
_CHUNK = 4096

# solve_capital keeps the tabulated survival matrix across bisection
# iterations when it fits in this many bytes; above that it retabulates
# per iteration (same numbers, more time).
_SOLVE_CACHE_BYTES = 256 * 2**20


@dataclasses.dataclass(frozen=True)
class EngineConfig:
    """Monte Carlo knobs: sample count, capital-grid size, seed, factor."""

    n_w: int = 100_000
    n_x: int = 1000
    seed: int = 0
    factor: SuccessFactor = SuccessFactor.INDICATOR

    def __post_init__(self) -> None:
        if int(self.n_w) < 1:
            raise ValueError(f"n_w must be >= 1, got {self.n_w}")
        if int(self.n_x) < 2:
            raise ValueError(f"n_x must be >= 2, got {self.n_x}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not isinstance(self.factor, SuccessFactor):
            raise ValueError(f"factor must be a SuccessFactor, got {self.factor!r}")
        object.__setattr__(self, "n_w", int(self.n_w))
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "seed", int(self.seed))


@dataclasses.dataclass(frozen=True)
class SlopeDetail:
    """Per-sample working set kept for audits and payoff construction."""

    w: np.ndarray
    x_idx: np.ndarray
    x_max: np.ndarray
    q_weight: np.ndarray
    cond_success: np.ndarray


@dataclasses.dataclass(frozen=True)
class FrontierPoint:
    """One (m, capital, success) frontier estimate with standard errors.

    capital estimates a quantity in [0, K] and success one in [0, 1]; the
    estimates themselves carry Monte Carlo noise (at m = 0, for example,
    capital is K times the sample mean of the Q-weights, which straddles
    K). Values are reported unclamped so audit identities hold bitwise.
    """

    m: float
    capital: float
    success: float
    capital_se: float
    success_se: float
    detail: SlopeDetail | None = dataclasses.field(
        default=None, compare=False, repr=False
    )


@dataclasses.dataclass(frozen=True)
class CapitalSolution:
    """Minimal capital meeting a success target, from frontier bisection.

    m_star is None when the target is met with zero capital (no binding
    slope); achieved is the success estimate at the returned point and is
    >= target whenever the solution is constrained.
    """

    target: float
    m_star: float | None
    capital: float
    achieved: float
    unconstrained: bool
    capital_se: float
    achieved_se: float


def _chunk_slices(n: int) -> list[slice]:
    return [slice(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]


class _Tabulation:
    """Sampled w values plus per-chunk survival tabulation.

    One instance per engine call; chunks() yields identical data on every
    pass (recomputed, or replayed from cache when enabled), so evaluations
    at different slopes share one sample exactly.
    """

    def __init__(self, params: MarketParams, cfg: EngineConfig,
                 cache_bytes: int = 0) -> None:
        self.params = params
        self.cfg = cfg
        self.grid = capital_grid(params.strike_k, cfg.n_x)
        self.w = sample_terminal(params, cfg.n_w, cfg.seed)
        self.slices = _chunk_slices(cfg.n_w)
        need = cfg.n_w * (cfg.n_x + 1) * 8
        self._cache: list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None = (
            [] if 0 < need <= cache_bytes else None
        )

    def chunks(self):
        if self._cache:
            yield from self._cache
            return
        for sl in self.slices:
            w = self.w[sl]
            # Overflow is handled explicitly: ensure_finite turns it into
            # NumericalError, so the raw numpy warning is just noise here.
            with np.errstate(over="ignore"):
                dens = np.asarray(density_p_over_q(self.params, w))
                ensure_finite(dens, "dP/dQ density")
                qw = np.asarray(q_weight(self.params, w))
                surv = survival_grid(self.params, w, self.grid, self.cfg.factor)
            ensure_finite(surv, "conditional success tabulation")
            item = (dens, qw, surv)
            if self._cache is not None:
                self._cache.append(item)
            yield item

    def max_density(self) -> float:
        theta = self.params.theta
        t = self.params.maturity_t
        w_ext = self.w.max() if theta >= 0.0 else self.w.min()
        dens = math.exp(theta * w_ext + 0.5 * theta * theta * t)
        if not math.isfinite(dens):
            raise NumericalError("dP/dQ density overflow")
        return dens


def _mean_and_se(total: float, total_sq: float, n: int) -> tuple[float, float]:
    mean = total / n
    if n < 2:
        return mean, 0.0
    var = max((total_sq - n * mean * mean) / (n - 1), 0.0)
    return mean, math.sqrt(var / n)


def _reduce(tab: _Tabulation, m_values: list[float],
            keep_detail: bool = False) -> list[FrontierPoint]:
    """Evaluate every slope in m_values on the shared sample.

    At m = 0 the objective is G itself, strictly increasing in exact
    arithmetic with unique maximizer K; the grid end is selected directly
    because the tabulated survival plateaus at 1.0 within machine
    precision well before K, which would otherwise produce spurious ties.
    """
    if keep_detail and len(m_values) != 1:
        raise ValueError("detail can only be kept for a single slope")
    n = tab.cfg.n_w
    nm = len(m_values)
    cap_sum = np.zeros(nm)
    cap_sumsq = np.zeros(nm)
    suc_sum = np.zeros(nm)
    suc_sumsq = np.zeros(nm)
    if keep_detail:
        det_idx = np.empty(n, dtype=np.int64)
        det_x = np.empty(n)
        det_q = np.empty(n)
        det_s = np.empty(n)
    last_col = tab.cfg.n_x
    for sl, (dens, qw, surv) in zip(tab.slices, tab.chunks()):
        rows = np.arange(surv.shape[0])
        g = dens[:, None] * surv
        for im, m in enumerate(m_values):
            if m == 0.0:
                idx = np.full(surv.shape[0], last_col, dtype=np.int64)
            else:
                idx = np.argmax(g - m * tab.grid, axis=1)
            x_sel = tab.grid[idx]
            s_sel = surv[rows, idx]
            v = qw * x_sel
            cap_sum[im] += np.sum(v)
            cap_sumsq[im] += np.sum(v * v)
            suc_sum[im] += np.sum(s_sel)
            suc_sumsq[im] += np.sum(s_sel * s_sel)
            if keep_detail:
                det_idx[sl] = idx
                det_x[sl] = x_sel
                det_q[sl] = qw
                det_s[sl] = s_sel
    points = []
    for im, m in enumerate(m_values):
        capital, capital_se = _mean_and_se(cap_sum[im], cap_sumsq[im], n)
        success, success_se = _mean_and_se(suc_sum[im], suc_sumsq[im], n)
        ensure_finite((capital, success), "frontier point")
        detail = None
        if keep_detail:
            detail = SlopeDetail(w=tab.w, x_idx=det_idx, x_max=det_x,
                                 q_weight=det_q, cond_success=det_s)
        points.append(FrontierPoint(m=float(m), capital=capital, success=success,
                                    capital_se=capital_se, success_se=success_se,
                                    detail=detail))
    return points


def evaluate_slope(params: MarketParams, cfg: EngineConfig, m: float,
                   keep_detail: bool = False) -> FrontierPoint:
    """Estimate (capital, success) at one slope m >= 0.

    With keep_detail=True the per-sample assignment (w, chosen capital,
    Q-weight, conditional success) is attached for audits and for building
    the hedgeable payoff.
    """
    m = float(m)
    if not math.isfinite(m) or m < 0.0:
        raise ValueError(f"m must be finite and >= 0, got {m}")
    tab = _Tabulation(params, cfg)
    return _reduce(tab, [m], keep_detail=keep_detail)[0]


def sweep(params: MarketParams, cfg: EngineConfig,
          m_grid: "list[float] | np.ndarray") -> list[FrontierPoint]:
    """Evaluate an ascending slope grid on one shared sample.

    Common random numbers make capital and success exactly nonincreasing
    along the grid, not just in expectation. A singleton grid reproduces
    evaluate_slope bitwise.
    """
    m_values = [float(m) for m in np.asarray(m_grid, dtype=float).ravel()]
    if not m_values:
        raise ValueError("m_grid must be nonempty")
    for m in m_values:
        if not math.isfinite(m) or m < 0.0:
            raise ValueError(f"every m must be finite and >= 0, got {m}")
    if any(b <= a for a, b in zip(m_values, m_values[1:])):
        raise ValueError("m_grid must be strictly ascending")
    tab = _Tabulation(params, cfg)
    return _reduce(tab, m_values)


def solve_capital(params: MarketParams, cfg: EngineConfig, target: float,
                  cache_bytes: int = _SOLVE_CACHE_BYTES) -> CapitalSolution:
    """Minimal capital whose success estimate reaches the target.

    Bisection on the slope over the common-random-number frontier: find
    the largest m with success(m) >= target, iterating until the bracket
    collapses to adjacent floats. success(m) is a step function of m on a
    finite sample, so the returned point sits exactly on the frontier the
    same (params, cfg) would sweep, and no frontier point with success >=
    target has smaller capital.

    Special cases: a target met at zero capital returns capital 0 with
    m_star None and the unconstrained flag; target = 1.0 returns the
    m = 0 superhedge endpoint (only full coverage is certain when the
    hedge is imperfect).
    """
    target = float(target)
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target must lie in (0, 1], got {target}")
    tab = _Tabulation(params, cfg, cache_bytes=cache_bytes)

    def at(m: float) -> FrontierPoint:
        return _reduce(tab, [m])[0]

    if target == 1.0:
        point = at(0.0)
        return CapitalSolution(target=target, m_star=0.0, capital=point.capital,
                               achieved=point.success, unconstrained=False,
                               capital_se=point.capital_se,
                               achieved_se=point.success_se)

    k = params.strike_k
    m_force = tab.max_density() * (cfg.n_x / k) * (1.0 + 1e-9)
    point_hi = at(m_force)
    if point_hi.success >= target:
        return CapitalSolution(target=target, m_star=None, capital=point_hi.capital,
                               achieved=point_hi.success, unconstrained=True,
                               capital_se=point_hi.capital_se,
                               achieved_se=point_hi.success_se)

    lo, hi = 0.0, m_force
    point_lo = at(lo)  # success exactly 1 at the superhedge endpoint
    for _ in range(200):
        if np.nextafter(lo, hi) >= hi:
            break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            mid = float(np.nextafter(lo, hi))
        point_mid = at(mid)
        if point_mid.success >= target:
            lo, point_lo = mid, point_mid
        else:
            hi = mid
    return CapitalSolution(target=target, m_star=lo, capital=point_lo.capital,
                           achieved=point_lo.success, unconstrained=False,
                           capital_se=point_lo.capital_se,
                           achieved_se=point_lo.success_se)


def replay_capital(n_w: int, x_max: np.ndarray, q_weights: np.ndarray) -> float:
    """Recompute reported capital from stored per-sample data.

    Uses the exact chunked reduction of the engine, so the result is
    bitwise equal to the FrontierPoint capital it audits.
    """
    total = np.zeros(1)
    for sl in _chunk_slices(n_w):
        total[0] += np.sum(q_weights[sl] * x_max[sl])
    return float(total[0] / n_w)
