"""Two-asset lognormal market model.

The tradable asset X and the nontradable asset Y follow correlated
geometric Brownian motions under the real-world measure P:

    dX_t = mu_x X_t dt + sigma_x X_t dW_t^X
    dY_t = mu_y Y_t dt + sigma_y Y_t dW_t^Y,   W^Y = rho W^X + sqrt(1-rho^2) W

with W independent of W^X and the interest rate fixed at zero. Q denotes
the measure under which X is a martingale; on the sigma-field generated
by X it is unique, with dP/dQ = exp(theta W_T^X + theta^2 T / 2) where
theta = mu_x / sigma_x is the market price of risk of X.

All random sampling is counter-based (Philox) with an explicit seed, so
every operation here is a pure function of (inputs, seed) regardless of
platform or thread count.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "MarketParams",
    "sample_terminal",
    "density_p_over_q",
    "q_weight",
    "black_scholes_put",
    "simulate_paths",
    "terminal_log_coordinate",
]

# Correlations closer than this to +-1 are rejected: the conditional-law
# formulas divide by sqrt(1 - rho^2), and the complete-market limit is
# already served exactly by the Black-Scholes put formula.
RHO_BOUND = 1.0 - 1e-6


@dataclasses.dataclass(frozen=True)
class MarketParams:
    """Market parameters for the correlated GBM pair.

    Attributes:
        mu_x: drift of the tradable asset X, per year.
        sigma_x: volatility of X, per sqrt-year, > 0.
        mu_y: drift of the nontradable asset Y, per year.
        sigma_y: volatility of Y, per sqrt-year, > 0.
        rho: instantaneous correlation of the driving Brownian motions,
            |rho| <= 1 - 1e-6.
        x0: initial price of X, > 0.
        y0: initial price of Y, > 0.
        maturity_t: horizon T in years, > 0.
        strike_k: strike K of the put written on Y, > 0.
    """

    mu_x: float = 0.1
    sigma_x: float = 0.3
    mu_y: float = 0.1
    sigma_y: float = 0.3
    rho: float = 0.0
    x0: float = 1.0
    y0: float = 1.0
    maturity_t: float = 1.0
    strike_k: float = 1.0

    def __post_init__(self) -> None:
        for name in ("mu_x", "sigma_x", "mu_y", "sigma_y", "rho",
                     "x0", "y0", "maturity_t", "strike_k"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("sigma_x", "sigma_y", "x0", "y0", "maturity_t", "strike_k"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if abs(self.rho) > RHO_BOUND:
            raise ValueError(
                f"|rho| must be <= {RHO_BOUND} (got rho={self.rho}); "
                "the complete-market limit is handled by black_scholes_put"
            )

    @property
    def theta(self) -> float:
        """Market price of risk of the tradable asset, mu_x / sigma_x."""
        return self.mu_x / self.sigma_x


def _uniform_open(raw: np.ndarray) -> np.ndarray:
    """Map raw 64-bit words to uniforms strictly inside (0, 1).

    Uses the top 52 bits plus a half-step offset: every output is exactly
    representable, the smallest is 2^-53 and the largest 1 - 2^-53, so the
    inverse normal CDF below never sees 0 or 1.
    """
    shifted = (raw >> np.uint64(12)).astype(np.float64)
    return (shifted + 0.5) * 2.0**-52


def _standard_normals(n: int, seed: int) -> np.ndarray:
    """n deterministic standard normals from the Philox stream ``seed``.

    Inverse-CDF transform of a counter-based uniform stream: sample i is a
    fixed function of (seed, i), independent of threading or chunking.
    """
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    raw = np.random.Philox(key=np.uint64(seed)).random_raw(int(n))
    return ndtri(_uniform_open(raw))


def sample_terminal(params: MarketParams, n: int, seed: int) -> np.ndarray:
    """Draw n terminal Brownian values W_T^X, i.i.d. N(0, T) under P.

    Identical (params.maturity_t, n, seed) gives a bit-identical array.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _standard_normals(n, seed) * np.sqrt(params.maturity_t)


def density_p_over_q(params: MarketParams, w: float | np.ndarray) -> float | np.ndarray:
    """dP/dQ on the terminal X information, exp(theta w + theta^2 T / 2)."""
    theta = params.theta
    return np.exp(theta * w + 0.5 * theta * theta * params.maturity_t)


def q_weight(params: MarketParams, w: float | np.ndarray) -> float | np.ndarray:
    """dQ/dP at w, the weight turning P-sample averages into Q-expectations."""
    theta = params.theta
    return np.exp(-theta * w - 0.5 * theta * theta * params.maturity_t)


def black_scholes_put(y0: float, k: float, sigma: float, t: float) -> float:
    """Black-Scholes put value at zero interest rate.

    value = k Phi(-d2) - y0 Phi(-d1),
    d1 = (ln(y0/k) + sigma^2 t / 2) / (sigma sqrt(t)), d2 = d1 - sigma sqrt(t).
    """
    for name, value in (("y0", y0), ("k", k), ("sigma", sigma), ("t", t)):
        if not value > 0.0:
            raise ValueError(f"{name} must be > 0, got {value}")
    sig_sqrt_t = sigma * math.sqrt(t)
    d1 = (math.log(y0 / k) + 0.5 * sigma * sigma * t) / sig_sqrt_t
    d2 = d1 - sig_sqrt_t
    return k * float(ndtr(-d2)) - y0 * float(ndtr(-d1))


def simulate_paths(
    params: MarketParams, n_paths: int, n_steps: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate (X, Y) paths on a uniform time grid with exact transitions.

    Each step applies the exact lognormal transition over dt = T / n_steps,
    so the terminal marginals are exact in law for any step count. Returns
    arrays of shape (n_paths, n_steps + 1) with column 0 holding x0 / y0.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    dt = params.maturity_t / n_steps
    z = _standard_normals(2 * n_paths * n_steps, seed).reshape(2, n_paths, n_steps)
    sqrt_dt = np.sqrt(dt)
    dwx = sqrt_dt * z[0]
    dwy = params.rho * dwx + np.sqrt(1.0 - params.rho * params.rho) * sqrt_dt * z[1]

    x = np.empty((n_paths, n_steps + 1))
    y = np.empty((n_paths, n_steps + 1))
    x[:, 0] = params.x0
    y[:, 0] = params.y0
    drift_x = (params.mu_x - 0.5 * params.sigma_x * params.sigma_x) * dt
    drift_y = (params.mu_y - 0.5 * params.sigma_y * params.sigma_y) * dt
    np.cumsum(drift_x + params.sigma_x * dwx, axis=1, out=dwx)
    np.cumsum(drift_y + params.sigma_y * dwy, axis=1, out=dwy)
    x[:, 1:] = params.x0 * np.exp(dwx)
    y[:, 1:] = params.y0 * np.exp(dwy)
    return x, y


def terminal_log_coordinate(params: MarketParams, x_t: float | np.ndarray) -> float | np.ndarray:
    """Recover W_T^X from a terminal tradable price X_T.

    Inverts X_T = x0 exp((mu_x - sigma_x^2/2) T + sigma_x W_T^X).
    """
    t = params.maturity_t
    return (np.log(x_t / params.x0)
            - (params.mu_x - 0.5 * params.sigma_x * params.sigma_x) * t) / params.sigma_x
