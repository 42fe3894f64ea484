"""Fluid limits of the three exploration chains.

The drift functions accept ``alpha`` of shape ``(..., K)`` and a scalar or
array ``c`` broadcasting against ``alpha[..., 0]``, so one RK4 sweep can solve
a whole range of mean degrees at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BracketError, ParameterError
from .processes import DEFAULT_GRID, Kind, tracked_classes

DEFAULT_STEP = 5e-5
MAX_STEP = 0.01


@lru_cache(maxsize=None)
def _inv_factorials(K: int) -> np.ndarray:
    return np.array([1.0 / math.factorial(j) for j in range(K)])


def _shift_right(alpha):
    """alpha_{k-1} aligned with column k; zero in the first column."""
    out = np.zeros_like(alpha)
    out[..., 1:] = alpha[..., :-1]
    return out


def _prep(alpha, c):
    alpha = np.asarray(alpha, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)[..., None]
    return alpha, c


def drift_threshold(alpha, c, K: int) -> np.ndarray:
    alpha, c = _prep(alpha, c)
    if alpha.shape[-1] != K:
        raise ParameterError(f"expected {K} classes, got {alpha.shape[-1]}")
    total = alpha.sum(axis=-1, keepdims=True)
    low = alpha[..., :K - 1].sum(axis=-1, keepdims=True)
    decay = np.exp(-c * total)
    x = c * low
    # (c a_{<=K-2})^r / r!  for r = 0..K-1
    powers = x ** np.arange(K) * _inv_factorials(K)
    poly = powers[..., :K - 1].sum(axis=-1, keepdims=True)
    net = _shift_right(alpha)
    net[..., :K - 1] -= alpha[..., :K - 1]
    return decay * (c * net * poly + powers)


def drift_tetris(alpha, c, K: int) -> np.ndarray:
    alpha, c = _prep(alpha, c)
    if alpha.shape[-1] != K:
        raise ParameterError(f"expected {K} classes, got {alpha.shape[-1]}")
    # tail[k] = alpha_k + ... + alpha_K (0-based column k is height k+1)
    tail = np.cumsum(alpha[..., ::-1], axis=-1)[..., ::-1]
    hit_below = -np.expm1(-c * _shift_right(alpha))
    hit_below[..., 0] = 1.0
    return hit_below * np.exp(-c * tail)


def drift_sfap(alpha, c, K: int) -> np.ndarray:
    alpha, c = _prep(alpha, c)
    if alpha.shape[-1] != K:
        raise ParameterError(f"expected {K} classes, got {alpha.shape[-1]}")
    blocked = -np.expm1(-c * alpha)
    prefix = np.ones_like(alpha)
    prefix[..., 1:] = np.cumprod(blocked[..., :-1], axis=-1)
    return np.exp(-c * alpha) * prefix


DRIFTS = {Kind.THRESHOLD: drift_threshold, Kind.TETRIS: drift_tetris, Kind.SFAP: drift_sfap}


@dataclass
class FluidSolution:
    """alpha[j, k] is the fluid value of ``classes[k]`` at ``grid[j]``.

    For a batched solve ``c`` is an array and alpha has shape (len(c), M, K).
    """

    kind: Kind
    K: int
    c: float
    grid: np.ndarray
    alpha: np.ndarray
    step: float

    @property
    def classes(self) -> list[int]:
        return tracked_classes(self.kind, self.K)

    @property
    def total(self) -> np.ndarray:
        return self.alpha.sum(axis=-1)

    def final(self) -> np.ndarray:
        return self.alpha[..., -1, :]


def _n_steps(step: float, points: int) -> int:
    if not (0.0 < step <= MAX_STEP):
        raise ParameterError(f"step must lie in (0, {MAX_STEP}], got {step}")
    if points < 2:
        raise ParameterError("a time grid needs at least 2 points")
    per_interval = math.ceil((1.0 / (points - 1)) / step - 1e-9)
    return per_interval * (points - 1)


def integrate(kind, K: int, c, step: float = DEFAULT_STEP, points: int = DEFAULT_GRID) -> FluidSolution:
    """Classical RK4 with fixed step on [0, 1] from alpha(0) = 0.

    The step is shrunk, if needed, so that every grid time is hit exactly.
    ``c`` may be an array to solve several mean degrees in one sweep.
    """
    kind = Kind(kind)
    if K < 1:
        raise ParameterError("K must be ≥ 1")
    c_arr = np.asarray(c, dtype=np.float64)
    if np.any(c_arr < 0):
        raise ParameterError("c must be ≥ 0")
    n_steps = _n_steps(step, points)
    h = 1.0 / n_steps
    stride = n_steps // (points - 1)
    f = DRIFTS[kind]

    y = np.zeros(c_arr.shape + (K,))
    out = np.empty(c_arr.shape + (points, K))
    out[..., 0, :] = y
    for i in range(1, n_steps + 1):
        k1 = f(y, c_arr, K)
        k2 = f(y + 0.5 * h * k1, c_arr, K)
        k3 = f(y + 0.5 * h * k2, c_arr, K)
        k4 = f(y + h * k3, c_arr, K)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if i % stride == 0:
            out[..., i // stride, :] = y
    grid = np.linspace(0.0, 1.0, points)
    c_out = float(c_arr) if c_arr.ndim == 0 else c_arr
    return FluidSolution(kind, K, c_out, grid, out, h)


def sfap_closed_form(c: float, K: int, t) -> np.ndarray:
    """Explicit SFAP solution; shape ``t.shape + (K,)``."""
    if c < 0:
        raise ParameterError("c must be ≥ 0")
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros(t.shape + (K,))
    if c == 0:
        out[..., 0] = t
        return out
    x = np.log1p(c * t)  # c * alpha_1
    out[..., 0] = x / c
    for i in range(1, K):
        # log(e^x - x) written to stay accurate for small x
        x = np.log1p(np.expm1(x) - x)
        out[..., i] = x / c
    return out


def threshold_k1_jamming(c: float) -> float:
    if c < 0:
        raise ParameterError("c must be ≥ 0")
    return 1.0 if c == 0 else math.log1p(c) / c


def jamming_constant(kind, K: int, c, step: float = DEFAULT_STEP):
    """Limiting fraction of active vertices: sum of the tracked classes at t = 1."""
    sol = integrate(kind, K, c, step=step, points=2)
    total = sol.final().sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def tetris_crossing(K: int, k_low: int, k_high: int, bracket, tol: float = 1e-4,
                    step: float = DEFAULT_STEP) -> float:
    """Bisection for the c at which the jamming densities of two heights are equal."""
    if not (1 <= k_low <= K and 1 <= k_high <= K) or k_low == k_high:
        raise ParameterError("heights must be two distinct values in 1..K")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi or lo < 0:
        raise ParameterError("bracket must satisfy 0 <= lo <= hi")

    def gap(c):
        a = integrate(Kind.TETRIS, K, c, step=step, points=2).final()
        return a[k_low - 1] - a[k_high - 1]

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if lo == hi or np.sign(g_lo) == np.sign(g_hi):
        raise BracketError(f"no sign change of the height gap on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if g_mid == 0.0:
            return mid
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
