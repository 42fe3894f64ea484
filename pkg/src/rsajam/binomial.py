"""Binomial tail probabilities, conditional binomial means, and the exact
one-step drift of the Threshold counts chain at finite n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must lie in [0, 1], got {p}")


def binom_pmf(n: int, p: float, k: int) -> float:
    _check_p(p)
    if n < 0:
        raise ParameterError("n must be non-negative")
    if k < 0 or k > n:
        return 0.0
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    log_pmf = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
               + k * math.log(p) + (n - k) * math.log1p(-p))
    return math.exp(log_pmf)


def binom_cdf(n: int, p: float, k: int) -> float:
    """P(Bin(n, p) <= k), summing pmf terms by the multiplicative recurrence."""
    _check_p(p)
    if n < 0:
        raise ParameterError("n must be non-negative")
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    term = (1.0 - p) ** n
    if term == 0.0:
        # (1-p)^n underflowed; start the recurrence from log-space instead
        return min(1.0, sum(binom_pmf(n, p, j) for j in range(k + 1)))
    ratio = p / (1.0 - p)
    total = term
    for j in range(k):
        term *= (n - j) / (j + 1) * ratio
        total += term
    return min(total, 1.0)


@dataclass(frozen=True)
class BinomialFamily:
    """Independent X_i ~ Bin(sizes[i], p)."""

    sizes: tuple
    p: float

    def __post_init__(self):
        _check_p(self.p)
        if any(s < 0 for s in self.sizes):
            raise ParameterError("sizes must be non-negative")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @property
    def total(self) -> int:
        return sum(self.sizes)


def conditional_binomial_mean(fam: BinomialFamily, R: int, i: int) -> float:
    """E[X_i | X_1 + ... + X_r <= R].

    Uses the identity n_i p P(Bin(N-1, p) <= R-1) / P(Bin(N, p) <= R), N = sum of sizes.
    """
    N = fam.total
    if not 1 <= R <= N:
        raise ParameterError(f"R must lie in [1, {N}], got {R}")
    if not 0 <= i < len(fam.sizes):
        raise ParameterError(f"index {i} out of range")
    denom = binom_cdf(N, fam.p, R)
    if denom == 0.0:
        raise DomainError("conditioning event has probability zero")
    return fam.sizes[i] * fam.p * binom_cdf(N - 1, fam.p, R - 1) / denom


def finite_n_drift_threshold(counts, p: float) -> np.ndarray:
    """Expected one-step change of each Threshold class count.

    ``counts`` is a :class:`~rsajam.processes.StateCounts` or the vector A_0..A_{K-1}.

    Delta_k = (A_{k-1} - A_k) p (1-p)^{A_{K-1}} B(A_{<=K-2} - 1, p; K-2)
              + b(A_{<=K-2}, p; k) (1-p)^{A_{K-1}}

    with A_{-1} = 0, and no outflow term for k = K-1 (a vertex joins only
    when it has no edge to class K-1).
    """
    _check_p(p)
    A = [int(a) for a in getattr(counts, "A", counts)]
    K = len(A)
    if K < 1 or any(a < 0 for a in A):
        raise ParameterError("counts must be a non-empty vector of non-negative integers")
    low = sum(A[:K - 1])
    no_edge_top = (1.0 - p) ** A[K - 1]
    flow = p * no_edge_top * binom_cdf(low - 1, p, K - 2) if low > 0 else 0.0
    out = np.empty(K)
    for k in range(K):
        inflow = A[k - 1] if k >= 1 else 0
        outflow = A[k] if k < K - 1 else 0
        out[k] = (inflow - outflow) * flow + binom_pmf(low, p, k) * no_edge_top
    return out


def enumerate_conditional_moments(fam: BinomialFamily, R: int, i: int) -> tuple[float, float]:
    """E[X_i | sum <= R] and E[X_i (X_i - 1) | sum <= R] by summing over every joint outcome."""
    p = fam.p
    pmfs = [np.array([math.comb(m, j) * p**j * (1 - p) ** (m - j) for j in range(m + 1)])
            for m in fam.sizes]
    grids = np.meshgrid(*[np.arange(m + 1) for m in fam.sizes], indexing="ij")
    weight = np.ones(grids[0].shape)
    for axis, pmf in enumerate(pmfs):
        shape = [1] * len(pmfs)
        shape[axis] = -1
        weight = weight * pmf.reshape(shape)
    keep = sum(grids) <= R
    mass = weight[keep].sum()
    if mass == 0.0:
        raise DomainError("conditioning event has probability zero")
    x = grids[i][keep]
    w = weight[keep]
    return float((x * w).sum() / mass), float((x * (x - 1) * w).sum() / mass)


def size_vectors(max_total: int, max_r: int):
    """Every vector of 1..max_r non-negative sizes with total in 1..max_total."""
    for r in range(1, max_r + 1):
        for sizes in itertools.product(range(max_total + 1), repeat=r):
            if 1 <= sum(sizes) <= max_total:
                yield sizes


def lemma_sweep(max_total: int = 12, max_r: int = 3, ps=(0.1, 0.5, 0.9)) -> dict:
    """Compare the closed-form conditional mean and second-moment bound with enumeration.

    Returns the number of cases, the largest absolute mean error, and the
    number of cases where the second-moment bound fails.
    """
    cases = 0
    worst = 0.0
    bound_failures = 0
    for sizes in size_vectors(max_total, max_r):
        for p in ps:
            fam = BinomialFamily(sizes, p)
            N = fam.total
            for R in range(1, N + 1):
                tail = binom_cdf(N, p, R)
                for i, m in enumerate(sizes):
                    mean, second = enumerate_conditional_moments(fam, R, i)
                    worst = max(worst, abs(conditional_binomial_mean(fam, R, i) - mean))
                    if second > m * (m - 1) * p * p / tail * (1 + 1e-12) + 1e-15:
                        bound_failures += 1
                    cases += 1
    return {"cases": cases, "max_mean_error": worst, "bound_failures": bound_failures}
