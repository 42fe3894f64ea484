"""Replicated simulations and their comparison with the fluid limit."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .fluid import FluidSolution
from .processes import ModelSpec, Trajectory, make_grid, run_explore_counts


@dataclass
class EnsembleResult:
    spec: ModelSpec
    reps: int
    grid: np.ndarray
    mean_alpha: np.ndarray
    stderr_alpha: np.ndarray
    mean_total_active: float
    stderr_total_active: float


def thread_cap() -> int:
    """Worker count from RSAJAM_THREADS (default 1)."""
    raw = os.environ.get("RSAJAM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"RSAJAM_THREADS must be an integer, got {raw!r}") from None


def _stderr(x: np.ndarray) -> np.ndarray:
    if len(x) < 2:
        return np.zeros(x.shape[1:])
    return x.std(axis=0, ddof=1) / np.sqrt(len(x))


def _one(args):
    spec, base_seed, rep, grid = args
    return run_explore_counts(spec, base_seed, rep, grid).alpha


def _summarise(spec, grid, stack: np.ndarray) -> EnsembleResult:
    totals = stack[:, -1, :].sum(axis=1)
    return EnsembleResult(
        spec=spec, reps=len(stack), grid=np.asarray(grid, dtype=np.float64),
        mean_alpha=stack.mean(axis=0), stderr_alpha=_stderr(stack),
        mean_total_active=float(totals.mean()), stderr_total_active=float(_stderr(totals)),
    )


def aggregate(trajectories: list[Trajectory]) -> EnsembleResult:
    """Combine complete trajectories of one spec, listed in replication order."""
    first = trajectories[0]
    return _summarise(first.spec, first.grid, np.stack([tr.alpha for tr in trajectories]))


def run_ensemble(spec: ModelSpec, reps: int, base_seed: int = 0, grid=None,
                 workers: int | None = None) -> EnsembleResult:
    """Run ``reps`` counts-only simulations; replication r uses index r.

    Results are collected by replication index, so the worker count never
    changes the output.
    """
    if reps < 1:
        raise ParameterError("reps must be ≥ 1")
    grid = make_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid[-1] != 1.0:
        raise ParameterError("ensemble grid must end at t = 1")
    workers = thread_cap() if workers is None else workers
    jobs = [(spec, base_seed, r, grid) for r in range(reps)]
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=min(workers, reps)) as pool:
            alphas = list(pool.map(_one, jobs))
    else:
        alphas = [_one(j) for j in jobs]
    return _summarise(spec, grid, np.stack(alphas))


def deviation_from_fluid(ens: EnsembleResult, fl: FluidSolution) -> float:
    """Sup over grid times and classes of |mean alpha - fluid alpha|."""
    if (ens.spec.kind, ens.spec.K) != (fl.kind, fl.K) or not np.isclose(ens.spec.c, fl.c, rtol=0, atol=1e-12):
        raise ParameterError(
            f"ensemble ({ens.spec.kind.value}, K={ens.spec.K}, c={ens.spec.c}) does not match "
            f"fluid ({fl.kind.value}, K={fl.K}, c={fl.c})")
    if len(ens.grid) != len(fl.grid) or not np.allclose(ens.grid, fl.grid, rtol=0, atol=1e-12):
        raise ParameterError("ensemble and fluid grids differ")
    if fl.alpha.shape != ens.mean_alpha.shape:
        raise ParameterError("ensemble and fluid class layouts differ")
    return float(np.max(np.abs(ens.mean_alpha - fl.alpha)))
