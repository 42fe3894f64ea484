"""Threshold, Tetris and SFAP adsorption dynamics.

Each model runs in three modes:

* ``run_direct`` applies the acceptance rule vertex by vertex on an explicit graph;
* ``run_explore_counts`` simulates only the class counts, drawing the number of
  edges to each class as a binomial (never materialising the graph);
* ``run_explore_coupled`` runs the exploration algorithm but reveals each edge
  from the same keyed uniform the graph sampler used, so its labels must equal
  those of ``run_direct`` exactly.

Label encoding (per vertex, 0-based vertex ids):
Threshold: ``k >= 0`` active with k active neighbours, ``BLOCKED`` (-1) frozen.
Tetris/SFAP: height/frequency in 1..K, 0 frozen.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import CouplingError, ParameterError, StateError
from .graph import GraphInstance, VertexOrder, edge_flags, edge_probability
from .randomness import Purpose, uniform01_array

BLOCKED = -1
UNEXPLORED = -2
DEFAULT_GRID = 101


class Kind(str, enum.Enum):
    THRESHOLD = "threshold"
    TETRIS = "tetris"
    SFAP = "sfap"


@dataclass(frozen=True)
class ModelSpec:
    kind: Kind
    K: int
    c: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.K < 1:
            raise ParameterError("K must be ≥ 1")
        if self.n < 1:
            raise ParameterError("n must be ≥ 1")
        if self.c < 0:
            raise ParameterError("c must be ≥ 0")

    @property
    def p(self) -> float:
        return edge_probability(self.n, self.c)

    @property
    def classes(self) -> list[int]:
        """Labels of the active classes tracked in trajectories."""
        return tracked_classes(self.kind, self.K)


def tracked_classes(kind, K: int) -> list[int]:
    return list(range(K)) if Kind(kind) is Kind.THRESHOLD else list(range(1, K + 1))


@dataclass
class StateCounts:
    """Class counts of the exploration chain after ``t`` steps.

    ``A`` has length K for Threshold (active with k active neighbours) and
    K + 1 for Tetris/SFAP (index 0 holds the frozen vertices). ``B`` is the
    Threshold blocked count and stays 0 for the other models.
    """

    A: list[int]
    B: int
    U: int

    @property
    def t(self) -> int:
        return sum(self.A) + self.B

    def copy(self) -> "StateCounts":
        return StateCounts(list(self.A), self.B, self.U)


@dataclass(frozen=True)
class StepOutcome:
    xi: tuple
    accepted_class: Optional[int]
    promotions: tuple = ()


@dataclass(frozen=True)
class JammingSummary:
    per_class_final: np.ndarray
    total_active: float


@dataclass
class Trajectory:
    """Scaled class counts ``A_k(floor(n t_j)) / n`` on a grid of times.

    ``alpha`` has one column per entry of ``spec.classes``; ``frozen`` holds the
    blocked (Threshold) or frozen (Tetris/SFAP) fraction.
    """

    spec: ModelSpec
    grid: np.ndarray
    alpha: np.ndarray
    frozen: np.ndarray
    final: Optional[JammingSummary] = field(default=None)

    def __post_init__(self):
        if self.final is None and len(self.grid) and self.grid[-1] == 1.0:
            self.final = jamming_summary(self)


def make_grid(points: int = DEFAULT_GRID) -> np.ndarray:
    if points < 2:
        raise ParameterError("a time grid needs at least 2 points")
    return np.linspace(0.0, 1.0, points)


def _grid_marks(n: int, grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0 or grid.min() < 0 or grid.max() > 1:
        raise ParameterError("grid times must lie in [0, 1]")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("grid times must be increasing")
    return np.floor(np.round(n * grid, 9)).astype(np.int64)


class _Recorder:
    """Captures scaled counts when the step counter hits a grid mark."""

    def __init__(self, spec: ModelSpec, grid):
        self.spec = spec
        self.grid = np.asarray(grid, dtype=np.float64)
        self.marks = _grid_marks(spec.n, self.grid).tolist()
        self.rows: list[list[int]] = []
        self.frozen: list[int] = []
        self._j = 0

    def record(self, step: int, counts: StateCounts) -> None:
        while self._j < len(self.marks) and self.marks[self._j] == step:
            if self.spec.kind is Kind.THRESHOLD:
                self.rows.append(list(counts.A))
                self.frozen.append(counts.B)
            else:
                self.rows.append(list(counts.A[1:]))
                self.frozen.append(counts.A[0])
            self._j += 1

    def trajectory(self) -> Trajectory:
        n = self.spec.n
        alpha = np.array(self.rows, dtype=np.float64).reshape(len(self.rows), self.spec.K) / n
        return Trajectory(self.spec, self.grid[:len(self.rows)], alpha,
                          np.array(self.frozen, dtype=np.float64) / n)


def _empty_counts(spec: ModelSpec) -> StateCounts:
    size = spec.K if spec.kind is Kind.THRESHOLD else spec.K + 1
    return StateCounts([0] * size, 0, spec.n)


def _check_graph(graph: GraphInstance, order: VertexOrder, spec: ModelSpec) -> None:
    if graph.n != spec.n or len(order) != spec.n:
        raise ParameterError(f"graph/order size ({graph.n}, {len(order)}) does not match n={spec.n}")
    if graph.c != spec.c:
        raise ParameterError(f"graph was sampled with c={graph.c}, spec has c={spec.c}")


# ---------------------------------------------------------------------------
# direct process on an explicit graph
# ---------------------------------------------------------------------------

def run_direct(graph: GraphInstance, order: VertexOrder, spec: ModelSpec, grid=None):
    """Run the model on ``graph`` selecting vertices in ``order``.

    Returns ``(labels, trajectory)``.
    """
    _check_graph(graph, order, spec)
    grid = make_grid() if grid is None else grid
    rec = _Recorder(spec, grid)
    counts = _empty_counts(spec)
    rec.record(0, counts)
    K = spec.K
    n = spec.n

    if spec.kind is Kind.THRESHOLD:
        labels = np.full(n, UNEXPLORED, dtype=np.int64)
        for t, v in enumerate(order.order.tolist(), start=1):
            nb = graph.neighbors(v)
            act = nb[labels[nb] >= 0]
            if len(act) < K and (len(act) == 0 or labels[act].max() < K - 1):
                for k in labels[act].tolist():
                    counts.A[k] -= 1
                    counts.A[k + 1] += 1
                labels[act] += 1
                labels[v] = len(act)
                counts.A[len(act)] += 1
            else:
                labels[v] = BLOCKED
                counts.B += 1
            counts.U -= 1
            rec.record(t, counts)
    else:
        labels = np.zeros(n, dtype=np.int64)
        for t, v in enumerate(order.order.tolist(), start=1):
            nb_labels = labels[graph.neighbors(v)]
            if spec.kind is Kind.TETRIS:
                top = int(nb_labels.max()) if len(nb_labels) else 0
                h = top + 1 if top < K else 0
            else:
                used = set(nb_labels.tolist())
                h = next((k for k in range(1, K + 1) if k not in used), 0)
            labels[v] = h
            counts.A[h] += 1
            counts.U -= 1
            rec.record(t, counts)
    return labels, rec.trajectory()


# ---------------------------------------------------------------------------
# exploration algorithm, coupled to the graph's edge keys
# ---------------------------------------------------------------------------

def run_explore_coupled(graph: GraphInstance, order: VertexOrder, spec: ModelSpec, grid=None,
                        base_seed: Optional[int] = None, replication: Optional[int] = None,
                        verify_graph: bool = True):
    """Exploration algorithm revealing edge {v, u} as ``uniform01(edge key) < p``.

    The new vertex is paired with every previously selected vertex (active,
    blocked and frozen alike), so the revealed graph is the whole graph; with
    ``verify_graph`` it is compared against ``graph`` at the end. Seeds default
    to those the graph was sampled with.
    """
    _check_graph(graph, order, spec)
    if not graph.exact_pairs:
        raise ParameterError("graph was not sampled pair-by-pair; it cannot be coupled")
    bs = graph.base_seed if base_seed is None else base_seed
    rep = graph.replication if replication is None else replication
    grid = make_grid() if grid is None else grid
    rec = _Recorder(spec, grid)
    counts = _empty_counts(spec)
    rec.record(0, counts)
    K = spec.K
    seq = order.order
    cls = np.full(spec.n, UNEXPLORED, dtype=np.int64)
    found = []

    for t in range(spec.n):
        v = int(seq[t])
        prev = seq[:t]
        paired = prev[edge_flags(graph, v, prev, bs, rep)] if t else prev
        if len(paired):
            found.append(np.column_stack([np.minimum(paired, v), np.maximum(paired, v)]))

        if spec.kind is Kind.THRESHOLD:
            to_active = paired[cls[paired] >= 0]
            ks = cls[to_active]
            r = len(to_active)
            if r < K and (r == 0 or ks.max() < K - 1):
                for k in ks.tolist():
                    counts.A[k] -= 1
                    counts.A[k + 1] += 1
                cls[to_active] += 1
                cls[v] = r
                counts.A[r] += 1
            else:
                cls[v] = BLOCKED
                counts.B += 1
        elif spec.kind is Kind.TETRIS:
            ks = cls[paired]
            top = int(ks.max()) if len(ks) else 0
            cls[v] = top + 1 if top <= K - 1 else 0
            counts.A[cls[v]] += 1
        else:
            taken = set(cls[paired].tolist())
            taken.discard(0)
            cls[v] = next((k for k in range(1, K + 1) if k not in taken), 0)
            counts.A[cls[v]] += 1
        counts.U -= 1
        rec.record(t + 1, counts)

    if verify_graph:
        revealed = (np.concatenate(found) if found else np.empty((0, 2), dtype=np.int64))
        revealed = revealed[np.lexsort((revealed[:, 1], revealed[:, 0]))]
        expected = graph.edges()
        if revealed.shape != expected.shape or not np.array_equal(revealed, expected):
            raise CouplingError(
                f"revealed {len(revealed)} edges, graph has {len(expected)}: "
                "seeds do not match the graph's edge keys")
    return cls, rec.trajectory()


# ---------------------------------------------------------------------------
# counts-only exploration
# ---------------------------------------------------------------------------

def _binom_capped(u: float, A: int, p: float, cap: int) -> int:
    """min(X, cap) for X ~ Bin(A, p) by inversion of the uniform ``u``."""
    if A == 0 or p == 0.0 or cap == 0:
        return 0
    if p == 1.0:
        return min(A, cap)
    pmf = (1.0 - p) ** A
    cdf = pmf
    ratio = p / (1.0 - p)
    k = 0
    while u >= cdf and k < cap:
        if k == A:
            return k
        pmf *= (A - k) / (k + 1) * ratio
        k += 1
        cdf += pmf
    return k


def _has_edge(u: float, A: int, q: float) -> bool:
    """Whether Bin(A, 1 - q) > 0, using the same inversion as ``_binom_capped``."""
    return A > 0 and u >= q ** A


def explore_step(kind, K: int, counts: StateCounts, p: float, u: Sequence[float]) -> StepOutcome:
    """Advance ``counts`` by one exploration step in place.

    ``u[k]`` is the uniform behind the number of edges to class k.
    """
    kind = Kind(kind)
    q = 1.0 - p
    A = counts.A
    counts.U -= 1
    if kind is Kind.THRESHOLD:
        if _has_edge(u[K - 1], A[K - 1], q):
            counts.B += 1
            return StepOutcome(xi=(), accepted_class=None)
        xi = []
        total = 0
        for k in range(K - 1):
            x = _binom_capped(u[k], A[k], p, K - total)
            xi.append(x)
            total += x
            if total > K - 1:
                counts.B += 1
                return StepOutcome(xi=tuple(xi), accepted_class=None)
        for k in range(K - 2, -1, -1):
            A[k] -= xi[k]
            A[k + 1] += xi[k]
        A[total] += 1
        return StepOutcome(xi=tuple(xi) + (0,), accepted_class=total, promotions=tuple(xi))
    if kind is Kind.TETRIS:
        top = 0
        for k in range(K, 0, -1):
            if _has_edge(u[k], A[k], q):
                top = k
                break
        h = top + 1 if top <= K - 1 else 0
        A[h] += 1
        return StepOutcome(xi=(top,), accepted_class=h or None)
    for k in range(1, K + 1):
        if not _has_edge(u[k], A[k], q):
            A[k] += 1
            return StepOutcome(xi=(k,), accepted_class=k)
    A[0] += 1
    return StepOutcome(xi=(), accepted_class=None)


def step_uniforms(spec: ModelSpec, base_seed: int, replication: int) -> np.ndarray:
    """(n, classes) array of keyed uniforms driving the counts chain."""
    width = spec.K if spec.kind is Kind.THRESHOLD else spec.K + 1
    steps = np.arange(spec.n)[:, None]
    cols = np.arange(width)[None, :]
    return uniform01_array(base_seed, replication, Purpose.BINOMIAL_DRAW, steps, cols)


def run_explore_counts(spec: ModelSpec, base_seed: int = 0, replication: int = 0, grid=None,
                       trace: Optional[list] = None) -> Trajectory:
    """Simulate the class-count Markov chain for n steps.

    If ``trace`` is a list, a copy of the counts after every step is appended.
    """
    grid = make_grid() if grid is None else grid
    rec = _Recorder(spec, grid)
    counts = _empty_counts(spec)
    rec.record(0, counts)
    p = spec.p
    U = step_uniforms(spec, base_seed, replication).tolist()
    for t in range(spec.n):
        explore_step(spec.kind, spec.K, counts, p, U[t])
        rec.record(t + 1, counts)
        if trace is not None:
            trace.append(counts.copy())
    return rec.trajectory()


# ---------------------------------------------------------------------------
# summaries, checks and dumps
# ---------------------------------------------------------------------------

def jamming_summary(traj: Trajectory) -> JammingSummary:
    if len(traj.grid) == 0 or traj.grid[-1] != 1.0 or len(traj.alpha) != len(traj.grid):
        raise StateError("trajectory does not reach t = 1")
    final = np.array(traj.alpha[-1], dtype=np.float64)
    return JammingSummary(per_class_final=final, total_active=float(final.sum()))


def check_threshold_maximal(graph: GraphInstance, labels, K: int) -> bool:
    """Active set is a maximal K-independent set and labels count active neighbours."""
    active = np.asarray(labels) >= 0
    deg = np.array([active[graph.neighbors(v)].sum() for v in range(graph.n)])
    if np.any(deg[active] >= K) or np.any(np.asarray(labels)[active] != deg[active]):
        return False
    for v in np.flatnonzero(~active):
        nb_active = graph.neighbors(v)[active[graph.neighbors(v)]]
        if deg[v] < K and not np.any(deg[nb_active] + 1 >= K):
            return False
    return True


def check_sfap_assignment(graph: GraphInstance, labels, K: int) -> bool:
    """No conflicts on nonzero frequencies; each frozen vertex sees all K frequencies."""
    labels = np.asarray(labels)
    for v in range(graph.n):
        seen = set(labels[graph.neighbors(v)].tolist()) - {0}
        if labels[v] != 0 and labels[v] in seen:
            return False
        if labels[v] == 0 and seen != set(range(1, K + 1)):
            return False
    return True


def check_tetris_replay(graph: GraphInstance, order: VertexOrder, labels, K: int) -> bool:
    """Replay ``order`` and confirm each label from the heights visible at its selection."""
    labels = np.asarray(labels)
    rank = np.empty(graph.n, dtype=np.int64)
    rank[order.order] = np.arange(graph.n)
    for v in range(graph.n):
        nb = graph.neighbors(v)
        earlier = labels[nb[rank[nb] < rank[v]]]
        top = int(earlier.max()) if len(earlier) else 0
        if labels[v] == 0:
            if top != K:
                return False
        elif labels[v] != top + 1:
            return False
    return True


def format_label(kind, label: int) -> str:
    if Kind(kind) is Kind.THRESHOLD:
        return "blocked" if label == BLOCKED else f"active_{label}"
    return str(label)


def write_labels(labels, kind, path) -> None:
    """``vertex label`` per line, 1-based vertex ids."""
    lines = [f"{v + 1} {format_label(kind, lab)}\n" for v, lab in enumerate(np.asarray(labels).tolist())]
    Path(path).write_text("".join(lines))


def read_labels(path, kind) -> np.ndarray:
    out = []
    for line in Path(path).read_text().splitlines():
        _, lab = line.split()
        if Kind(kind) is Kind.THRESHOLD:
            out.append(BLOCKED if lab == "blocked" else int(lab.removeprefix("active_")))
        else:
            out.append(int(lab))
    return np.array(out, dtype=np.int64)
