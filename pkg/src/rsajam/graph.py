"""Erdős–Rényi graphs G(n, c/n) and uniform vertex orders.

Vertices are 0-based internally; the edge-list dump is 1-based.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .randomness import Purpose, edge_uniforms, hash_keys, uniform01_array

DEFAULT_PAIR_CAP = 10_000
_ROW_BLOCK_PAIRS = 4_000_000


def edge_probability(n: int, c: float) -> float:
    return min(c / n, 1.0)


@dataclass(frozen=True)
class GraphInstance:
    """An explicit graph in CSR form.

    ``exact_pairs`` is True when every pair was decided by its own edge key,
    i.e. when a coupled exploration can reproduce the graph.
    """

    n: int
    c: float
    indptr: np.ndarray
    indices: np.ndarray
    base_seed: int = 0
    replication: int = 0
    exact_pairs: bool = True

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_edges(self) -> int:
        return int(self.indptr[-1]) // 2

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with i < j, sorted lexicographically."""
        src = np.repeat(np.arange(self.n), self.degrees())
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    @classmethod
    def from_edges(cls, n: int, edges, c: float = 0.0, **kw) -> "GraphInstance":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise ParameterError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ParameterError("self-loops are not allowed")
        both = np.concatenate([edges, edges[:, ::-1]])
        both = np.unique(both, axis=0)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n=n, c=c, indptr=indptr, indices=both[:, 1].copy(), **kw)


@dataclass(frozen=True)
class VertexOrder:
    order: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = len(self.order)
        if not np.array_equal(np.sort(self.order), np.arange(n)):
            raise ParameterError("vertex order is not a permutation of 0..n-1")

    def __len__(self):
        return len(self.order)


def _pairs_by_key(n, p, base_seed, replication):
    """Decide every pair i < j from its own edge key, a block of rows at a time."""
    rows = max(1, _ROW_BLOCK_PAIRS // max(n, 1))
    src, dst = [], []
    for r0 in range(0, n - 1, rows):
        r1 = min(n - 1, r0 + rows)
        i = np.arange(r0, r1)[:, None]
        j = np.arange(n)[None, :]
        mask = j > i
        ii, jj = np.broadcast_to(i, mask.shape)[mask], np.broadcast_to(j, mask.shape)[mask]
        u = uniform01_array(base_seed, replication, Purpose.EDGE_PAIR, ii, jj)
        keep = u < p
        src.append(ii[keep])
        dst.append(jj[keep])
    if not src:
        return np.empty((0, 2), dtype=np.int64)
    return np.column_stack([np.concatenate(src), np.concatenate(dst)])


def _pairs_by_skipping(n, p, base_seed, replication):
    # Geometric gaps over the linear index of pairs (i < j); same law, different keys.
    seed = int(hash_keys(base_seed, replication, Purpose.EDGE_PAIR, n, 0)[()])
    rng = np.random.Generator(np.random.Philox(key=seed))
    total = n * (n - 1) // 2
    picked = []
    pos = -1
    while True:
        gaps = rng.geometric(p, size=max(1024, int(1.2 * p * total / 8) + 1))
        idx = pos + np.cumsum(gaps)
        picked.append(idx[idx < total])
        if idx[-1] >= total:
            break
        pos = int(idx[-1])
    lin = np.concatenate(picked)
    # row i owns linear indices [i*n - i(i+1)/2, ...) for j in i+1..n-1
    starts = np.arange(n, dtype=np.int64) * n - np.arange(n, dtype=np.int64) * (np.arange(n) + 1) // 2
    i = np.searchsorted(starts, lin, side="right") - 1
    j = lin - starts[i] + i + 1
    return np.column_stack([i, j])


def sample_er_graph(n: int, c: float, base_seed: int = 0, replication: int = 0,
                    pair_cap: int = DEFAULT_PAIR_CAP) -> GraphInstance:
    """Sample G(n, min(c/n, 1)).

    For ``n <= pair_cap`` each unordered pair {i, j} is present iff
    ``uniform01(edge key(i, j)) < p``. Beyond the cap pairs are chosen by
    geometric skipping, which has the same distribution but cannot be coupled.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if c < 0:
        raise ParameterError("c must be non-negative")
    if c >= n and n > 1:
        warnings.warn(f"c={c} >= n={n}: edge probability clamped to 1", stacklevel=2)
    p = edge_probability(n, c)
    exact = n <= pair_cap
    if p == 0.0 or n == 1:
        edges = np.empty((0, 2), dtype=np.int64)
    elif exact:
        edges = _pairs_by_key(n, p, base_seed, replication)
    else:
        edges = _pairs_by_skipping(n, p, base_seed, replication)
    return GraphInstance.from_edges(n, edges, c=c, base_seed=base_seed,
                                    replication=replication, exact_pairs=exact)


def sample_permutation(n: int, base_seed: int = 0, replication: int = 0) -> VertexOrder:
    """Fisher–Yates shuffle driven by the permutation stream."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    steps = np.arange(n - 1, 0, -1)
    u = uniform01_array(base_seed, replication, Purpose.PERMUTATION, steps, n).tolist()
    perm = list(range(n))
    for i, ui in zip(steps.tolist(), u):
        j = int(ui * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return VertexOrder(np.array(perm, dtype=np.int64))


def edge_flags(graph: GraphInstance, v: int, others, base_seed=None, replication=None) -> np.ndarray:
    """Keyed edge indicators between v and each vertex in ``others``."""
    bs = graph.base_seed if base_seed is None else base_seed
    rep = graph.replication if replication is None else replication
    p = edge_probability(graph.n, graph.c)
    return edge_uniforms(bs, rep, v, others) < p


def write_edge_list(graph: GraphInstance, path) -> None:
    """One ``i j`` line per edge, 1-based, i < j, sorted."""
    lines = [f"{i + 1} {j + 1}\n" for i, j in graph.edges().tolist()]
    Path(path).write_text("".join(lines))


def read_edge_list(path, n: int, c: float = 0.0) -> GraphInstance:
    text = Path(path).read_text().split()
    edges = np.array(text, dtype=np.int64).reshape(-1, 2) - 1
    return GraphInstance.from_edges(n, edges, c=c, exact_pairs=False)
