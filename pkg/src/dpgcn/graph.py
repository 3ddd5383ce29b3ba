"""Undirected simple graphs, SBM generation, neighboring graphs and edge-list I/O."""

from __future__ import annotations

import dataclasses
import os
from typing import Iterable

import numpy as np


class GraphError(ValueError):
    """Raised for invalid graph construction or malformed graph files."""


@dataclasses.dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``.

    ``edges`` is an ``(E, 2)`` int array of sorted pairs ``u < v`` in
    lexicographic order. Use :func:`build_graph` rather than the constructor.
    """

    n: int
    edges: np.ndarray
    degrees: np.ndarray

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        if self.num_edges:
            u, v = self.edges[:, 0], self.edges[:, 1]
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def laplacian(self) -> np.ndarray:
        return laplacian(self)

    def has_edge(self, u: int, v: int) -> bool:
        u, v = min(u, v), max(u, v)
        idx = np.searchsorted(_edge_keys(self.edges, self.n), u * self.n + v)
        return bool(idx < self.num_edges and tuple(self.edges[idx]) == (u, v))

    def subgraph(self, keep: np.ndarray) -> Graph:
        """Graph on the same nodes keeping the edges where ``keep`` is true."""
        edges = self.edges[np.asarray(keep, dtype=bool)]
        return _from_sorted(self.n, edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, num_edges={self.num_edges})"


def _edge_keys(edges: np.ndarray, n: int) -> np.ndarray:
    return edges[:, 0].astype(np.int64) * n + edges[:, 1]


def _from_sorted(n: int, edges: np.ndarray) -> Graph:
    edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
    edges.setflags(write=False)
    degrees = np.bincount(edges.ravel(), minlength=n).astype(np.int64)
    degrees.setflags(write=False)
    return Graph(n=n, edges=edges, degrees=degrees)


def build_graph(n: int, edge_list: Iterable[tuple[int, int]]) -> Graph:
    """Builds a graph, collapsing orientations and duplicate pairs.

    Raises:
      GraphError: on a non-positive ``n``, an out-of-range node or a self-loop.
    """
    n = int(n)
    if n <= 0:
        raise GraphError(f"node count must be positive, got {n}")
    pairs = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        bad = (pairs < 0) | (pairs >= n)
        if bad.any():
            u, v = pairs[np.flatnonzero(bad.any(axis=1))[0]]
            raise GraphError(f"edge ({u}, {v}) has a node outside [0, {n})")
        loops = pairs[:, 0] == pairs[:, 1]
        if loops.any():
            u = pairs[np.flatnonzero(loops)[0], 0]
            raise GraphError(f"self-loop at node {u}")
    pairs = np.sort(pairs, axis=1)
    keys = np.unique(_edge_keys(pairs, n)) if pairs.size else np.empty(0, np.int64)
    edges = np.stack([keys // n, keys % n], axis=1)
    return _from_sorted(n, edges)


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``D - A`` as a dense float matrix."""
    return np.diag(g.degrees.astype(float)) - g.adjacency()


def laplacian_rank_one(g: Graph, weights: np.ndarray | None = None) -> np.ndarray:
    """Laplacian accumulated as ``sum_e w_e (e_u - e_v)(e_u - e_v)^T``.

    This is the per-edge rank-one construction; it is kept separate from
    :func:`laplacian` so the two can cross-check each other.
    """
    w = np.ones(g.num_edges) if weights is None else np.asarray(weights, dtype=float)
    out = np.zeros((g.n, g.n))
    for (u, v), wt in zip(g.edges, w):
        vec = np.zeros(g.n)
        vec[u], vec[v] = 1.0, -1.0
        out += wt * np.outer(vec, vec)
    return out


@dataclasses.dataclass(frozen=True)
class SbmParams:
    """Two equal communities; ``p_in`` within, ``p_out`` across."""

    n: int
    p_in: float
    p_out: float

    def __post_init__(self):
        if self.n <= 0 or self.n % 2:
            raise GraphError(f"SBM node count must be positive and even, got {self.n}")
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise GraphError(
                f"SBM needs 0 <= p_out <= p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}"
            )


def generate_sbm(params: SbmParams, seed) -> tuple[Graph, np.ndarray]:
    """Samples a two-block SBM and returns it with the planted +/-1 labels.

    Nodes ``0..n/2-1`` carry label +1, the rest -1. Every unordered pair is
    sampled exactly once, in ``np.triu_indices`` order.
    """
    n = params.n
    rng = np.random.default_rng(seed)
    labels = np.where(np.arange(n) < n // 2, 1, -1).astype(np.int8)
    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, params.p_in, params.p_out)
    keep = rng.random(iu.size) < prob
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    return _from_sorted(n, edges), labels


def neighboring_graph(g: Graph, u: int, v: int) -> Graph:
    """Toggles edge ``(u, v)``: removes it if present, adds it otherwise."""
    if u == v:
        raise GraphError(f"cannot toggle a self-loop at node {u}")
    if not (0 <= u < g.n and 0 <= v < g.n):
        raise GraphError(f"edge ({u}, {v}) has a node outside [0, {g.n})")
    u, v = min(u, v), max(u, v)
    keys = _edge_keys(g.edges, g.n)
    key = u * g.n + v
    if g.has_edge(u, v):
        keys = keys[keys != key]
    else:
        keys = np.sort(np.append(keys, key))
    return _from_sorted(g.n, np.stack([keys // g.n, keys % g.n], axis=1))


def normalize_features(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    if not np.isfinite(norm) or norm == 0.0:
        raise GraphError("feature vector must be finite and nonzero")
    return x / norm


def sbm_features(labels: np.ndarray, noise: float, seed) -> np.ndarray:
    """Unit-norm features correlated with planted labels: ``labels + noise * N(0, 1)``."""
    rng = np.random.default_rng(seed)
    x = labels.astype(float) + noise * rng.standard_normal(labels.shape[0])
    return normalize_features(x)


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def read_edge_list(path: str | os.PathLike) -> Graph:
    """Reads ``n`` on the first data line, then one ``u v`` pair per line."""
    n = None
    pairs = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = _strip(raw)
            if not line:
                continue
            tokens = line.split()
            try:
                values = [int(t) for t in tokens]
            except ValueError:
                raise GraphError(f"{path}:{lineno}: expected integers, got {line!r}") from None
            if n is None:
                if len(values) != 1:
                    raise GraphError(f"{path}:{lineno}: first line must hold the node count")
                n = values[0]
                continue
            if len(values) != 2:
                raise GraphError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            if not (0 <= values[0] < n and 0 <= values[1] < n) or values[0] == values[1]:
                raise GraphError(f"{path}:{lineno}: invalid edge {values[0]} {values[1]}")
            pairs.append(values)
    if n is None:
        raise GraphError(f"{path}: missing node count")
    return build_graph(n, pairs)


def write_edge_list(g: Graph, path: str | os.PathLike) -> None:
    lines = [str(g.n)] + [f"{u} {v}" for u, v in g.edges]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_features(path: str | os.PathLike, n: int | None = None) -> np.ndarray:
    """Reads one float per line and L2-normalizes the result."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = _strip(raw)
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise GraphError(f"{path}:{lineno}: expected a float, got {line!r}") from None
    if n is not None and len(values) != n:
        raise GraphError(f"{path}: expected {n} features, found {len(values)}")
    return normalize_features(values)


def write_features(x: np.ndarray, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(repr(float(v)) for v in x) + "\n")
