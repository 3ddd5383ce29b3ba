"""Subsample-and-vote GCN labeling released through propose-test-release.

The mechanism draws ``m`` edge-subsampled copies of the graph, labels each with
the GCN, takes a whole-vector majority vote, scores how dominant the winning
vector is, and releases it only if a Laplace-noised score clears
``log(1/delta)/epsilon``.

Randomness: a root seed yields one independent stream per subsample index and
one stream for the Laplace noise (``SeedSequence`` spawn keys ``(1, i)`` and
``(0,)``), so results do not depend on how the subsamples are scheduled.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence, Union

import numpy as np

from dpgcn.gcn import GcnModel, forward_subsampled, gcn_forward
from dpgcn.graph import Graph
from dpgcn.spectral import spectral_norm
from dpgcn.theory import DEFAULT_M_CAP, choose_m

Seed = Union[int, Sequence[int]]

_CHUNK = 2048


@dataclasses.dataclass(frozen=True)
class MechanismConfig:
    """Privacy budget and sampling parameters. ``m=None`` means choose automatically."""

    epsilon: float
    delta: float
    p_s: float
    m: int | None = None
    seed: Seed = 0
    vote: str = "vector"
    workers: int = 1
    m_cap: int | None = DEFAULT_M_CAP

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.p_s <= 1:
            raise ValueError(f"p_s must lie in (0, 1], got {self.p_s}")
        if self.m is not None and self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if self.vote not in ("vector", "node"):
            raise ValueError(f"vote must be 'vector' or 'node', got {self.vote!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @property
    def threshold(self) -> float:
        return math.log(1.0 / self.delta) / self.epsilon

    def resolve_m(self, n: int) -> int:
        if self.m is not None:
            return self.m
        return choose_m(n, self.delta, self.p_s, cap=self.m_cap)


@dataclasses.dataclass(frozen=True, eq=False)
class VoteTally:
    consensus: np.ndarray
    c1: int
    c2: int
    distinct: int

    def to_dict(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "distinct": self.distinct,
                "consensus": self.consensus.tolist()}


@dataclasses.dataclass(frozen=True, eq=False)
class MechanismOutcome:
    released: bool
    labels: np.ndarray | None
    d_hat: float
    d_tilde: float
    threshold: float
    tally: VoteTally
    m: int
    certified: bool = False

    def to_dict(self) -> dict:
        return {
            "released": self.released,
            "labels": None if self.labels is None else self.labels.tolist(),
            "d_hat": self.d_hat,
            "d_tilde": self.d_tilde,
            "threshold": self.threshold,
            "m": self.m,
            "certified": self.certified,
            "tally": self.tally.to_dict(),
        }

    def same_as(self, other: MechanismOutcome) -> bool:
        return self.to_dict() == other.to_dict()


def _entropy(seed: Seed):
    return int(seed) if np.isscalar(seed) else [int(s) for s in seed]


def subsample_stream(seed: Seed, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed), spawn_key=(1, index)))


def noise_stream(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed), spawn_key=(0,)))


def _keep_mask(num_edges: int, p_s: float, stream: np.random.Generator) -> np.ndarray:
    return stream.random(num_edges) < p_s


def subsample_edges(g: Graph, p_s: float, stream: np.random.Generator) -> Graph:
    """Keeps each undirected edge independently with probability ``p_s``."""
    if not 0 <= p_s <= 1:
        raise ValueError(f"p_s must lie in [0, 1], got {p_s}")
    return g.subgraph(_keep_mask(g.num_edges, p_s, stream))


def subsample_masks(g: Graph, p_s: float, seed: Seed, start: int, stop: int) -> np.ndarray:
    """Edge masks for subsample indices ``start..stop-1``, shape ``(stop-start, E)``.

    Row ``i`` is exactly what :func:`subsample_edges` keeps with
    ``subsample_stream(seed, start + i)``.
    """
    out = np.empty((stop - start, g.num_edges), dtype=bool)
    for row, idx in enumerate(range(start, stop)):
        out[row] = _keep_mask(g.num_edges, p_s, subsample_stream(seed, idx))
    return out


def majority_vote(vectors, per_node: bool = False) -> VoteTally:
    """Groups identical label vectors and picks the most frequent one.

    Ties go to the lexicographically smallest vector with +1 ordered before -1.
    ``c2`` is the count of the runner-up vector (0 if all vectors agree).
    With ``per_node=True`` the consensus is instead the node-wise majority
    (ties to +1); the counts stay vector-level.
    """
    arr = np.asarray(vectors)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("majority_vote needs a non-empty list of equal-length label vectors")
    # 0 encodes +1 and 1 encodes -1, so unique()'s lexicographic order puts +1 first.
    bits = (arr < 0).astype(np.uint8)
    uniq, counts = np.unique(bits, axis=0, return_counts=True)
    order = np.argsort(-counts, kind="stable")
    c1 = int(counts[order[0]])
    c2 = int(counts[order[1]]) if len(order) > 1 else 0
    if per_node:
        consensus = np.where(arr.sum(axis=0) >= 0, 1, -1).astype(np.int8)
    else:
        consensus = (1 - 2 * uniq[order[0]].astype(np.int8)).astype(np.int8)
    return VoteTally(consensus=consensus, c1=c1, c2=c2, distinct=int(len(uniq)))


def stability_score(tally: VoteTally, m: int, p_s: float) -> float:
    """``(c1 - c2) / (4 m p_s) - 1``."""
    if p_s <= 0:
        raise ValueError("p_s must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    return (tally.c1 - tally.c2) / (4.0 * m * p_s) - 1.0


def laplace_sample(scale: float, stream: np.random.Generator) -> float:
    """One Laplace(0, scale) draw by inverse CDF."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = stream.random() - 0.5
    while u == -0.5:
        u = stream.random() - 0.5
    return -scale * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))


def laplace_samples(scale: float, size: int, stream: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`laplace_sample`; identical draws unless a resample is needed."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = stream.random(size) - 0.5
    bad = u == -0.5
    while bad.any():
        u[bad] = stream.random(int(bad.sum())) - 0.5
        bad = u == -0.5
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def ptr_release(d_hat: float, config: MechanismConfig, labels: np.ndarray,
                stream: np.random.Generator | None, tally: VoteTally | None = None,
                m: int | None = None, noise: float | None = None) -> MechanismOutcome:
    """Adds Laplace(1/epsilon) noise to ``d_hat`` and releases if it clears the threshold.

    ``noise`` overrides the random draw (tests use ``noise=0.0``).
    """
    if noise is None:
        noise = laplace_sample(1.0 / config.epsilon, stream)
    d_tilde = d_hat + noise
    released = bool(d_tilde > config.threshold)
    labels = np.asarray(labels, dtype=np.int8)
    if tally is None:
        tally = VoteTally(consensus=labels, c1=1, c2=0, distinct=1)
    return MechanismOutcome(released=released, labels=labels if released else None,
                            d_hat=float(d_hat), d_tilde=float(d_tilde),
                            threshold=config.threshold, tally=tally,
                            m=tally.c1 + tally.c2 if m is None else m)


class SubsampleGcnMechanism:
    """The full mechanism bound to one graph, feature vector and model.

    Precomputes the full-graph forward pass and ``||L||_2`` so repeated runs
    with different seeds (audits, repeated verification) stay cheap.

    When ``C |h1| ||L||_2 < gamma_min``, no subgraph can flip any label (the
    score perturbation at each node is at most ``C |h1| ||L_sub - L||_2 <=
    C |h1| ||L||_2``), so every subsample labels exactly as the full graph.
    With ``fast_path=True`` such runs skip the subsample forward passes; the
    noise stream is separate, so the outcome is bit-identical either way.
    """

    def __init__(self, g: Graph, x: np.ndarray, model: GcnModel, config: MechanismConfig,
                 fast_path: bool = True):
        self.g, self.model, self.config = g, model, config
        self.full = gcn_forward(g, x, model)
        self.x = np.asarray(x, dtype=float)
        self.m = config.resolve_m(g.n)
        if self.full.degenerate:
            warnings.warn("full-graph margin is zero; bounds are vacuous", RuntimeWarning,
                          stacklevel=2)
        lap_norm = spectral_norm(g.laplacian()).value
        slack = model.c_sigma * abs(model.h1) * lap_norm
        self.certified = bool(slack < self.full.gamma_min * (1.0 - 1e-9))
        self.fast_path = fast_path

    @property
    def reference_labels(self) -> np.ndarray:
        return self.full.labels

    def _labels_chunk(self, seed: Seed, start: int, stop: int) -> np.ndarray:
        keep = subsample_masks(self.g, self.config.p_s, seed, start, stop)
        return forward_subsampled(self.g, self.x, self.model, keep)

    def subsample_labels(self, seed: Seed) -> np.ndarray:
        """Per-subsample label vectors, shape ``(m, n)``."""
        bounds = [(s, min(s + _CHUNK, self.m)) for s in range(0, self.m, _CHUNK)]
        if self.config.workers > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(self.config.workers) as pool:
                parts = list(pool.map(lambda b: self._labels_chunk(seed, *b), bounds))
        else:
            parts = [self._labels_chunk(seed, *b) for b in bounds]
        return np.concatenate(parts, axis=0)

    def tally(self, seed: Seed) -> VoteTally:
        if self.fast_path and self.certified:
            return VoteTally(consensus=self.full.labels.copy(), c1=self.m, c2=0, distinct=1)
        return majority_vote(self.subsample_labels(seed), per_node=self.config.vote == "node")

    def run(self, seed: Seed | None = None, noise: float | None = None) -> MechanismOutcome:
        seed = self.config.seed if seed is None else seed
        tally = self.tally(seed)
        d_hat = stability_score(tally, self.m, self.config.p_s)
        out = ptr_release(d_hat, self.config, tally.consensus,
                          None if noise is not None else noise_stream(seed),
                          tally=tally, m=self.m, noise=noise)
        return dataclasses.replace(out, certified=self.certified)


def run_mechanism(g: Graph, x: np.ndarray, model: GcnModel, config: MechanismConfig,
                  fast_path: bool = True) -> MechanismOutcome:
    """Runs the mechanism once with ``config.seed``."""
    return SubsampleGcnMechanism(g, x, model, config, fast_path=fast_path).run()
