"""One-layer spectral GCN ``sigma((h0 I + h1 L) x)`` with thresholded labels."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from dpgcn.graph import Graph, laplacian


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


ACTIVATIONS = {
    "identity": (lambda z: z, 1.0),
    "tanh": (np.tanh, 1.0),
    "sigmoid": (_sigmoid, 0.25),
    "relu": (lambda z: np.maximum(z, 0.0), 1.0),
}


class DegenerateMarginError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class GcnModel:
    h0: float = 1.0
    h1: float = -0.05
    activation: str = "tanh"
    tau: float = 0.0

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"activation must be one of {sorted(ACTIVATIONS)}, got {self.activation!r}")

    @property
    def c_sigma(self) -> float:
        """Lipschitz constant of the activation."""
        return ACTIVATIONS[self.activation][1]

    def activate(self, z: np.ndarray) -> np.ndarray:
        return ACTIVATIONS[self.activation][0](z)


@dataclasses.dataclass(frozen=True, eq=False)
class ForwardResult:
    scores: np.ndarray
    labels: np.ndarray
    margins: np.ndarray
    gamma_min: float

    @property
    def degenerate(self) -> bool:
        """True when some score sits exactly on the threshold."""
        return self.gamma_min == 0.0


def threshold(scores: np.ndarray, tau: float) -> np.ndarray:
    """+1 where ``score > tau``, else -1 (ties go to -1)."""
    return np.where(scores > tau, 1, -1).astype(np.int8)


def _check_features(n: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"feature vector has shape {x.shape}, graph has {n} nodes")
    if abs(np.linalg.norm(x) - 1.0) > 1e-12:
        raise ValueError("feature vector must have unit L2 norm; call normalize_features")
    return x


def _finish(scores: np.ndarray, tau: float) -> ForwardResult:
    margins = np.abs(scores - tau)
    return ForwardResult(scores=scores, labels=threshold(scores, tau), margins=margins,
                         gamma_min=float(margins.min()) if margins.size else math.inf)


def gcn_forward(g: Graph, x: np.ndarray, model: GcnModel) -> ForwardResult:
    """Forward pass on the full graph.

    A zero minimum margin is not an error here; check ``result.degenerate``.
    """
    x = _check_features(g.n, x)
    z = model.h0 * x + model.h1 * (laplacian(g) @ x)
    return _finish(model.activate(z), model.tau)


def laplacian_action(g: Graph, x: np.ndarray, keep: np.ndarray | None = None) -> np.ndarray:
    """``L x`` computed edge by edge, optionally for a batch of edge masks.

    With ``keep`` of shape ``(k, E)`` the result has shape ``(k, n)``, row ``i``
    being the Laplacian action of the subgraph kept by ``keep[i]``.
    """
    u, v = g.edges[:, 0], g.edges[:, 1]
    diff = x[u] - x[v]
    if keep is None:
        out = np.zeros(g.n)
        np.add.at(out, u, diff)
        np.add.at(out, v, -diff)
        return out
    keep = np.atleast_2d(keep)
    incidence = np.zeros((g.num_edges, g.n))
    rows = np.arange(g.num_edges)
    incidence[rows, u] = diff
    incidence[rows, v] = -diff
    return keep.astype(float) @ incidence


def forward_subsampled(g: Graph, x: np.ndarray, model: GcnModel, keep: np.ndarray) -> np.ndarray:
    """Labels for a batch of subgraphs of ``g`` given as edge masks, shape ``(k, n)``."""
    z = model.h0 * x + model.h1 * laplacian_action(g, x, keep)
    return threshold(model.activate(z), model.tau)


def hamming(y, yhat) -> int:
    y, yhat = np.asarray(y), np.asarray(yhat)
    if y.shape != yhat.shape:
        raise ValueError(f"label vectors differ in length: {y.shape} vs {yhat.shape}")
    return int(np.count_nonzero(y != yhat))


def misclassification_rate(y, yhat) -> float:
    return hamming(y, yhat) / len(y)


def flip_count_bound(result: ForwardResult, model: GcnModel, delta_norm: float) -> float:
    """Upper bound ``sqrt(n) C |h1| ||dL|| / gamma_min`` on label flips."""
    if result.gamma_min <= 0.0:
        raise DegenerateMarginError("margin degenerate; flip-count bound vacuous")
    n = result.scores.shape[0]
    return math.sqrt(n) * model.c_sigma * abs(model.h1) * delta_norm / result.gamma_min
