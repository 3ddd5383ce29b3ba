"""Operator 2-norms of symmetric matrices (Laplacians and their perturbations)."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

DEFAULT_TOL = 1e-10
EXACT_MAX_N = 512


class SpectralNormError(RuntimeError):
    """Power iteration hit its iteration cap; ``estimate`` is the best value seen."""

    def __init__(self, message: str, estimate: float, iterations: int):
        super().__init__(message)
        self.estimate = estimate
        self.iterations = iterations


@dataclasses.dataclass(frozen=True)
class SpectralNormResult:
    value: float
    method: str
    iterations: int
    residual: float


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > 1e-10:
        raise ValueError("matrix is not symmetric within 1e-10")
    return m


def exact_norm(m: np.ndarray) -> float:
    """``max |lambda|`` from a dense symmetric eigensolve."""
    m = _check_symmetric(m)
    if m.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(m)
    return float(max(abs(w[0]), abs(w[-1])))


def power_iteration(m: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int | None = None,
                    seed: int = 0) -> SpectralNormResult:
    """Power iteration on ``M @ M`` so the sign of the dominant eigenvalue is irrelevant.

    Starts from the normalized all-ones vector with ``1e-3`` added to coordinate
    0, and restarts once from a seeded random vector if the Rayleigh quotient
    stalls (or sits at zero) while the residual is still above ``tol``.

    Converged when the residual of ``M^2 v = mu v`` is within ``tol``, or when
    the geometric extrapolation of the remaining increase of ``mu`` is below
    ``tol / 10`` (this handles near-degenerate top eigenvalues, where the
    vector converges far more slowly than ``mu``).
    """
    m = _check_symmetric(m)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = m.shape[0]
    if n == 0 or not np.any(m):
        return SpectralNormResult(0.0, "power-iteration", 0, 0.0)
    if max_iter is None:
        max_iter = int(10 * n * math.ceil(math.log(1.0 / tol)))

    v = np.ones(n) / math.sqrt(n)
    v[0] += 1e-3
    v /= np.linalg.norm(v)
    mu_prev = step_prev = None
    restarted = False
    best = 0.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = m @ (m @ v)
        mu = float(v @ w)  # Rayleigh quotient of M^2
        best = max(best, mu)
        residual = float(np.linalg.norm(w - mu * v))
        scale = max(1.0, mu)
        done = SpectralNormResult(math.sqrt(max(mu, 0.0)), "power-iteration", it, residual)
        # A start vector in the null space (an isolated node 0 for a Laplacian)
        # looks converged at zero.
        null_start = mu <= tol * tol
        if residual <= tol * scale and not null_start:
            return done
        step = None if mu_prev is None else abs(mu - mu_prev)
        if not restarted and (null_start or (step is not None and step <= (tol / 10) * scale)):
            restarted = True
            v = np.random.default_rng(seed).standard_normal(n)
            v /= np.linalg.norm(v)
            mu_prev = step_prev = None
            continue
        if step is not None and step_prev:
            ratio = step / step_prev
            if step == 0.0 or (ratio < 1.0 and step * ratio / (1.0 - ratio) <= (tol / 10) * scale):
                return done
        mu_prev, step_prev = mu, step
        v = w / np.linalg.norm(w)
    raise SpectralNormError(
        f"power iteration did not converge in {max_iter} iterations (residual {residual:.3e})",
        estimate=math.sqrt(best), iterations=max_iter)


def spectral_norm(m: np.ndarray, tol: float = DEFAULT_TOL, method: str | None = None) -> SpectralNormResult:
    """Operator 2-norm of a symmetric matrix.

    Args:
      m: symmetric matrix (checked to 1e-10).
      tol: relative accuracy target for the power-iteration path.
      method: ``"exact"`` or ``"power"``; by default exact for ``n <= 512``.
    """
    m = _check_symmetric(m)
    if method is None:
        method = "exact" if m.shape[0] <= EXACT_MAX_N else "power"
    if method == "exact":
        return SpectralNormResult(exact_norm(m), "exact-eigensolve", 0, 0.0)
    if method == "power":
        return power_iteration(m, tol=tol)
    raise ValueError(f"unknown method {method!r}")
