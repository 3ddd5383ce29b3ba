"""Closed-form misclassification bounds, the feasible subsampling interval and m selection.

All logarithms are natural.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from dpgcn.gcn import ForwardResult, GcnModel
from dpgcn.graph import Graph
from dpgcn.spectral import spectral_norm

DEFAULT_M_CAP = 100_000


class InfeasibleError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class BoundInputs:
    n: int
    lap_norm: float
    c_sigma: float
    h1_abs: float
    gamma_min: float

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.lap_norm < 0 or self.c_sigma <= 0 or self.h1_abs < 0:
            raise ValueError("lap_norm, c_sigma and h1_abs must be nonnegative (c_sigma > 0)")
        if not self.gamma_min > 0:
            raise ValueError(f"gamma_min must be positive, got {self.gamma_min}")

    @property
    def prefactor(self) -> float:
        """``C |h1| / (sqrt(n) gamma_min)``."""
        return self.c_sigma * self.h1_abs / (math.sqrt(self.n) * self.gamma_min)

    @property
    def margin_budget(self) -> float:
        """``gamma_min / (sqrt(n) C |h1|)``; infinite when ``h1 = 0``."""
        if self.h1_abs == 0:
            return math.inf
        return self.gamma_min / (math.sqrt(self.n) * self.c_sigma * self.h1_abs)

    @classmethod
    def from_model(cls, g: Graph, model: GcnModel, forward: ForwardResult) -> BoundInputs:
        return cls(n=g.n, lap_norm=spectral_norm(g.laplacian()).value, c_sigma=model.c_sigma,
                   h1_abs=abs(model.h1), gamma_min=forward.gamma_min)


@dataclasses.dataclass(frozen=True)
class BernsteinParams:
    variance_proxy: float
    max_term: float = 2.0

    @classmethod
    def for_laplacian(cls, lap_norm: float, p_s: float) -> BernsteinParams:
        return cls(variance_proxy=2.0 * p_s * (1.0 - p_s) * lap_norm)


def _check_ps(p_s: float) -> None:
    if not 0.0 < p_s <= 1.0:
        raise ValueError(f"p_s must lie in (0, 1], got {p_s}")


def _check_eta(eta: float, name: str = "eta") -> None:
    if not 0.0 < eta < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {eta}")


def perturbation_bound(n: int, lap_norm: float, p_s: float, eta: float) -> float:
    """High-probability bound on ``||L_sub - L||_2``: bias plus matrix-Bernstein tail.

    ``(1 - p) ||L|| + sqrt(2 s2 log(2n/eta)) + (2/3) R log(2n/eta)`` with
    ``s2 = 2 p (1 - p) ||L||`` and ``R = 2``.
    """
    _check_ps(p_s)
    _check_eta(eta)
    log_term = math.log(2 * n / eta)
    bern = BernsteinParams.for_laplacian(lap_norm, p_s)
    return ((1.0 - p_s) * lap_norm
            + math.sqrt(2.0 * bern.variance_proxy * log_term)
            + (2.0 / 3.0) * bern.max_term * log_term)


def bound_f(inputs: BoundInputs, p_s: float, eta: float) -> float:
    """Misclassification bound for one subsampled graph, holding w.p. ``1 - eta``."""
    _check_ps(p_s)
    _check_eta(eta)
    log_term = math.log(2 * inputs.n / eta)
    bracket = ((1.0 - p_s) * inputs.lap_norm
               + math.sqrt(4.0 * p_s * (1.0 - p_s) * inputs.lap_norm * log_term)
               + (4.0 / 3.0) * log_term)
    return inputs.prefactor * bracket


def hoeffding_term(m: int, eta_vote: float) -> float:
    """``sqrt(log(2/eta_vote) / (2m))``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    _check_eta(eta_vote, "eta_vote")
    return math.sqrt(math.log(2.0 / eta_vote) / (2.0 * m))


def bound_aggregated(inputs: BoundInputs, p_s: float, eta: float, m: int,
                     eta_vote: float | None = None) -> float:
    """Bound for the majority-vote consensus: ``f / 4`` plus a Hoeffding deviation.

    The deviation constant is not pinned down by the underlying result; here it
    is ``sqrt(log(2/eta_vote) / (2m))`` with ``eta_vote`` defaulting to ``eta``,
    so the total failure probability is at most ``eta + eta_vote``.
    """
    eta_vote = eta if eta_vote is None else eta_vote
    return bound_f(inputs, p_s, eta) / 4.0 + hoeffding_term(m, eta_vote)


def ps_equation(inputs: BoundInputs, p) -> np.ndarray | float:
    """Left-hand side whose largest root on [0, 1] is the lower feasible endpoint.

    It is ``n``-scaled ``bound_f(p, 1/4)`` minus one, written in bracket form:
    ``(1-p)||L|| + sqrt(4 ||L|| log(8n) p(1-p)) + (4/3) log(8n) - gamma/(sqrt(n) C |h1|)``.
    """
    p = np.asarray(p, dtype=float)
    log8n = math.log(8 * inputs.n)
    q = np.clip(p * (1.0 - p), 0.0, None)
    out = ((1.0 - p) * inputs.lap_norm + np.sqrt(4.0 * inputs.lap_norm * log8n * q)
           + (4.0 / 3.0) * log8n - inputs.margin_budget)
    return float(out) if out.ndim == 0 else out


def solve_ps_star(inputs: BoundInputs, grid: int = 10_000) -> tuple[float, float | None]:
    """Largest root of :func:`ps_equation` on [0, 1].

    A sign scan over ``grid + 1`` equispaced points brackets the last sign
    change, then bisection runs until the bracket collapses to adjacent floats.

    Returns:
      ``(ps_star, residual)``. When the equation is negative on all of [0, 1]
      the utility condition never binds; ``(0.0, None)`` is returned since
      there is no root to report a residual for.

    Raises:
      InfeasibleError: if ``g(1) > 0``, i.e. the margin is too small even with
        no subsampling.
    """
    if ps_equation(inputs, 1.0) > 0:
        raise InfeasibleError("no feasible p_s: margin condition unsatisfiable")
    ps = np.linspace(0.0, 1.0, grid + 1)
    vals = ps_equation(inputs, ps)
    nonneg = np.flatnonzero(vals >= 0)
    if nonneg.size == 0:
        return 0.0, None
    k = int(nonneg[-1])
    if vals[k] == 0.0:
        return float(ps[k]), 0.0
    lo, hi = float(ps[k]), float(ps[k + 1])
    glo = float(vals[k])
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gmid = ps_equation(inputs, mid)
        if gmid >= 0:
            lo, glo = mid, gmid
        else:
            hi = mid
    # Report whichever bracket end is closer to zero.
    ghi = ps_equation(inputs, hi)
    root, res = (lo, abs(glo)) if abs(glo) <= abs(ghi) else (hi, abs(ghi))
    return root, res


def dp_upper_ps(epsilon: float, delta: float) -> float:
    """Unclipped upper subsampling endpoint ``eps / (32 log(1/delta))``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _check_eta(delta, "delta")
    return epsilon / (32.0 * math.log(1.0 / delta))


@dataclasses.dataclass(frozen=True)
class FeasibleRange:
    ps_star: float | None
    ps_upper: float
    feasible: bool
    residual: float | None
    clipped: bool = False
    reason: str = ""


def feasible_range(inputs: BoundInputs, epsilon: float, delta: float) -> FeasibleRange:
    """Interval ``(ps_star, ps_upper)`` of subsampling rates meeting both conditions."""
    raw_upper = dp_upper_ps(epsilon, delta)
    clipped = raw_upper > 1.0
    upper = min(raw_upper, 1.0)
    notes = ["ps_upper clipped to 1"] if clipped else []
    try:
        star, residual = solve_ps_star(inputs)
    except InfeasibleError as exc:
        return FeasibleRange(None, upper, False, None, clipped, "; ".join([str(exc)] + notes))
    feasible = star < upper
    reason = "" if feasible else "ps_star >= ps_upper: vacuous regime"
    return FeasibleRange(star, upper, feasible, residual, clipped,
                         "; ".join([r for r in [reason] if r] + notes))


def choose_m(n: int, delta: float, p_s: float, cap: int | None = DEFAULT_M_CAP) -> int:
    """Number of subsamples ``ceil(log(n/delta) / p_s^2)``, optionally capped.

    A relative slack of 1e-12 absorbs rounding before the ceiling so that exact
    integers such as ``log(e) / 1`` are not bumped up.
    """
    _check_ps(p_s)
    _check_eta(delta, "delta")
    raw = math.log(n / delta) / p_s ** 2
    m = max(1, math.ceil(raw * (1.0 - 1e-12)))
    if cap is not None and m > cap:
        warnings.warn(f"m={m} exceeds cap {cap}; the aggregated bound's guarantee weakens",
                      RuntimeWarning, stacklevel=2)
        m = cap
    return m


@dataclasses.dataclass(frozen=True)
class TheoryReport:
    inputs: BoundInputs
    epsilon: float
    delta: float
    eta: float
    ps_grid: tuple[float, ...]
    f_values: tuple[float, ...]
    range: FeasibleRange
    m: int | None

    def to_dict(self) -> dict:
        return {
            "inputs": dataclasses.asdict(self.inputs),
            "lap_norm": self.inputs.lap_norm,
            "gamma_min": self.inputs.gamma_min,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "eta": self.eta,
            "f_grid": [{"p_s": p, "f": f} for p, f in zip(self.ps_grid, self.f_values)],
            "ps_star": self.range.ps_star,
            "ps_star_residual": self.range.residual,
            "ps_upper": self.range.ps_upper,
            "ps_upper_clipped": self.range.clipped,
            "feasible": self.range.feasible,
            "reason": self.range.reason,
            "m": self.m,
        }


def theory_report(inputs: BoundInputs, epsilon: float, delta: float, eta: float = 0.25,
                  ps_grid=(0.1, 0.25, 0.5, 0.75, 1.0), m_cap: int | None = DEFAULT_M_CAP) -> TheoryReport:
    rng = feasible_range(inputs, epsilon, delta)
    m = None
    if rng.feasible:
        # Midpoint of the feasible interval.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m = choose_m(inputs.n, delta, 0.5 * (rng.ps_star + rng.ps_upper), cap=m_cap)
    grid = tuple(float(p) for p in ps_grid)
    return TheoryReport(inputs, epsilon, delta, eta, grid,
                        tuple(bound_f(inputs, p, eta) for p in grid), rng, m)
