"""Monte Carlo checks of the perturbation and misclassification bounds.

Every check reports a violation frequency against its failure-probability
budget plus three binomial standard deviations. The flip-count inequality is
deterministic, so any violation of it raises :class:`InvariantViolation`.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
from typing import Iterable

import numpy as np

from dpgcn.gcn import DegenerateMarginError, GcnModel, flip_count_bound, gcn_forward, hamming
from dpgcn.graph import Graph, laplacian
from dpgcn.mechanism import (MechanismConfig, SubsampleGcnMechanism, noise_stream,
                             ptr_release, stability_score, subsample_stream)
from dpgcn.spectral import exact_norm, spectral_norm
from dpgcn.theory import BoundInputs, bound_aggregated, bound_f, perturbation_bound

CSV_SCHEMA = "schema=dpgcn-v1"

# Relative slack on the deterministic flip-count check, for eigensolver rounding.
FLIP_SLACK = 1e-9


class InvariantViolation(AssertionError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


@dataclasses.dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    delta_norm: float | None = None
    bernstein_rhs: float | None = None
    hamming: int | None = None
    lemma1_rhs: float | None = None
    rate: float | None = None
    bound: float | None = None
    violated: bool = False


CSV_FIELDS = ["kind"] + [f.name for f in dataclasses.fields(TrialRecord)]


def binomial_allowance(budget: float, trials: int, sigmas: float = 3.0) -> float:
    """``budget + sigmas * sqrt(budget (1 - budget) / trials)``."""
    budget = min(max(budget, 0.0), 1.0)
    return budget + sigmas * math.sqrt(budget * (1.0 - budget) / trials)


@dataclasses.dataclass
class VerificationReport:
    kind: str
    params: dict
    records: list[TrialRecord]
    budget: float
    lemma1_checked: int = 0
    lemma1_violations: int = 0
    variance_identity_diff: float | None = None
    extras: dict = dataclasses.field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.records)

    @property
    def violations(self) -> int:
        return sum(r.violated for r in self.records)

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.trials if self.trials else 0.0

    @property
    def allowed(self) -> float:
        return binomial_allowance(self.budget, self.trials) if self.trials else self.budget

    @property
    def passed(self) -> bool:
        return self.violation_fraction <= self.allowed and self.lemma1_violations == 0

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "params": self.params,
            "trials": self.trials,
            "violations": self.violations,
            "violation_fraction": self.violation_fraction,
            "budget": self.budget,
            "allowed": self.allowed,
            "passed": self.passed,
            "lemma1_checked": self.lemma1_checked,
            "lemma1_violations": self.lemma1_violations,
            "variance_identity_diff": self.variance_identity_diff,
        }
        out.update(self.extras)
        return out


def write_trials_csv(reports: Iterable[VerificationReport], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for report in reports:
            for rec in report.records:
                row = [report.kind]
                for value in dataclasses.astuple(rec):
                    row.append("" if value is None else (repr(value) if isinstance(value, float)
                                                         else int(value)))
                writer.writerow(row)


def expected_square_sum(g: Graph, p_s: float) -> np.ndarray:
    """``sum_e E[Y_e^2]`` with ``Y_e = (B_e - p) u_e u_e^T``, built edge by edge.

    Each term is ``p (1 - p) (u u^T)(u u^T)``, formed as an explicit matrix
    product rather than using ``u^T u = 2``.
    """
    out = np.zeros((g.n, g.n))
    var = p_s * (1.0 - p_s)
    for u, v in g.edges:
        vec = np.zeros(g.n)
        vec[u], vec[v] = 1.0, -1.0
        rank_one = np.outer(vec, vec)
        out += var * (rank_one @ rank_one)
    return out


def variance_identity_gap(g: Graph, p_s: float) -> float:
    """``| ||sum E[Y^2]||_2 - 2 p (1 - p) ||L||_2 |``; zero up to rounding."""
    lhs = exact_norm(expected_square_sum(g, p_s))
    rhs = 2.0 * p_s * (1.0 - p_s) * spectral_norm(laplacian(g)).value
    return abs(lhs - rhs)


def _sub_keep(g: Graph, p_s: float, seed, trial: int) -> np.ndarray:
    return subsample_stream(seed, trial).random(g.num_edges) < p_s


def verify_bernstein(g: Graph, p_s: float, trials: int, eta: float, seed=0) -> VerificationReport:
    """Frequency with which ``||L_sub - L||_2`` exceeds its high-probability bound."""
    if trials < 1:
        raise ValueError("trials must be positive")
    lap = laplacian(g)
    lap_norm = exact_norm(lap)
    rhs = perturbation_bound(g.n, lap_norm, p_s, eta)
    records = []
    for t in range(trials):
        sub = g.subgraph(_sub_keep(g, p_s, seed, t))
        dnorm = exact_norm(laplacian(sub) - lap)
        records.append(TrialRecord(trial_index=t, delta_norm=dnorm, bernstein_rhs=rhs,
                                   bound=rhs, violated=dnorm > rhs))
    return VerificationReport(
        kind="bernstein",
        params={"n": g.n, "num_edges": g.num_edges, "p_s": p_s, "eta": eta, "seed": _jsonable(seed),
                "lap_norm": lap_norm},
        records=records, budget=eta,
        variance_identity_diff=variance_identity_gap(g, p_s))


def verify_theorem1(g: Graph, x: np.ndarray, model: GcnModel, p_s: float, eta: float,
                    trials: int, seed=0) -> VerificationReport:
    """Single-subsample misclassification rate against ``bound_f(p_s, eta)``.

    Each trial also checks the deterministic flip-count inequality with the
    exact ``||L_sub - L||_2``.

    Raises:
      DegenerateMarginError: if the full-graph margin is zero.
      InvariantViolation: if any trial breaks the flip-count inequality.
    """
    full = gcn_forward(g, x, model)
    if full.degenerate:
        raise DegenerateMarginError("full-graph margin is zero")
    lap = laplacian(g)
    inputs = BoundInputs(n=g.n, lap_norm=exact_norm(lap), c_sigma=model.c_sigma,
                         h1_abs=abs(model.h1), gamma_min=full.gamma_min)
    f = bound_f(inputs, p_s, eta)
    records = []
    flip_bad = 0
    for t in range(trials):
        sub = g.subgraph(_sub_keep(g, p_s, seed, t))
        dnorm = exact_norm(laplacian(sub) - lap)
        labels = gcn_forward(sub, x, model).labels
        ham = hamming(full.labels, labels)
        rhs = flip_count_bound(full, model, dnorm)
        if ham > rhs * (1.0 + FLIP_SLACK):
            flip_bad += 1
        rate = ham / g.n
        records.append(TrialRecord(trial_index=t, delta_norm=dnorm,
                                   bernstein_rhs=perturbation_bound(g.n, inputs.lap_norm, p_s, eta),
                                   hamming=ham, lemma1_rhs=rhs, rate=rate, bound=f,
                                   violated=rate > f))
    report = VerificationReport(
        kind="theorem1",
        params={"n": g.n, "num_edges": g.num_edges, "p_s": p_s, "eta": eta, "seed": _jsonable(seed),
                "lap_norm": inputs.lap_norm, "gamma_min": full.gamma_min, "h0": model.h0,
                "h1": model.h1, "activation": model.activation, "tau": model.tau},
        records=records, budget=eta, lemma1_checked=trials, lemma1_violations=flip_bad,
        extras={"f": f})
    if flip_bad:
        raise InvariantViolation(f"flip-count inequality violated in {flip_bad} trials", report)
    return report


def verify_theorem2(g: Graph, x: np.ndarray, model: GcnModel, config: MechanismConfig,
                    eta: float, repeats: int, seed=0, eta_vote: float | None = None,
                    released_only: bool = False) -> VerificationReport:
    """Consensus misclassification rate against ``f/4`` plus the Hoeffding term.

    Uses the pre-release consensus; ``released_only=True`` keeps only repeats
    that pass the release test, which conditions (and biases) the estimate.
    """
    eta_vote = eta if eta_vote is None else eta_vote
    mech = SubsampleGcnMechanism(g, x, model, config, fast_path=False)
    if mech.full.degenerate:
        raise DegenerateMarginError("full-graph margin is zero")
    inputs = BoundInputs(n=g.n, lap_norm=exact_norm(laplacian(g)), c_sigma=model.c_sigma,
                         h1_abs=abs(model.h1), gamma_min=mech.full.gamma_min)
    bound = bound_aggregated(inputs, config.p_s, eta, mech.m, eta_vote)
    records = []
    skipped = 0
    for r in range(repeats):
        rep_seed = [*_seed_list(seed), r]
        tally = mech.tally(rep_seed)
        if released_only:
            d_hat = stability_score(tally, mech.m, config.p_s)
            out = ptr_release(d_hat, config, tally.consensus, noise_stream(rep_seed), tally, mech.m)
            if not out.released:
                skipped += 1
                continue
        ham = hamming(mech.reference_labels, tally.consensus)
        rate = ham / g.n
        records.append(TrialRecord(trial_index=r, hamming=ham, rate=rate, bound=bound,
                                   violated=rate > bound))
    return VerificationReport(
        kind="theorem2",
        params={"n": g.n, "p_s": config.p_s, "m": mech.m, "eta": eta, "eta_vote": eta_vote,
                "seed": _jsonable(seed), "released_only": released_only,
                "gamma_min": mech.full.gamma_min},
        records=records, budget=min(eta + eta_vote, 1.0),
        extras={"bound": bound, "skipped_unreleased": skipped})


def _seed_list(seed) -> list[int]:
    return [int(seed)] if np.isscalar(seed) else [int(s) for s in seed]


def _jsonable(seed):
    return int(seed) if np.isscalar(seed) else [int(s) for s in seed]
