"""Empirical edge-DP audit on a pair of neighboring graphs.

Runs a mechanism many times on ``G`` and on ``G'`` (one edge toggled), tallies
the observed outputs (the refusal symbol plus every distinct released label
vector) and estimates the smallest epsilon consistent with the observed
frequencies. Because only observed events are considered, the estimate is a
lower bound on the true privacy loss.
"""

from __future__ import annotations

import dataclasses
import math
from collections import Counter
from typing import Callable, Hashable

import numpy as np
from scipy import stats

from dpgcn.gcn import GcnModel, gcn_forward
from dpgcn.graph import Graph, neighboring_graph
from dpgcn.mechanism import MechanismConfig, MechanismOutcome, SubsampleGcnMechanism

BOTTOM = "bottom"

# A factory takes a graph and returns a function from seed to an output key.
MechanismFactory = Callable[[Graph], Callable[[object], Hashable]]


def outcome_key(outcome: MechanismOutcome) -> Hashable:
    if not outcome.released:
        return BOTTOM
    return "".join("+" if v > 0 else "-" for v in outcome.labels)


def subsample_gcn_factory(x: np.ndarray, model: GcnModel, config: MechanismConfig,
                          fast_path: bool = True) -> MechanismFactory:
    def factory(graph: Graph):
        mech = SubsampleGcnMechanism(graph, x, model, config, fast_path=fast_path)
        return lambda seed: outcome_key(mech.run(seed))
    return factory


def constant_factory(value: Hashable = BOTTOM) -> MechanismFactory:
    """Ignores its input entirely."""
    return lambda graph: (lambda seed: value)


def raw_release_factory(x: np.ndarray, model: GcnModel) -> MechanismFactory:
    """Always releases the exact full-graph labels (no privacy)."""
    def factory(graph: Graph):
        labels = gcn_forward(graph, x, model).labels
        key = "".join("+" if v > 0 else "-" for v in labels)
        return lambda seed: key
    return factory


def clopper_pearson(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    alpha = 1.0 - confidence
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def _log_ratio(num: float, den: float, delta: float) -> float:
    """``log((num - delta) / den)`` clipped at 0; infinite when only the denominator vanishes."""
    excess = num - delta
    if excess <= 0:
        return 0.0
    if den <= 0:
        return math.inf
    return max(0.0, math.log(excess / den))


@dataclasses.dataclass
class AuditReport:
    pair: dict
    trials: int
    release_freq: dict
    eps_hat: float
    eps_lower: float
    eps_upper: float
    budget_eps: float
    budget_delta: float
    confidence: float
    worst_event: str | None
    events: dict

    @property
    def infinite(self) -> bool:
        return math.isinf(self.eps_hat)

    @property
    def point_within_budget(self) -> bool:
        return self.eps_hat <= self.budget_eps

    @property
    def passed(self) -> bool:
        """Upper confidence limit of the privacy-loss estimate is within budget."""
        return self.eps_upper <= self.budget_eps

    @property
    def violation_detected(self) -> bool:
        """Even the lower confidence limit exceeds the budget."""
        return self.eps_lower > self.budget_eps

    def to_dict(self) -> dict:
        def num(v):
            return "inf" if math.isinf(v) else v
        return {
            "pair": self.pair,
            "trials": self.trials,
            "release_freq": self.release_freq,
            "eps_hat": num(self.eps_hat),
            "eps_hat_infinite": self.infinite,
            "eps_lower": num(self.eps_lower),
            "eps_upper": num(self.eps_upper),
            "budget_eps": self.budget_eps,
            "budget_delta": self.budget_delta,
            "confidence": self.confidence,
            "worst_event": self.worst_event,
            "point_within_budget": self.point_within_budget,
            "passed": self.passed,
            "violation_detected": self.violation_detected,
            "events": self.events,
        }


def audit_dp(g: Graph, edge: tuple[int, int], trials: int, epsilon: float, delta: float,
             factory: MechanismFactory, seed: int = 0, confidence: float = 0.95) -> AuditReport:
    """Compares output frequencies of a mechanism on ``g`` and ``g`` with ``edge`` toggled.

    For each observed event ``E`` and both orderings ``(A, B)`` of the pair,
    the estimate is ``log((P_A(E) - delta) / P_B(E))`` clipped at zero. The
    lower/upper variants plug in Clopper-Pearson limits on the favourable and
    unfavourable side respectively.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    g2 = neighboring_graph(g, *edge)
    counts = []
    for side, graph in enumerate((g, g2)):
        run = factory(graph)
        counts.append(Counter(run([seed, side, t]) for t in range(trials)))

    events = sorted(set(counts[0]) | set(counts[1]), key=str)
    eps_hat = eps_lower = eps_upper = 0.0
    worst = None
    table = {}
    for ev in events:
        k = (counts[0][ev], counts[1][ev])
        freq = tuple(c / trials for c in k)
        ci = tuple(clopper_pearson(c, trials, confidence) for c in k)
        table[str(ev)] = {"count_g": k[0], "count_g_prime": k[1]}
        for a, b in ((0, 1), (1, 0)):
            point = _log_ratio(freq[a], freq[b], delta)
            if point > eps_hat:
                worst, eps_hat = str(ev), point
            eps_lower = max(eps_lower, _log_ratio(ci[a][0], ci[b][1], delta))
            eps_upper = max(eps_upper, _log_ratio(ci[a][1], ci[b][0], delta))

    release = {name: 1.0 - c[BOTTOM] / trials for name, c in zip(("g", "g_prime"), counts)}
    pair = {"n": g.n, "edge": [int(edge[0]), int(edge[1])],
            "edge_in_g": g.has_edge(*edge), "num_edges_g": g.num_edges,
            "num_edges_g_prime": g2.num_edges}
    return AuditReport(pair=pair, trials=trials, release_freq=release, eps_hat=eps_hat,
                       eps_lower=eps_lower, eps_upper=eps_upper, budget_eps=epsilon,
                       budget_delta=delta, confidence=confidence, worst_event=worst,
                       events=table)
