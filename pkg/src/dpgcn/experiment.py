"""Key-value config files and the declarative experiment runner.

A config file holds one ``key = value`` pair per line; ``#`` starts a comment.
Recognized keys and their defaults are listed in :data:`DEFAULTS`.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

from dpgcn.gcn import ACTIVATIONS, GcnModel, gcn_forward
from dpgcn.graph import SbmParams, generate_sbm, read_edge_list, read_features, sbm_features
from dpgcn.mechanism import MechanismConfig, run_mechanism
from dpgcn.spectral import spectral_norm
from dpgcn.theory import BoundInputs, theory_report
from dpgcn.verify import verify_bernstein, verify_theorem1, verify_theorem2, write_trials_csv


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


DEFAULTS = {
    "graph": None,
    "features": None,
    "n": 20,
    "p_in": 0.5,
    "p_out": 0.05,
    "graph_seed": 0,
    "feature_noise": 0.3,
    "feature_seed": 1,
    "h0": 1.0,
    "h1": -0.05,
    "activation": "tanh",
    "tau": 0.0,
    "eps": 1.0,
    "delta": 0.01,
    "ps": 0.8,
    "m": "auto",
    "m_cap": 100_000,
    "seed": 0,
    "eta": 0.25,
    "trials": 100,
    "repeats": 20,
    "verify": "theorem1",
    "vote": "vector",
    "workers": 1,
}

_INT = {"n", "graph_seed", "feature_seed", "seed", "trials", "repeats", "workers", "m_cap"}
_FLOAT = {"p_in", "p_out", "feature_noise", "h0", "h1", "tau", "eps", "delta", "ps", "eta"}
VERIFY_KINDS = ("bernstein", "theorem1", "theorem2")


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value.strip("\"'")
    return out


def validate(raw: dict) -> dict:
    """Merges ``raw`` over the defaults and type-checks every field."""
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(key, "unknown key")
    cfg = dict(DEFAULTS)
    for key, value in raw.items():
        if value is None:
            continue
        try:
            if key in _INT:
                value = int(value)
            elif key in _FLOAT:
                value = float(value)
                if not math.isfinite(value):
                    raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(key, f"invalid value {value!r}") from None
        cfg[key] = value

    if not cfg["eps"] > 0:
        raise ConfigError("eps", "must be positive")
    if not 0 < cfg["delta"] < 1:
        raise ConfigError("delta", f"must lie in (0, 1), got {cfg['delta']}")
    if not 0 < cfg["ps"] <= 1:
        raise ConfigError("ps", f"must lie in (0, 1], got {cfg['ps']}")
    if not 0 < cfg["eta"] < 1:
        raise ConfigError("eta", f"must lie in (0, 1), got {cfg['eta']}")
    if cfg["activation"] not in ACTIVATIONS:
        raise ConfigError("activation", f"must be one of {sorted(ACTIVATIONS)}")
    if str(cfg["m"]).lower() == "auto":
        cfg["m"] = None
    else:
        try:
            cfg["m"] = int(cfg["m"])
        except ValueError:
            raise ConfigError("m", f"must be a positive integer or 'auto', got {cfg['m']!r}") from None
        if cfg["m"] < 1:
            raise ConfigError("m", "must be at least 1")
    for key in ("trials", "repeats", "workers", "m_cap"):
        if cfg[key] < 1:
            raise ConfigError(key, "must be at least 1")
    if cfg["n"] < 2 or cfg["n"] % 2:
        raise ConfigError("n", "SBM node count must be even and at least 2")
    if not 0 <= cfg["p_out"] <= cfg["p_in"] <= 1:
        raise ConfigError("p_in", "need 0 <= p_out <= p_in <= 1")
    kinds = [k.strip() for k in str(cfg["verify"]).split(",") if k.strip()]
    for k in kinds:
        if k not in VERIFY_KINDS:
            raise ConfigError("verify", f"unknown check {k!r}; choose from {VERIFY_KINDS}")
    cfg["verify"] = kinds
    if cfg["vote"] not in ("vector", "node"):
        raise ConfigError("vote", "must be 'vector' or 'node'")
    return cfg


def load_config(path: str | os.PathLike) -> dict:
    return validate(parse_kv(Path(path).read_text()))


def build_inputs(cfg: dict):
    """Graph, unit-norm features, model and mechanism config described by ``cfg``."""
    if cfg["graph"]:
        g = read_edge_list(cfg["graph"])
        if not cfg["features"]:
            raise ConfigError("features", "required when 'graph' is given")
        x = read_features(cfg["features"], g.n)
    else:
        g, planted = generate_sbm(SbmParams(cfg["n"], cfg["p_in"], cfg["p_out"]), cfg["graph_seed"])
        x = (read_features(cfg["features"], g.n) if cfg["features"]
             else sbm_features(planted, cfg["feature_noise"], cfg["feature_seed"]))
    model = GcnModel(h0=cfg["h0"], h1=cfg["h1"], activation=cfg["activation"], tau=cfg["tau"])
    mech = MechanismConfig(epsilon=cfg["eps"], delta=cfg["delta"], p_s=cfg["ps"], m=cfg["m"],
                           seed=cfg["seed"], vote=cfg["vote"], workers=cfg["workers"],
                           m_cap=cfg["m_cap"])
    return g, x, model, mech


def dump_json(obj, path: str | os.PathLike | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def run_experiment(config_path: str | os.PathLike, out_dir: str | os.PathLike) -> dict:
    """Generates inputs, evaluates the theory, runs the mechanism and requested checks.

    Writes ``trials.csv`` (one row per verification trial) and
    ``summary.json`` into ``out_dir`` and returns the summary.
    """
    cfg = load_config(config_path)
    g, x, model, mech = build_inputs(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    forward = gcn_forward(g, x, model)
    summary = {"config": {k: v for k, v in cfg.items()}, "n": g.n, "num_edges": g.num_edges,
               "gamma_min": forward.gamma_min,
               "lap_norm": spectral_norm(g.laplacian()).value}
    if forward.gamma_min > 0:
        inputs = BoundInputs.from_model(g, model, forward)
        summary["theory"] = theory_report(inputs, mech.epsilon, mech.delta, cfg["eta"]).to_dict()
    summary["mechanism"] = run_mechanism(g, x, model, mech).to_dict()

    reports = []
    for kind in cfg["verify"]:
        if kind == "bernstein":
            reports.append(verify_bernstein(g, mech.p_s, cfg["trials"], cfg["eta"], cfg["seed"]))
        elif kind == "theorem1":
            reports.append(verify_theorem1(g, x, model, mech.p_s, cfg["eta"], cfg["trials"],
                                           cfg["seed"]))
        else:
            reports.append(verify_theorem2(g, x, model, mech, cfg["eta"], cfg["repeats"],
                                           cfg["seed"]))
    summary["verification"] = [r.to_dict() for r in reports]
    write_trials_csv(reports, out / "trials.csv")
    dump_json(summary, out / "summary.json")
    return summary
