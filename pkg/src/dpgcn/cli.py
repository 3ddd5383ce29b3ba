"""Command-line entry point: ``dpgcn {gen,run,bound,feasible,verify,audit,experiment}``.

Exit status is 0 on success, 1 on invalid input and 2 when a deterministic
invariant check fails.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
import warnings
from pathlib import Path

from dpgcn.audit import audit_dp, subsample_gcn_factory
from dpgcn.experiment import ConfigError, build_inputs, dump_json, parse_kv, run_experiment, validate
from dpgcn.gcn import gcn_forward
from dpgcn.graph import (GraphError, SbmParams, generate_sbm, sbm_features, write_edge_list,
                         write_features)
from dpgcn.mechanism import run_mechanism
from dpgcn.theory import BoundInputs, bound_f, theory_report
from dpgcn.verify import (CSV_SCHEMA, InvariantViolation, verify_bernstein, verify_theorem1,
                          verify_theorem2, write_trials_csv)

# CLI flag -> config key.
_FLAG_KEYS = {
    "graph": "graph", "features": "features", "n": "n", "p_in": "p_in", "p_out": "p_out",
    "graph_seed": "graph_seed", "noise": "feature_noise", "feature_seed": "feature_seed",
    "h0": "h0", "h1": "h1", "activation": "activation", "tau": "tau", "eps": "eps",
    "delta": "delta", "ps": "ps", "m": "m", "m_cap": "m_cap", "seed": "seed", "eta": "eta",
    "trials": "trials", "repeats": "repeats", "vote": "vote", "workers": "workers",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    g = p.add_argument_group("graph")
    g.add_argument("--graph", help="edge-list file (first line n, then 'u v' per line)")
    g.add_argument("--features", help="feature file, one float per line")
    g.add_argument("--n", type=int, help="SBM node count when no --graph is given")
    g.add_argument("--p-in", type=float)
    g.add_argument("--p-out", type=float)
    g.add_argument("--graph-seed", type=int)
    g.add_argument("--noise", type=float, help="feature noise level for SBM features")
    g.add_argument("--feature-seed", type=int)
    m = p.add_argument_group("model and mechanism")
    m.add_argument("--h0", type=float)
    m.add_argument("--h1", type=float)
    m.add_argument("--activation")
    m.add_argument("--tau", type=float)
    m.add_argument("--eps", type=float)
    m.add_argument("--delta", type=float)
    m.add_argument("--ps", type=float)
    m.add_argument("--m", help="subsample count or 'auto'")
    m.add_argument("--m-cap", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--eta", type=float)
    m.add_argument("--trials", type=int)
    m.add_argument("--repeats", type=int)
    m.add_argument("--vote", choices=("vector", "node"))
    m.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory (JSON goes to stdout when omitted)")


def _config(args) -> dict:
    raw = parse_kv(Path(args.config).read_text()) if args.config else {}
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            raw[key] = value
    return validate(raw)


def _emit(args, name: str, summary: dict, reports=None) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        dump_json(summary, out / f"{name}.json")
        if reports is not None:
            write_trials_csv(reports, out / f"{name}.csv")
    else:
        sys.stdout.write(dump_json(summary))


def cmd_gen(args) -> None:
    cfg = _config(args)
    g, planted = generate_sbm(SbmParams(cfg["n"], cfg["p_in"], cfg["p_out"]), cfg["graph_seed"])
    x = sbm_features(planted, cfg["feature_noise"], cfg["feature_seed"])
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(g, out / "graph.edges")
    write_features(x, out / "features.txt")
    dump_json({"n": g.n, "num_edges": g.num_edges, "p_in": cfg["p_in"], "p_out": cfg["p_out"],
               "graph_seed": cfg["graph_seed"], "feature_noise": cfg["feature_noise"],
               "feature_seed": cfg["feature_seed"], "graph": "graph.edges",
               "features": "features.txt"}, out / "gen.json")


def cmd_run(args) -> None:
    g, x, model, mech = build_inputs(_config(args))
    _emit(args, "run", run_mechanism(g, x, model, mech).to_dict())


def _bound_inputs(cfg):
    g, x, model, mech = build_inputs(cfg)
    forward = gcn_forward(g, x, model)
    if forward.degenerate:
        raise ValueError("full-graph margin is zero; bounds are undefined")
    return g, mech, BoundInputs.from_model(g, model, forward)


def cmd_bound(args) -> None:
    cfg = _config(args)
    _, _, inputs = _bound_inputs(cfg)
    grid = [float(p) for p in args.ps_grid.split(",")]
    rows = [(p, bound_f(inputs, p, cfg["eta"])) for p in grid]
    summary = {"inputs": dataclasses.asdict(inputs), "eta": cfg["eta"],
               "f_grid": [{"p_s": p, "f": f} for p, f in rows]}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "bound.csv", "w", newline="") as fh:
            fh.write(f"# {CSV_SCHEMA}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["p_s", "eta", "f"])
            for p, f in rows:
                writer.writerow([repr(p), repr(cfg["eta"]), repr(f)])
    _emit(args, "bound", summary)


def cmd_feasible(args) -> None:
    cfg = _config(args)
    _, mech, inputs = _bound_inputs(cfg)
    report = theory_report(inputs, mech.epsilon, mech.delta, cfg["eta"], m_cap=cfg["m_cap"])
    _emit(args, "feasible", report.to_dict())


def cmd_verify(args) -> None:
    cfg = _config(args)
    g, x, model, mech = build_inputs(cfg)
    if args.kind == "bernstein":
        report = verify_bernstein(g, mech.p_s, cfg["trials"], cfg["eta"], cfg["seed"])
    elif args.kind == "theorem1":
        report = verify_theorem1(g, x, model, mech.p_s, cfg["eta"], cfg["trials"], cfg["seed"])
    else:
        report = verify_theorem2(g, x, model, mech, cfg["eta"], cfg["repeats"], cfg["seed"],
                                 released_only=args.released_only)
    _emit(args, f"verify_{args.kind}", report.to_dict(), [report])
    if report.variance_identity_diff is not None and report.variance_identity_diff > 1e-10:
        raise InvariantViolation(f"variance identity gap {report.variance_identity_diff:.3e}")


def cmd_audit(args) -> None:
    cfg = _config(args)
    g, x, model, mech = build_inputs(cfg)
    factory = subsample_gcn_factory(x, model, mech)
    report = audit_dp(g, tuple(args.edge), cfg["trials"], mech.epsilon, mech.delta, factory,
                      seed=cfg["seed"])
    _emit(args, "audit", report.to_dict())


def cmd_experiment(args) -> None:
    run_experiment(args.experiment, args.out or ".")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpgcn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample an SBM graph and features")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run the private labeling mechanism once")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bound", help="evaluate the single-subsample bound on a p_s grid")
    _add_common(p)
    p.add_argument("--ps-grid", default="0.1,0.25,0.5,0.75,1.0")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("feasible", help="lower/upper subsampling endpoints and verdict")
    _add_common(p)
    p.set_defaults(func=cmd_feasible)

    p = sub.add_parser("verify", help="Monte Carlo check of a bound")
    p.add_argument("kind", choices=("bernstein", "theorem1", "theorem2"))
    p.add_argument("--released-only", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("audit", help="empirical edge-DP audit on a neighboring pair")
    p.add_argument("--edge", type=int, nargs=2, required=True, metavar=("U", "V"))
    _add_common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("experiment", help="run a declarative experiment file")
    p.add_argument("experiment")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except InvariantViolation as exc:
        print(f"dpgcn: invariant violated: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, GraphError, ValueError, OSError) as exc:
        print(f"dpgcn: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
