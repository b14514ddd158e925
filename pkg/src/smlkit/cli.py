"""Command-line interface.

Subcommands: ingest, sml, release, tradeoff, bounds, flow-debug.
All outputs embed the package version, a hash of the effective
configuration, and the seed, so runs are reproducible and auditable.
Errors are reported as structured JSON on stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from fractions import Fraction

from . import __version__
from .core import (
    CategoricalParam,
    ParameterSpace,
    PolicyMatrix,
    build_partition,
    fraction_secret,
)
from .flow import build_sml_network, min_cost_flow, to_dot
from .leakage import ldp_parameter, min_entropy_leakage, sandwich_bounds, sml
from .mechanisms import FractionQM, RRMechanism
from .tabular import (
    SecretSpec,
    ingest_csv,
    release_dataset,
    secret_fn,
    support_info,
    to_param,
)
from .tradeoff import (
    TabularScale,
    qm_decay_threshold,
    qm_mismatch_bounds,
    rr_mismatch_bounds,
    rr_robust_epsilon_cap,
    rr_robust_weight_cap,
    tradeoff_sweep,
)


class CliError(Exception):
    pass


def _manifest(args: argparse.Namespace) -> dict:
    config = {k: repr(v) for k, v in sorted(vars(args).items()) if k != "func"}
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()
    return {"version": __version__, "config_hash": digest[:16], "seed": args.seed}


def _emit(args: argparse.Namespace, payload: dict) -> None:
    payload = {**payload, "manifest": _manifest(args)}
    print(json.dumps(payload, indent=2))


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _partition_for(policy: PolicyMatrix, secret_obj: dict):
    if "classes" in secret_obj:
        index_classes = secret_obj["classes"]
        lookup = {}
        for rank, members in enumerate(index_classes):
            for i in members:
                lookup[i] = rank
        if sorted(lookup) != list(range(len(policy.inputs))):
            raise CliError("classes must cover every input index exactly once")

        def by_class(p):
            from .core import SecretValue

            rank = lookup[policy.input_index(p)]
            return SecretValue(rank, rank=rank + 1)

        return build_partition(policy.inputs, by_class)
    if secret_obj.get("kind") == "fraction":
        category = int(secret_obj["category"])
        tau = policy.inputs[0].tau
        return build_partition(policy.inputs, fraction_secret(category, tau))
    raise CliError("secret spec must give 'classes' or kind 'fraction'")


def cmd_ingest(args: argparse.Namespace) -> None:
    na = args.na.split(",") if args.na else []
    cols = args.columns.split(",") if args.columns else None
    ds = ingest_csv(args.csv, cols, na)
    true_feasible = estimated = None
    if args.true_feasible:
        true_feasible = [tuple(c) for c in _load_json(args.true_feasible)]
    if args.estimated:
        estimated = [tuple(c) for c in _load_json(args.estimated)]
    info = support_info(ds, true_feasible, estimated)
    categories, param = to_param(info, ds.n, args.tau)
    scale = info.scale(param.tau)
    _emit(args, {
        "n": ds.n,
        "dropped": ds.dropped,
        "columns": list(ds.columns),
        "scale": {"tau": scale.tau, "d0": scale.d0, "d1": scale.d1,
                  "dstar": scale.dstar, "s": scale.s},
        "categories": [list(c) for c in categories],
        "param": param.to_json(),
    })


def cmd_sml(args: argparse.Namespace) -> None:
    policy = PolicyMatrix.from_json(_load_json(args.policy))
    partition = _partition_for(policy, _load_json(args.secret))
    report = sml(policy, partition, method=args.method, cap=args.enum_cap,
                 base=args.log_base)
    payload = report.to_json()
    if args.bounds:
        lo, hi = sandwich_bounds(policy, partition, base=args.log_base)
        payload["sandwich"] = {
            "lower": lo,
            "upper": hi,
            "min_entropy_leakage": min_entropy_leakage(policy, args.log_base),
        }
    if args.ldp:
        payload["ldp_parameter"] = ldp_parameter(policy, partition)
    _emit(args, payload)


def _mechanism_for(obj: dict, categories, param: CategoricalParam):
    kind = obj.get("type")
    space = ParameterSpace(tuple(categories), param.tau)
    if kind == "rr":
        return RRMechanism(space, Fraction(obj["weight"]),
                           infinite=bool(obj.get("infinite", False)))
    if kind == "qm":
        target = tuple(obj["category"])
        if target not in categories:
            raise CliError(f"qm category {target!r} not in the combination universe")
        return FractionQM(space, list(categories).index(target), int(obj["interval"]))
    raise CliError(f"unknown mechanism type {kind!r}")


def cmd_release(args: argparse.Namespace) -> None:
    na = args.na.split(",") if args.na else []
    cols = args.columns.split(",") if args.columns else None
    ds = ingest_csv(args.csv, cols, na)
    info = support_info(ds)
    categories, param = to_param(info, ds.n)
    mech = _mechanism_for(_load_json(args.mechanism), categories, param)
    released = release_dataset(ds, mech, categories, param, args.seed)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(released.columns)
        writer.writerows(released.rows)
    _emit(args, {"out": args.out, "n": released.n})


SWEEP_COLUMNS = ["mechanism", "hyperparam", "privacy", "privacy_lo", "privacy_hi",
                 "distortion", "distortion_lo", "distortion_hi", "method"]


def cmd_tradeoff(args: argparse.Namespace) -> None:
    scale = TabularScale(tau=args.tau, d0=args.d0, d1=args.d1,
                         dstar=args.dstar, s=args.s)
    weights = [Fraction(w) for w in args.rr_weights.split(",")] if args.rr_weights else []
    intervals = [int(i) for i in args.qm_intervals.split(",")] if args.qm_intervals else []
    points = tradeoff_sweep(scale, weights, intervals, base=args.log_base,
                            jobs=args.jobs)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for p in points:
            writer.writerow(p.as_row())
        sys.stdout.write(buf.getvalue())
    else:
        _emit(args, {"points": [p.as_row() for p in points]})


def cmd_bounds(args: argparse.Namespace) -> None:
    scale = TabularScale(tau=args.tau, d0=args.d0, d1=args.d1,
                         dstar=args.dstar, s=args.s)
    payload: dict = {
        "scale": {"tau": scale.tau, "d0": scale.d0, "d1": scale.d1,
                  "dstar": scale.dstar, "s": scale.s},
        "rr_robust_weight_cap": str(1 + rr_robust_weight_cap(scale)),
        "rr_robust_epsilon_cap": rr_robust_epsilon_cap(scale),
    }
    if args.rr_weight:
        b = rr_mismatch_bounds(scale, Fraction(args.rr_weight), base=args.log_base)
        payload["rr"] = {
            "privacy_lower": b.privacy_lower, "privacy_upper": b.privacy_upper,
            "lower_branch": b.lower_branch,
            "distortion_lower": str(b.distortion_lower),
            "distortion_upper": str(b.distortion_upper),
        }
    if args.qm_interval:
        b = qm_mismatch_bounds(scale, args.qm_interval, base=args.log_base)
        payload["qm"] = {
            "privacy_lower": b.privacy_lower, "privacy_upper": b.privacy_upper,
            "lower_branch": b.lower_branch,
            "distortion_lower": str(b.distortion_lower),
            "distortion_upper": str(b.distortion_upper),
            "decay_threshold": qm_decay_threshold(scale, args.qm_interval),
        }
    _emit(args, payload)


def cmd_flow_debug(args: argparse.Namespace) -> None:
    policy = PolicyMatrix.from_json(_load_json(args.policy))
    partition = _partition_for(policy, _load_json(args.secret))
    net = build_sml_network(policy, partition)
    result = min_cost_flow(net)
    dot = to_dot(net, result)
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(dot)
    _emit(args, {
        "nodes": len(net.nodes),
        "arcs": len(net.arcs),
        "flow_value": result.value,
        "total_cost": str(result.total_cost),
        "raw_sum": str(-result.total_cost),
        "dot": args.dot or dot,
    })


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smlkit")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log-base", choices=["2", "e"], default="2")
    parser.add_argument("--enum-cap", type=int, default=10**6)
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--jobs", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a CSV and report its parameter encoding")
    p.add_argument("--csv", required=True)
    p.add_argument("--columns")
    p.add_argument("--na", help="comma-separated values treated as missing")
    p.add_argument("--tau", type=int)
    p.add_argument("--true-feasible", help="JSON list of feasible combinations")
    p.add_argument("--estimated", help="JSON list of estimated-feasible combinations")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sml", help="exact leakage of a policy matrix")
    p.add_argument("--policy", required=True)
    p.add_argument("--secret", required=True)
    p.add_argument("--method", choices=["auto", "brute", "flow"], default="auto")
    p.add_argument("--bounds", action="store_true")
    p.add_argument("--ldp", action="store_true")
    p.set_defaults(func=cmd_sml)

    p = sub.add_parser("release", help="release a perturbed dataset")
    p.add_argument("--csv", required=True)
    p.add_argument("--columns")
    p.add_argument("--na")
    p.add_argument("--mechanism", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_release)

    p = sub.add_parser("tradeoff", help="privacy-distortion sweep")
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--d0", type=int, required=True)
    p.add_argument("--d1", type=int, default=0)
    p.add_argument("--dstar", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--rr-weights", help="comma-separated exact weights e**eps")
    p.add_argument("--qm-intervals", help="comma-separated intervals")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("bounds", help="robustness caps and misestimation brackets")
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("--d0", type=int, required=True)
    p.add_argument("--d1", type=int, default=0)
    p.add_argument("--dstar", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--rr-weight")
    p.add_argument("--qm-interval", type=int)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("flow-debug", help="dump the leakage flow network")
    p.add_argument("--policy", required=True)
    p.add_argument("--secret", required=True)
    p.add_argument("--dot", help="write Graphviz output to this file")
    p.set_defaults(func=cmd_flow_debug)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # structured errors for scripting
        print(json.dumps({"error": {
            "type": type(exc).__name__,
            "message": str(exc),
        }}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
