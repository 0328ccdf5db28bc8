"""Batch command-line interface.

Exit codes: 0 clean, 1 errors found, 2 input or configuration failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from netlint import __version__
from netlint.bench import DETECTORS, bench, rows_to_csv
from netlint.detectors import (
    AttributeTable,
    detect_exhaustive,
    detect_near_nodes,
    detect_point_no_flow,
    detect_self_intersection,
    detect_spatialjoin,
    error_keys,
)
from netlint.errors import NetlintError
from netlint.generate import generate_network
from netlint.geometry import DEFAULT_QUANTUM
from netlint.io import (
    cross_check_table,
    emit_report,
    input_hash,
    parse_attribute_table,
    parse_geojson,
    serialize_geojson,
)
from netlint.network import RuleConfig, apply_direction_weights, build_network

EXIT_CLEAN, EXIT_ERRORS, EXIT_INPUT = 0, 1, 2


class InputFailure(Exception):
    """Raised for problems that should end the run with exit code 2."""


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputFailure(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Optional[str], data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _common(p: argparse.ArgumentParser, input_required: bool = True) -> None:
    p.add_argument("--input", required=input_required, help="GeoJSON FeatureCollection of LineStrings")
    p.add_argument("--quantum", type=float, default=DEFAULT_QUANTUM, help="coordinate grid for node identity")
    p.add_argument("--format", choices=("json", "geojson"), default="json")
    p.add_argument("--out", help="report path (stdout when omitted)")
    p.add_argument("--timing", action="store_true", help="record wall time in the provenance block")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netlint", description="Connection-error validation for hierarchical line networks.")
    parser.add_argument("--version", action="version", version=f"netlint {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check the category connection rules")
    _common(v)
    v.add_argument("--table", help="CSV attribute table id,start_node,end_node,weight")
    v.add_argument("--k", type=int, required=True, help="number of categories")
    rules = v.add_mutually_exclusive_group(required=True)
    rules.add_argument("--a", type=int, help="weights >= a follow rule 3, the rest rule 1")
    rules.add_argument("--rule3-weights", type=_ints, help="explicit comma-separated rule-3 weights")
    v.add_argument("--prohibit", type=_ints, help="prohibited weight pair w1,w2 (default 1,k)")
    v.add_argument("--detector", choices=("exhaustive", "spatialjoin", "both"), default="spatialjoin")
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("flow-check", help="find point-no-flow nodes of a directed network")
    _common(f)
    f.add_argument("--exempt-terminals", action="store_true", help="do not flag nodes with a single arc end")
    f.set_defaults(func=cmd_flow_check)

    s = sub.add_parser("self-intersect", help="find self-intersecting features")
    _common(s)
    s.add_argument("--mode", choices=("paper", "full"), default="paper")
    s.set_defaults(func=cmd_self_intersect)

    n = sub.add_parser("near-nodes", help="find distinct nodes closer than epsilon")
    _common(n)
    n.add_argument("--epsilon", type=float, required=True)
    n.set_defaults(func=cmd_near_nodes)

    g = sub.add_parser("gen", help="generate a synthetic network with injected defects")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--a", type=int, help="rule threshold (default k//2+1)")
    g.add_argument("--inject-rule1", type=float, default=0.0, metavar="RATE")
    g.add_argument("--inject-rule2", type=float, default=0.0, metavar="RATE")
    g.add_argument("--inject-rule3", type=float, default=0.0, metavar="RATE")
    g.add_argument("--out", required=True, help="GeoJSON output path")
    g.add_argument("--truth", help="ground-truth report path (default <out>.truth.json)")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bench", help="time the connection detectors over network sizes")
    b.add_argument("--sizes", type=_ints, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--detectors", default=",".join(DETECTORS), help=f"comma-separated subset of {','.join(DETECTORS)}")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="CSV output path (stdout when omitted)")
    b.set_defaults(func=cmd_bench)
    return parser


def _load(args):
    raw = _read(args.input)
    features = parse_geojson(raw)
    return raw, features


def _provenance(raw: bytes, tool: str, config: dict, started: Optional[float], args) -> dict:
    prov = {"input": {"path": Path(args.input).name, "hash": input_hash(raw)}, "detector": tool, "config": config}
    if args.timing and started is not None:
        prov["timing_ms"] = round((time.perf_counter() - started) * 1000, 3)
    return prov


def _finish(errors, args, net, prov) -> int:
    _write(args.out, emit_report(errors, args.format, network=net, provenance=prov))
    return EXIT_ERRORS if errors else EXIT_CLEAN


def _rule_config(args) -> RuleConfig:
    if args.prohibit is not None and len(args.prohibit) != 2:
        raise InputFailure("--prohibit takes exactly two weights, e.g. --prohibit 1,5")
    pair = tuple(args.prohibit) if args.prohibit else None
    if args.a is not None:
        return RuleConfig.from_threshold(args.k, args.a, prohibited_pair=pair, quantum=args.quantum)
    return RuleConfig(args.k, frozenset(args.rule3_weights), pair, args.quantum)


def cmd_validate(args) -> int:
    cfg = _rule_config(args)
    raw, features = _load(args)
    net = build_network(features, cfg)
    table = AttributeTable.from_network(net)
    config = cfg.echo()
    if args.table:
        table_raw = _read(args.table)
        supplied = parse_attribute_table(table_raw)
        problems = cross_check_table(supplied, net)
        if problems:
            raise InputFailure("attribute table disagrees with geometry:\n  " + "\n  ".join(problems))
        table = supplied
        config["table_hash"] = input_hash(table_raw)
    started = time.perf_counter()
    if args.detector == "exhaustive":
        errors = detect_exhaustive(table, cfg)
    elif args.detector == "spatialjoin":
        errors = detect_spatialjoin(net, cfg)
    else:
        errors = detect_exhaustive(table, cfg)
        joined = detect_spatialjoin(net, cfg)
        config["detectors_agree"] = error_keys(errors) == error_keys(joined)
        if not config["detectors_agree"]:
            print("netlint: warning: detectors disagree; reporting the exhaustive result", file=sys.stderr)
    return _finish(errors, args, net, _provenance(raw, args.detector, config, started, args))


def cmd_flow_check(args) -> int:
    raw, features = _load(args)
    net = build_network(apply_direction_weights(features), quantum=args.quantum)
    started = time.perf_counter()
    errors = detect_point_no_flow(net, exempt_terminals=args.exempt_terminals)
    config = {"quantum": args.quantum, "exempt_terminals": args.exempt_terminals}
    return _finish(errors, args, net, _provenance(raw, "point_no_flow", config, started, args))


def cmd_self_intersect(args) -> int:
    raw, features = _load(args)
    net = build_network(features, quantum=args.quantum)
    started = time.perf_counter()
    errors = detect_self_intersection(net, mode=args.mode)
    config = {"quantum": args.quantum, "mode": args.mode}
    return _finish(errors, args, net, _provenance(raw, "self_intersection", config, started, args))


def cmd_near_nodes(args) -> int:
    raw, features = _load(args)
    net = build_network(features, quantum=args.quantum)
    if not args.epsilon > args.quantum:
        raise InputFailure(f"--epsilon must exceed the quantum ({args.quantum})")
    started = time.perf_counter()
    errors = detect_near_nodes(net, args.epsilon)
    config = {"quantum": args.quantum, "epsilon": args.epsilon}
    return _finish(errors, args, net, _provenance(raw, "near_nodes", config, started, args))


def cmd_gen(args) -> int:
    gen = generate_network(
        args.n,
        args.k,
        args.seed,
        a=args.a,
        inject_rule1=args.inject_rule1,
        inject_rule2=args.inject_rule2,
        inject_rule3=args.inject_rule3,
    )
    data = serialize_geojson(gen.features)
    _write(args.out, data)
    truth_path = args.truth or f"{args.out}.truth.json"
    prov = {"input": {"hash": input_hash(data)}, "detector": "generator", "config": gen.cfg.echo(), "params": gen.params}
    net = build_network(gen.features, gen.cfg)
    _write(truth_path, emit_report(gen.truth, "json", network=net, provenance=prov))
    return EXIT_CLEAN


def cmd_bench(args) -> int:
    detectors = [d.strip() for d in args.detectors.split(",") if d.strip()]
    if args.reps < 1:
        raise InputFailure("--reps must be >= 1")
    try:
        rows = bench(args.sizes, args.k, detectors, reps=args.reps, seed=args.seed)
    except ValueError as exc:
        raise InputFailure(str(exc)) from None
    _write(args.out, rows_to_csv(rows).encode())
    return EXIT_CLEAN


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; keep --help/--version at 0.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputFailure, NetlintError) as exc:
        print(f"netlint: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except json.JSONDecodeError as exc:
        print(f"netlint: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
