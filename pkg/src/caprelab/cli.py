"""Command-line front end.

Exit codes: 0 success, 1 property violation (oracle check), 2 bad input,
3 failure while simulating.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import ir
from .benchgen import BenchmarkSpec, SpecError, generate, write_benchmark
from .graphs import AnalysisError, graphs_to_json
from .hints import HintError, UnknownType, analyze, hints_to_json, load_hints, rop_hints
from .interp import InterpError
from .oracle import VIOLATION, oracle_check
from .simulator import (
    COMPARE_POLICIES,
    CSV_COLUMNS,
    compare_policies,
    metrics_csv,
    metrics_json,
    run_workload,
    summarize,
    summary_table,
)
from .store import DatasetError, PlacementError, Policy, StoreConfig, check_dataset, load_dataset
from .trace import TraceError, WorkloadTrace

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("caprelab")


class InputError(Exception):
    pass


def _setup_logging() -> None:
    level = os.environ.get("CAPRELAB_LOG", "error").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


# -- input loading ----------------------------------------------------------


def _load_model(path) -> ir.ApplicationModel:
    if path is None:
        raise InputError("--model is required")
    try:
        model = ir.parse_application(path)
    except FileNotFoundError:
        raise InputError(f"model file not found: {path}") from None
    except (ir.ParseError, ir.ResolveError) as exc:
        raise InputError(f"{path}: {exc}") from None
    report = ir.validate_model(model)
    if not report:
        sys.stderr.write(report.to_jsonl())
        raise InputError(f"{path}: {len(report)} validation error(s)")
    return model


def _load_dataset(path, model):
    if path is None:
        raise InputError("--dataset is required")
    try:
        data = load_dataset(path)
    except FileNotFoundError:
        raise InputError(f"dataset file not found: {path}") from None
    except (DatasetError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: malformed dataset ({exc})") from None
    problems = check_dataset(data, model)
    if problems:
        raise InputError(f"{path}: dataset does not match the model: {problems[0]}")
    return data


def _load_trace(path) -> WorkloadTrace:
    if path is None:
        raise InputError("--trace is required")
    try:
        return WorkloadTrace.load(path)
    except FileNotFoundError:
        raise InputError(f"trace file not found: {path}") from None
    except TraceError as exc:
        raise InputError(f"{path}: {exc}") from None


def _config(args, policy=None) -> StoreConfig:
    try:
        return StoreConfig(
            num_nodes=args.nodes,
            remote_latency=args.remote_latency,
            local_latency=args.local_latency,
            channels=args.channels,
            policy=Policy.parse(policy or args.policy),
            seed=args.seed,
            cache_capacity=args.cache_capacity,
            compute_latency=args.compute_latency,
            scheduler_overhead=args.scheduler_overhead,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _stamp(args) -> dict:
    return {} if args.deterministic else {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%S%z")}


# -- subcommands ------------------------------------------------------------


def cmd_analyze(args) -> int:
    model = _load_model(args.model)
    a = analyze(model)
    rows = []
    for ref in model.method_refs():
        ag = a.graphs[ref]
        rows.append(
            {
                "method": ref,
                "nodes": len(ag.navigation_nodes()),
                "edges": len(ag.edges),
                "hints": len(a.raw[ref]),
                "truncated": ag.truncated,
            }
        )
    summary = {"types": len(model.types), "methods": len(rows), "per_method": rows}
    if not args.deterministic:
        summary["analysis_seconds"] = round(a.seconds, 6)
    summary |= _stamp(args)
    if args.out:
        _emit(graphs_to_json(a.g, a.graphs), args.out, "graphs.json")
        _emit(a.g.to_dot(), args.out, "type_graph.dot")
        for ref in model.method_refs():
            _emit(a.graphs[ref].to_dot(), args.out / "methods", f"{ref}.dot")
    if args.format == "json":
        _emit(json.dumps(summary, indent=1), args.out, "summary.json")
    else:
        lines = [f"{len(rows)} methods analyzed"]
        for r in rows:
            lines.append(f"{r['method']}: {r['nodes']} nodes, {r['edges']} edges, {r['hints']} hints"
                         + (" (truncated)" if r["truncated"] else ""))
        if not args.deterministic:
            lines.append(f"analysis time {a.seconds:.6f}s")
        _emit("\n".join(lines), args.out, "summary.txt")
    return EXIT_OK


def cmd_hints(args) -> int:
    model = _load_model(args.model)
    if args.rop:
        type_name, _, d = args.rop.partition(":")
        a = analyze(model, dedup=False)
        try:
            hs = rop_hints(type_name, int(d or 1), a.g)
        except (UnknownType, ValueError) as exc:
            raise InputError(f"bad --rop {args.rop}: {exc}") from None
        _emit(json.dumps(hs.strings(), indent=1), args.out, "rop_hints.json")
        return EXIT_OK
    a = analyze(model, dedup=not args.no_dedup, fixpoint=args.fixpoint)
    _emit(hints_to_json(a.hints), args.out, "hints.json")
    return EXIT_OK


def _hints_arg(args, model):
    if not args.hints:
        return None
    try:
        return load_hints(args.hints, model)
    except FileNotFoundError:
        raise InputError(f"hints file not found: {args.hints}") from None


def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    data = _load_dataset(args.dataset, model)
    trace = _load_trace(args.trace)
    cfg = _config(args)
    hints = _hints_arg(args, model)
    events = [] if args.event_log else None
    m = run_workload(model, data, trace, cfg, hints, events)
    if events is not None:
        args.event_log.write_text("".join(json.dumps(e, sort_keys=True) + "\n" for e in events))
    if args.format == "json":
        _emit(json.dumps(m.to_dict() | _stamp(args), indent=1, sort_keys=True), args.out, "metrics.json")
    elif args.format == "table":
        _emit(summary_table([m.row()]), args.out, "metrics.txt")
    else:
        text = ",".join(CSV_COLUMNS) + "\n" + ",".join(str(v) for v in m.row().values())
        _emit(text, args.out, "metrics.csv")
    return EXIT_OK


def cmd_compare(args) -> int:
    model = _load_model(args.model)
    data = _load_dataset(args.dataset, model)
    trace = _load_trace(args.trace)
    hints = _hints_arg(args, model)
    if hints is None:
        hints = analyze(model).hints
    if args.repeats < 1:
        raise InputError("--repeats must be >= 1")
    comparisons = []
    for k in range(args.repeats):
        cfg = _config(args, "none").with_(seed=args.seed + k)
        log.info("compare seed %d", cfg.seed)
        comparisons.append(compare_policies(model, data, trace, cfg, hints, COMPARE_POLICIES))
    summary = summarize(comparisons)
    if args.format == "json":
        _emit(metrics_json(comparisons), args.out, "metrics.json")
        _emit(json.dumps({"summary": summary} | _stamp(args), indent=1), args.out, "summary.json")
    elif args.format == "table":
        _emit(summary_table(summary), args.out, "summary.txt")
    else:
        _emit(metrics_csv(comparisons), args.out, "metrics.csv")
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(summary[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(summary)
        _emit(buf.getvalue(), args.out, "summary.csv")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    model = _load_model(args.model)
    data = _load_dataset(args.dataset, model)
    trace = _load_trace(args.trace)
    a = analyze(model)
    hints = load_hints(args.hints, model) if args.hints else None
    verdicts = oracle_check(a, data, trace, args.seed, hints)
    if args.format == "json":
        _emit(json.dumps([v.to_dict() for v in verdicts], indent=1), args.out, "oracle.json")
    else:
        lines = [f"{v.method}: {v.verdict}" for v in verdicts]
        _emit("\n".join(lines) if lines else "no methods executed", args.out, "oracle.txt")
    return EXIT_VIOLATION if any(v.verdict == VIOLATION for v in verdicts) else EXIT_OK


def cmd_benchgen(args) -> int:
    size: dict = {}
    if args.size:
        if args.family == "oo7":
            size["size"] = args.size
        else:
            raise InputError("--size names an oo7 size; use --param for other families")
    for kv in args.param or []:
        k, sep, v = kv.partition("=")
        if not sep:
            raise InputError(f"--param expects key=value, got {kv!r}")
        try:
            size[k] = int(v)
        except ValueError:
            size[k] = v
    try:
        bench = generate(BenchmarkSpec(args.family, size, args.seed))
    except (SpecError, TypeError) as exc:
        raise InputError(str(exc)) from None
    if args.out is None:
        raise InputError("--out is required")
    for p in write_benchmark(bench, args.out):
        log.info("wrote %s", p)
    print(f"{args.family}: {len(bench.dataset)} objects, traces {', '.join(sorted(bench.traces))}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caprelab", description="Static prefetching hints and a distributed object store simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--model", type=Path)
        p.add_argument("--out", type=Path, help="output directory (default: stdout)")
        p.add_argument("--format", choices=("csv", "json", "table"), default="csv")
        p.add_argument("--deterministic", action="store_true", help="omit timestamps and wall times")
        if data:
            p.add_argument("--dataset", type=Path)
            p.add_argument("--trace", type=Path)
            p.add_argument("--hints", type=Path)
            p.add_argument("--seed", type=int, default=0)

    def store(p):
        p.add_argument("--policy", default="none", help="none, rop:<depth> or capre")
        p.add_argument("--nodes", type=int, default=4)
        p.add_argument("--remote-latency", type=float, default=100)
        p.add_argument("--local-latency", type=float, default=0)
        p.add_argument("--channels", type=int, default=4)
        p.add_argument("--cache-capacity", type=int, default=None)
        p.add_argument("--compute-latency", type=float, default=1)
        p.add_argument("--scheduler-overhead", type=float, default=0)

    p = sub.add_parser("analyze", help="build type graphs and report per-method sizes")
    common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("hints", help="emit prefetching hints as JSON")
    common(p)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--fixpoint", action="store_true", help="repeat caller-based dedup to a fixpoint")
    p.add_argument("--rop", metavar="TYPE:DEPTH", help="print ROP paths for one type instead")
    p.set_defaults(fn=cmd_hints)

    p = sub.add_parser("simulate", help="run one trace under one policy")
    common(p, data=True)
    store(p)
    p.add_argument("--event-log", type=Path, help="write fetch events as JSON lines")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="run every policy over several seeds")
    common(p, data=True)
    store(p)
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("oracle-check", help="compare navigated paths with the hints")
    common(p, data=True)
    p.set_defaults(fn=cmd_oracle_check)

    p = sub.add_parser("benchgen", help="write a generated benchmark to a directory")
    p.add_argument("--family", required=True)
    p.add_argument("--size", help="oo7 size: small, medium or large-scaled")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.set_defaults(fn=cmd_benchgen)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (HintError, TraceError, InterpError, AnalysisError, PlacementError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
