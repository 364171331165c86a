"""Command-line entry point: ``emcmc {generate,enumerate,sample,analyze}``.

Failures print exactly one line, ``error E_CODE: message``, to stderr and exit
non-zero, so scripts can parse them.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io
from .engine import InitializationError, run
from .graph import GraphError
from .model import PartitionModel, canonical_id
from .oracle import BudgetExceeded, DEFAULT_BUDGET, ecmut_reachability, enumerate_feasible, tv_distance

HIST_BINS = 50

EXIT_CODES = {
    "E_USAGE": 2,
    "E_LOAD": 3,
    "E_CONFIG": 4,
    "E_BUDGET": 5,
    "E_INIT": 6,
    "E_RETRY": 7,
    "E_MISMATCH": 8,
    "E_IO": 9,
}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("E_USAGE", message)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("E_IO", f"cannot create {out}: {exc}") from exc
    return out


def _load_instance(path):
    if path is None:
        raise CliError("E_USAGE", "--instance is required")
    try:
        doc = io.read_json(path)
        return io.load_graph(doc)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("E_LOAD", f"cannot read instance {path}: {exc}") from exc
    except (GraphError, KeyError, TypeError, ValueError) as exc:
        raise CliError("E_LOAD", f"invalid instance {path}: {exc}") from exc


def _load_config(path, seed=None) -> io.RunConfig:
    if path is None:
        raise CliError("E_USAGE", "--config is required")
    try:
        doc = io.read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("E_LOAD", f"cannot read config {path}: {exc}") from exc
    try:
        return io.parse_config(doc, seed)
    except (TypeError, ValueError) as exc:
        raise CliError("E_CONFIG", f"invalid config {path}: {exc}") from exc


# --- subcommands -------------------------------------------------------------------


def cmd_generate(args) -> int:
    out = _out_dir(args)
    if args.kind == "grid":
        if args.rows is None or args.cols is None:
            raise CliError("E_USAGE", "grid needs --rows and --cols")
        weights = [float(w) for w in args.weights.split(",")] if args.weights else None
        chars = [float(c) for c in args.characteristics.split(",")] if args.characteristics else None
        try:
            doc = io.grid_document(args.rows, args.cols, weights, chars)
        except (GraphError, ValueError, IndexError) as exc:
            raise CliError("E_CONFIG", f"bad grid parameters: {exc}") from exc
        io.write_json(out / "instance.json", doc)
        print(f"instance n={doc['n']} edges={len(doc['edges'])} -> {out / 'instance.json'}")
        return 0
    try:
        doc, config = io.disconnection_demo(
            seed=args.seed or 0, rows=args.rows or 3, cols=args.cols or 3, k=args.k, max_tries=args.max_tries
        )
    except io.RetryExhausted as exc:
        raise CliError("E_RETRY", str(exc)) from exc
    io.write_json(out / "instance.json", doc)
    io.write_json(out / "config.json", config)
    print(f"instance n={doc['n']} epsilon={config['epsilon']!r} -> {out / 'instance.json'}, {out / 'config.json'}")
    return 0


def cmd_enumerate(args) -> int:
    graph = _load_instance(args.instance)
    cfg = _load_config(args.config)
    try:
        catalog = enumerate_feasible(graph, cfg.k, cfg.constraints, budget=args.budget)
    except BudgetExceeded as exc:
        raise CliError("E_BUDGET", str(exc)) from exc
    except ValueError as exc:
        raise CliError("E_CONFIG", str(exc)) from exc
    out = _out_dir(args)
    io.write_catalog(out / "catalog.txt", catalog)
    report = dict(catalog.counts)
    report["instance_checksum"] = io.instance_checksum(graph)
    if args.reachability:
        comps = ecmut_reachability(catalog, graph, cfg.constraints)
        report["reachability_components"] = [len(c) for c in comps]
    io.write_json(out / "counts.json", report)
    for key in ("unconstrained", "contiguous", "feasible"):
        print(f"{key}={report[key]}")
    if args.reachability:
        print("reachability_components=" + ",".join(map(str, report["reachability_components"])))
    return 0


def cmd_sample(args) -> int:
    graph = _load_instance(args.instance)
    cfg = _load_config(args.config, args.seed)
    try:
        model = PartitionModel(graph, cfg.k, cfg.constraints, cfg.energy)
    except ValueError as exc:
        raise CliError("E_CONFIG", str(exc)) from exc
    out = _out_dir(args)
    started = _now()
    try:
        result = run(model, cfg.engine, workers=args.workers)
    except InitializationError as exc:
        raise CliError("E_INIT", str(exc)) from exc
    finished = _now()
    try:
        io.write_stream(out / "stream.csv", result.records)
    except OSError as exc:
        raise CliError("E_IO", f"cannot write stream: {exc}") from exc
    report = result.report
    manifest = {
        "config": cfg.to_document(),
        "instance_checksum": io.instance_checksum(graph),
        "seed": cfg.engine.seed,
        "workers": report["workers"],
        "started": started,
        "finished": finished,
        "chains": report["chains"],
        "records": report["records"],
        "unique_canonical_ids": report["unique_states_recorded"],
        "reverse_order_incomplete": report["reverse_order_incomplete"],
        "elapsed_seconds": report["elapsed_seconds"],
        "throughput_states_per_second": report["steps_per_second"],
        "throughput_records_per_second": report["records_per_second"],
    }
    io.write_json(out / "manifest.json", manifest)
    print(
        f"records={manifest['records']} unique={manifest['unique_canonical_ids']} "
        f"chains={len(manifest['chains'])} elapsed={manifest['elapsed_seconds']:.2f}s"
    )
    return 0


def _analyze(records, entries) -> dict:
    ids = [canonical_id(e) for e in entries]
    counts = Counter(r.canonical_id for r in records)
    try:
        tv = tv_distance(counts, ids)
    except ValueError as exc:
        code = "E_MISMATCH" if "not in the catalog" in str(exc) else "E_LOAD"
        raise CliError(code, str(exc)) from exc
    values = np.array([r.dissimilarity for r in records], dtype=float)
    finite = values[np.isfinite(values)]
    hist, edges = np.histogram(finite, bins=HIST_BINS, range=(0.0, 1.0))
    return {
        "tv": tv,
        "records": len(records),
        "states": len(ids),
        "frequencies": [(i, counts.get(i, 0)) for i in ids],
        "hist": hist.tolist(),
        "edges": edges.tolist(),
        "undefined_dissimilarity": int(values.size - finite.size),
    }


def cmd_analyze(args) -> int:
    if args.stream is None or args.catalog is None:
        raise CliError("E_USAGE", "analyze needs --stream and --catalog")
    try:
        records = list(io.read_stream(args.stream))
        entries = io.read_catalog(args.catalog)
    except OSError as exc:
        raise CliError("E_LOAD", f"cannot read input: {exc}") from exc
    except ValueError as exc:
        raise CliError("E_LOAD", f"malformed input: {exc}") from exc
    if not entries:
        raise CliError("E_LOAD", "catalog is empty")
    result = _analyze(records, entries)
    passed = result["tv"] < args.threshold
    out = _out_dir(args)
    with open(out / "frequencies.csv", "w", encoding="utf-8") as fh:
        fh.write("canonical_id,count,frequency\n")
        n = max(result["records"], 1)
        for cid, c in result["frequencies"]:
            fh.write(f"{cid},{c},{c / n!r}\n")
    with open(out / "histogram.csv", "w", encoding="utf-8") as fh:
        fh.write("# edges=" + ",".join(repr(e) for e in result["edges"]) + "\n")
        fh.write("bin_low,bin_high,count\n")
        for lo, hi, c in zip(result["edges"], result["edges"][1:], result["hist"]):
            fh.write(f"{lo!r},{hi!r},{c}\n")
    summary = {
        "tv": result["tv"],
        "threshold": args.threshold,
        "pass": passed,
        "records": result["records"],
        "catalog_states": result["states"],
        "states_visited": sum(1 for _, c in result["frequencies"] if c),
        "undefined_dissimilarity": result["undefined_dissimilarity"],
    }
    io.write_json(out / "analysis.json", summary)
    print(f"tv={result['tv']:.6f} threshold={args.threshold} pass={str(passed).lower()}")
    return 0


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = _Parser(add_help=False)
    shared.add_argument("--instance", help="instance JSON document")
    shared.add_argument("--config", help="config JSON document")
    shared.add_argument("--seed", type=int, help="overrides the config seed")
    shared.add_argument("--out", default=".", help="output directory (default: current)")
    shared.add_argument("--workers", type=int, default=1, help="worker processes for sampling")

    parser = _Parser(prog="emcmc", description="Sample contiguous graph partitions with evolutionary MCMC.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", parents=[shared], help="write a synthetic instance")
    gen.add_argument("kind", choices=["grid", "disconnection-demo"])
    gen.add_argument("--rows", type=int)
    gen.add_argument("--cols", type=int)
    gen.add_argument("--weights", help="comma-separated unit weights, row-major")
    gen.add_argument("--characteristics", help="comma-separated characteristic counts, row-major")
    gen.add_argument("--k", type=int, default=2, help="zones for disconnection-demo")
    gen.add_argument("--max-tries", type=int, default=500)
    gen.set_defaults(func=cmd_generate)

    enum = sub.add_parser("enumerate", parents=[shared], help="exhaustively list feasible partitions")
    enum.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    enum.add_argument("--reachability", action="store_true", help="also report single-move components")
    enum.set_defaults(func=cmd_enumerate)

    samp = sub.add_parser("sample", parents=[shared], help="run the sampler")
    samp.set_defaults(func=cmd_sample)

    ana = sub.add_parser("analyze", parents=[shared], help="compare a stream to a catalog")
    ana.add_argument("--stream", help="stream.csv from sample")
    ana.add_argument("--catalog", help="catalog.txt from enumerate")
    ana.add_argument("--threshold", type=float, default=0.05, help="TV pass threshold")
    ana.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise CliError("E_USAGE", "--workers must be at least 1")
        return args.func(args)
    except CliError as exc:
        message = " ".join(str(exc).split())
        print(f"error {exc.code}: {message}", file=sys.stderr)
        return EXIT_CODES[exc.code]


if __name__ == "__main__":
    raise SystemExit(main())
