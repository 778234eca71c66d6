"""``ilat`` command line: generate, analyze, verify, export."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import games, metrics, plotting, spectral
from .generator import GenerationTrace, generate, seed_graph
from .graph import DEFAULT_MEMORY_BUDGET, GraphError, IlatGraph, MemoryGuardError, read_binary, write_binary, write_edge_list
from .verify import Budgets, run_verify

ALL_METRICS = ("density", "degree", "distance", "clustering", "spectral", "domination", "cops")
DEFAULT_METRICS = "density,degree,distance,clustering,spectral"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_SIZE = re.compile(r"(\d+(?:\.\d+)?)\s*([kmgt]?i?b?)?", re.I)
_UNITS = {"": 1, "b": 1, "k": 1e3, "kb": 1e3, "kib": 2**10, "m": 1e6, "mb": 1e6, "mib": 2**20,
          "g": 1e9, "gb": 1e9, "gib": 2**30, "t": 1e12, "tb": 1e12, "tib": 2**40}


def parse_size(text: str) -> int:
    m = _SIZE.fullmatch(text.strip())
    unit = (m.group(2) or "").lower() if m else None
    if not m or unit not in _UNITS:
        raise argparse.ArgumentTypeError(f"bad size {text!r} (e.g. 512MiB, 2GiB)")
    return int(float(m.group(1)) * _UNITS[unit])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer, bool)):
        return obj if isinstance(obj, bool) else int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if math.isnan(f) else ("inf" if math.isinf(f) else f)
    if isinstance(obj, Fraction):
        return float(obj)
    return obj


def dump_json(data, path: Path | None = None) -> str:
    text = json.dumps(_jsonable(data), sort_keys=True, indent=2) + "\n"
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(["" if v is None else v for v in row] for row in rows)


def _notice(msg: str) -> None:
    print(f"notice: {msg}", file=sys.stderr)


# --- subcommands -------------------------------------------------------------


def cmd_generate(args) -> int:
    g, trace = generate(seed_graph(args.seed_graph, budget=args.budget_mem), args.steps, budget=args.budget_mem)
    write_binary(g, args.out)
    print(trace.table())
    return EXIT_OK


def _trace_of(g: IlatGraph) -> GenerationTrace:
    trace = GenerationTrace([])
    trace.append(g)
    return trace


def analyze_graph(g: IlatGraph, which: list[str], out_dir: Path, args) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    fig_dir = out_dir / "figures"
    figures = not args.no_figures
    report: dict = {
        "graph": {"n": g.n, "e": g.edge_count, "step": g.step, "seed": g.seed_descriptor},
        "parameters": {"rng_seed": args.rng_seed, "pair_budget": args.pair_budget,
                       "spectral_method": args.spectral_method, "isolated_policy": args.isolated_policy},
        "skipped": {},
    }

    def skip(name: str, why: str) -> None:
        report["skipped"][name] = why
        _notice(f"{name} skipped: {why}")

    if "density" in which:
        d = metrics.density(g) if g.n >= 2 else None
        report["density"] = {"D_t": d, "exact": None if d is None else str(d), "e": g.edge_count, "n": g.n}

    if "degree" in which:
        h = metrics.degree_histogram(g)
        rows = h.rows()
        _write_csv(out_dir / "degree_histogram.csv", ["degree", "count", "predicted_count", "class_k"], rows)
        report["degree"] = {"matched_classes": h.matched, "mismatched_classes": h.mismatched,
                            "residual_mass": h.residual_mass, "distinct_degrees": len(h.counts)}
        if figures and rows:
            plotting.degree_histogram(rows, fig_dir / "degree_histogram.png")

    if "distance" in which:
        if g.n < 2:
            skip("distance", "fewer than two nodes")
        else:
            s = metrics.distance_summary(g, "auto", pair_budget=args.pair_budget,
                                         rng_seed=args.rng_seed, workers=args.workers)
            report["distance"] = s.as_dict()
            rows = sorted(s.histogram.items())
            if s.pairs_unreachable:
                rows.append(("inf", s.pairs_unreachable))
            _write_csv(out_dir / "distance.csv", ["d", "count"], rows)
            if figures:
                plotting.distance_distribution(s.histogram, s.pairs_unreachable, fig_dir / "distance.png")

    if "clustering" in which:
        rep = metrics.clustering_report(g, workers=args.workers)
        _write_csv(out_dir / "clustering.csv", ["node", "birth_step", "local"],
                   ((v, int(g.birth_step[v]), repr(float(rep.local[v]))) for v in range(g.n)))
        report["clustering"] = {"mean_local": rep.mean_local, "transitivity": rep.transitivity,
                                "triangles": rep.triangles, "wedges": rep.wedges}
        if figures and g.n:
            plotting.clustering_by_birth(g.birth_step, rep.local, fig_dir / "clustering_by_birth.png")

    if "spectral" in which:
        method = args.spectral_method
        if method == "dense" and g.n > spectral.DENSE_MAX_N:
            skip("spectral_dense", f"n={g.n} > {spectral.DENSE_MAX_N}; using iterative")
            method = "iterative"
        try:
            rep = spectral.spectral_gap(g, method, isolated_policy=args.isolated_policy, rng_seed=args.rng_seed)
        except (GraphError, spectral.ConvergenceError) as exc:
            skip("spectral", str(exc))
        else:
            report["spectral"] = rep.as_dict()
            if g.step >= 1:
                report["spectral"]["youngest_half_bound"] = spectral.youngest_half_bound(g)
            if rep.spectrum is not None:
                _write_csv(out_dir / "spectrum.csv", ["index", "eigenvalue"],
                           ((i, repr(float(x))) for i, x in enumerate(rep.spectrum)))
                if figures:
                    plotting.spectrum(rep.spectrum, rep.gap, fig_dir / "spectrum.png")

    if "domination" in which:
        try:
            report["domination"] = games.domination_number_exact(g).as_dict()
        except (games.BudgetExceeded, games.NoDominatingSetWithin) as exc:
            skip("domination", str(exc))

    if "cops" in which:
        try:
            report["cops"] = games.cop_number_exact(g).as_dict()
            if g.step >= 2:
                report["cops"]["scripted"] = games.two_cop_scripted_strategy(g).as_dict()
        except games.BudgetExceeded as exc:
            skip("cops", str(exc))

    if figures and g.n >= 2 and "density" in which:
        plotting.density_trace(_trace_of(g).as_list(), fig_dir / "density.png")
    dump_json(report, out_dir / "report.json")
    return report


def cmd_analyze(args) -> int:
    which = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = sorted(set(which) - set(ALL_METRICS))
    if unknown:
        raise _UsageError(f"unknown metrics {unknown}; choose from {', '.join(ALL_METRICS)}")
    g = read_binary(args.graph, budget=args.budget_mem)
    out = Path(args.out)
    analyze_graph(g, which, out, args)
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    budgets = Budgets(memory=args.budget_mem, pair_budget=args.pair_budget, workers=args.workers)
    report = run_verify(args.seed_graph, args.steps, args.rng_seed, budgets)
    data = report.as_dict()
    data["environment"]["budgets"].pop("workers")  # keeps reports byte-identical across machines
    for c in report.claims:
        print(f"{c.status:>8}  {c.claim_id}", file=sys.stderr)
    text = dump_json(data, Path(args.out) if args.out else None)
    if not args.out:
        sys.stdout.write(text)
    if args.figures:
        plotting.density_trace(report.trace, Path(args.figures) / "density.png")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_export(args) -> int:
    if args.graph:
        g = read_binary(args.graph, budget=args.budget_mem)
    elif args.seed_graph:
        g, _ = generate(seed_graph(args.seed_graph), args.steps, budget=args.budget_mem)
    else:
        raise _UsageError("export needs a graph file or --seed-graph")
    out = Path(args.out)
    if args.format == "edges":
        write_edge_list(g, out)
    elif args.format == "lineage":
        _write_csv(out, ["node", "birth_step", "parent"],
                   ((v, int(g.birth_step[v]), int(g.parent[v])) for v in range(g.n)))
    else:
        write_binary(g, out)
    return EXIT_OK


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget-mem", type=parse_size, default=DEFAULT_MEMORY_BUDGET,
                        help="adjacency memory budget (default 2GiB)")
    common.add_argument("--pair-budget", type=int, default=metrics.DEFAULT_PAIR_BUDGET)
    common.add_argument("--rng-seed", type=int, default=42)
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = argparse.ArgumentParser(prog="ilat", description="ILAT graph generation and analysis")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="generate G_t and write it in binary form")
    g.add_argument("--seed-graph", required=True, help="cN, pN, kN or file:<edge list>")
    g.add_argument("--steps", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", parents=[common], help="metrics, games and spectra of a graph file")
    a.add_argument("graph")
    a.add_argument("--metrics", default=DEFAULT_METRICS, help=f"comma list from {','.join(ALL_METRICS)}")
    a.add_argument("--out", required=True, help="output directory")
    a.add_argument("--spectral-method", choices=["auto", "dense", "iterative"], default="auto")
    a.add_argument("--isolated-policy", choices=["drop", "reject"], default="drop")
    a.add_argument("--no-figures", action="store_true")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", parents=[common], help="run the claim suite on G_0..G_t")
    v.add_argument("--seed-graph", required=True)
    v.add_argument("--steps", type=int, required=True)
    v.add_argument("--out", help="report path (default stdout)")
    v.add_argument("--figures", help="directory for the density figure")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("export", parents=[common], help="write a graph as an edge list, lineage CSV or binary")
    e.add_argument("graph", nargs="?")
    e.add_argument("--seed-graph")
    e.add_argument("--steps", type=int, default=0)
    e.add_argument("--format", choices=["edges", "lineage", "binary"], default="edges")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "steps", 0) is not None and getattr(args, "steps", 0) < 0:
        print("error: --steps must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (_UsageError, GraphError, MemoryGuardError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
