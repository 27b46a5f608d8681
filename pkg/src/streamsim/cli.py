"""Command line entry point.

Exit codes: 0 success, 1 plan or usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .errors import DataError, PlanError, StreamSimError
from .io import DEFAULT_SCHEMA, load_schema, read_log, write_csv
from .metrics import METRICS, evaluate_pair, write_report_csv

EXIT_OK, EXIT_PLAN, EXIT_DATA = 0, 1, 2


def _schema(path):
    return (DEFAULT_SCHEMA, ",") if path is None else load_schema(path)


def _run_dir(plan, name: str) -> Path:
    digest = hashlib.sha256(json.dumps(asdict(plan), sort_keys=True, default=str).encode()).hexdigest()[:10]
    out = Path(plan.output_dir) / f"{name}-seed{plan.seed}-{digest}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(args) -> int:
    schema, delim = _schema(args.schema)
    events = read_log(args.log, schema, delim)
    if not events:
        raise DataError("log has no events")
    cases = {e.case_id for e in events}
    lo = min(e.start_ts for e in events)
    hi = max(e.timestamp for e in events)
    info = {
        "events": len(events),
        "cases": len(cases),
        "activities": len({e.activity for e in events}),
        "resources": len({e.resource for e in events if e.resource}),
        "first": lo,
        "last": hi,
        "weeks": round((hi - lo) / (7 * 24 * 3600), 2),
        "with_start": sum(e.start is not None for e in events),
    }
    print(json.dumps(info, indent=2))
    if args.out:
        write_csv(events, args.out)
    return EXIT_OK


def _techniques_output(plan, runs, name):
    from .report import emit_outputs

    out = _run_dir(plan, name)
    paths = emit_outputs(runs, out)
    skipped = {run.technique: run.skipped for run in runs if run.skipped}
    (out / "skipped.json").write_text(json.dumps(skipped, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"outputs written to {out}")
    print(Path(paths["summary"]).read_text(encoding="utf-8"), end="")
    return out


def cmd_run(args) -> int:
    from .pipeline import load_plan, run_experiment

    plan = load_plan(args.plan)
    runs = run_experiment(plan)
    _techniques_output(plan, runs, "run")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .pipeline import best_grace, load_plan, sweep_grace

    plan = load_plan(args.plan)
    runs = sweep_grace(plan)
    _techniques_output(plan, runs, "sweep")
    print(f"best by mean {args.metric}: {best_grace(runs, args.metric)}")
    return EXIT_OK


def cmd_gen_drift(args) -> int:
    from .scenario import generate_drift_scenario

    events, manifest = generate_drift_scenario(args.seed, args.n_pre, args.n_post, weeks=args.weeks)
    write_csv(events, args.out)
    manifest_path = args.manifest or str(Path(args.out).with_suffix(".manifest.json"))
    Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{len(events)} events written to {args.out}; manifest {manifest_path}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    schema, delim = _schema(args.schema)
    real = read_log(args.real, schema, delim)
    sim = read_log(args.sim, DEFAULT_SCHEMA)
    rep = evaluate_pair(real, sim)
    for m in METRICS:
        v = getattr(rep, m)
        print(f"{m:<11} {'-' if v is None else f'{v:.4f}'}" + (f"  ({rep.missing[m]})" if m in rep.missing else ""))
    if args.out:
        write_report_csv([rep], args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .report import plots_from_reports

    src = Path(args.run_dir) / "reports.csv"
    if not src.exists():
        raise DataError(f"{src} not found")
    for p in plots_from_reports(src, Path(args.out or Path(args.run_dir) / "plots")):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streamsim", description="Streaming discovery and simulation of business processes")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="parse and validate a log, print a summary")
    s.add_argument("log")
    s.add_argument("--schema", help="TOML/JSON column mapping")
    s.add_argument("--out", help="write the normalised CSV here")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("run", help="run an experiment plan")
    s.add_argument("--plan", required=True)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep-grace", help="online runs for every grace period of the plan")
    s.add_argument("--plan", required=True)
    s.add_argument("--metric", default="ctd", choices=METRICS)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("gen-drift", help="write the synthetic drift log")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-pre", type=int, default=5000)
    s.add_argument("--n-post", type=int, default=5000)
    s.add_argument("--weeks", type=float, default=20.0)
    s.add_argument("--out", required=True)
    s.add_argument("--manifest")
    s.set_defaults(func=cmd_gen_drift)

    s = sub.add_parser("evaluate", help="distances between a real and a simulated log")
    s.add_argument("real")
    s.add_argument("sim")
    s.add_argument("--schema", help="column mapping of the real log")
    s.add_argument("--out", help="write a report CSV")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("plot", help="redraw the SVG plots of a run directory")
    s.add_argument("run_dir")
    s.add_argument("--out")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PLAN
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except PlanError as exc:
        print(f"plan error: {exc}", file=sys.stderr)
        return EXIT_PLAN
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (StreamSimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
