"""Command-line interface: run, sweep, list-scenarios, validate."""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time

import yaml

from .config import (
    RunConfig,
    _atomic_write,
    parse_config,
    report_json_bytes,
    run_config,
    sweep_points,
    write_report,
)
from .errors import SuperatomsError
from .scenarios import SCENARIOS, scenario_defaults


def _load_config(args) -> RunConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = parse_config(f.read())
    elif getattr(args, "scenario", None):
        cfg = parse_config(yaml.safe_dump({"scenario": args.scenario}))
    else:
        raise SuperatomsError("give --config PATH or --scenario ID")
    if getattr(args, "dt", None) is not None:
        doc = dict(cfg.document)
        doc.setdefault("integration", {})
        doc["integration"] = dict(doc["integration"] or {})
        doc["integration"]["dt"] = args.dt
        cfg = parse_config(yaml.safe_dump(doc))
    if getattr(args, "horizon", None) is not None:
        doc = dict(cfg.document)
        doc["integration"] = dict(doc.get("integration") or {})
        doc["integration"]["horizon" if cfg.kind == "scenario" else "t_end"] = args.horizon
        cfg = parse_config(yaml.safe_dump(doc))
    return cfg


def _outdir(args, cfg: RunConfig, default: str) -> str:
    if args.output:
        return args.output
    if cfg.output_dir:
        return cfg.output_dir
    base = os.environ.get("SUPERATOMS_OUTPUT", "out")
    return os.path.join(base, default)


def _print(args, message: str):
    if not args.quiet:
        print(message)


def _run_one(cfg: RunConfig, outdir: str, dump_final: bool):
    dump = os.path.join(outdir, "final_state.bin") if dump_final else ""
    report = run_config(cfg, dump_path=dump)
    write_report(report, outdir)
    return report


def cmd_run(args) -> int:
    cfg = _load_config(args)
    if cfg.sweep:
        raise SuperatomsError("config declares sweep axes: use the 'sweep' subcommand")
    name = cfg.scenario or "custom"
    outdir = _outdir(args, cfg, name)
    dump_final = bool(
        cfg.kind == "custom"
        and (cfg.document.get("output") or {}).get("dump_final_state"))
    t0 = time.time()
    report = _run_one(cfg, outdir, dump_final)
    status = "ok" if report.passed else "FAILED-CHECKS"
    _print(args, f"{name}: {status} ({time.time() - t0:.1f}s) -> {outdir}")
    for c in report.checks:
        _print(args, f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}: "
                     f"{c.value:.6g} {c.op} {c.threshold:g}")
    if args.check and not report.passed:
        return 1
    return 0


def _sweep_worker(item):
    """Run one grid point in a worker process; returns its index entry."""
    i, coords, doc_yaml, pdir = item
    report = _run_one(parse_config(doc_yaml), pdir, False)
    return {"point": i, "coordinates": coords,
            "report": os.path.join(os.path.basename(pdir), "report.json"),
            "passed": report.passed, "metrics": report.metrics}


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if not cfg.sweep:
        raise SuperatomsError("config has no sweep axes")
    name = cfg.scenario or "custom"
    outdir = _outdir(args, cfg, f"{name}_sweep")
    items = [
        (i, coords, derived.to_yaml(), os.path.join(outdir, f"point_{i:03d}"))
        for i, (coords, derived) in enumerate(sweep_points(cfg))
    ]
    jobs = max(1, args.jobs)
    if jobs == 1:
        entries = [_sweep_worker(item) for item in items]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = sorted(pool.map(_sweep_worker, items),
                             key=lambda e: e["point"])

    failed = False
    for entry in entries:
        failed = failed or not entry["passed"]
        _print(args, f"point {entry['point']}: {entry['coordinates']} "
                     f"({'ok' if entry['passed'] else 'FAILED-CHECKS'})")
    _atomic_write(os.path.join(outdir, "index.json"),
                  (json.dumps(entries, sort_keys=True, indent=1) + "\n").encode())
    if args.check and failed:
        return 1
    return 0


def cmd_list(args) -> int:
    for sid in sorted(SCENARIOS):
        _, defaults, description = SCENARIOS[sid]
        print(f"{sid}: {description}")
        if args.verbose:
            for key in sorted(defaults):
                print(f"    {key} = {defaults[key]!r}")
    return 0


def cmd_validate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as f:
        cfg = parse_config(f.read())
    target = cfg.scenario or "custom system"
    axes = f", sweep over {sorted(cfg.sweep)}" if cfg.sweep else ""
    print(f"OK: {target}{axes}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superatoms",
        description="Single-excitation superatom/waveguide simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario or custom config")
    run.add_argument("--config", help="YAML config path")
    run.add_argument("--scenario", help="scenario id with default parameters")
    run.add_argument("--output", help="output directory")
    run.add_argument("--check", action="store_true",
                     help="exit nonzero if any acceptance check fails")
    run.add_argument("--dt", type=float, help="integration step override")
    run.add_argument("--horizon", type=float, help="simulation horizon override")
    run.add_argument("--quiet", action="store_true")
    run.set_defaults(fn=cmd_run)

    sweep = sub.add_parser("sweep", help="run a parameter sweep grid")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--output")
    sweep.add_argument("--check", action="store_true")
    sweep.add_argument("--jobs", type=int, default=1,
                       help="parallel grid points (default 1)")
    sweep.add_argument("--quiet", action="store_true")
    sweep.set_defaults(fn=cmd_sweep)

    ls = sub.add_parser("list-scenarios", help="list scenario ids")
    ls.add_argument("--verbose", action="store_true",
                    help="also print default parameters")
    ls.set_defaults(fn=cmd_list)

    val = sub.add_parser("validate", help="parse and validate a config")
    val.add_argument("--config", required=True)
    val.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SuperatomsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
