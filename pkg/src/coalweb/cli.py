"""Command-line entry point ``coalweb``."""

from __future__ import annotations

import argparse
import os
import sys

from . import kernels
from .acceptance import SUITES, format_table, run_suite
from .config import ConfigError, parse_seed, load_config
from .lattice_webs import ResourceError, TruncationError

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=parse_seed, default=None, help="root seed (unsigned 64-bit), overrides the config")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    p.add_argument("--out", default=None, help="output directory, overrides the config")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coalweb", description="Coalescing random walk webs and their limits.")
    ap.add_argument("--version", action="version", version=f"coalweb ({kernels.BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config, write results.csv and report.json")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("acceptance", help="run an acceptance suite or all of them")
    p.add_argument("suite", help="suite name or 'all'")
    _common(p)

    p = sub.add_parser("export-paths", help="write one realisation of the configured web to paths.txt")
    p.add_argument("config")
    p.add_argument("--format", choices=["pathset"], default="pathset")
    _common(p)
    return ap


def _load(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, out=args.out)


def _cmd_run(args) -> int:
    from .experiments import run

    cfg = _load(args)
    rep = run(cfg, threads=max(1, args.threads), out_dir=cfg["out"])
    for c in rep.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.criterion}: observed {c.observed}, target {c.target} ({c.tolerance})")
    print(f"wrote {cfg['out']}/results.csv and report.json ({len(rep.rows)} rows, {len(rep.checks)} checks)")
    return 0 if rep.passed else EXIT_FAIL


def _cmd_acceptance(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        print(f"unknown suite {unknown[0]!r}; available: {', '.join(SUITES)}, all", file=sys.stderr)
        return EXIT_USAGE
    results = []
    for n in names:
        r = run_suite(n, threads=max(1, args.threads))
        results.append(r)
    print(format_table(results))
    if args.out:
        import json
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        doc = [
            {"suite": r.name, "number": r.number, "passed": r.passed, "lines": [ln.__dict__ for ln in r.lines]}
            for r in results
        ]
        (out / "acceptance.json").write_text(json.dumps(doc, indent=2) + "\n")
    return 0 if all(r.passed for r in results) else EXIT_FAIL


def _cmd_export(args) -> int:
    from .experiments import export_paths

    cfg = _load(args)
    K = export_paths(cfg, cfg["out"])
    print(f"wrote {len(K)} paths to {cfg['out']}/paths.txt")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "acceptance":
            return _cmd_acceptance(args)
        return _cmd_export(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, TruncationError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
