"""Command-line shell: surface builds, frontier extraction, point queries,
Monte Carlo runs, diagnostics, and the HTTP service."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..serialize import canonical_json
from .archive import SurfaceArchive
from .config import ConfigError, load_config
from .queries import (
    build_archive,
    diagnose_payload,
    frontiers_payload,
    mc_payload,
    probability_payload,
    solve_payload,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morseplan",
                                description="Goal-based contribution planning engine")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("surface", help="build the probability surface and persist it")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--no-frontiers", action="store_true",
                    help="skip frontier extraction at the plan's confidence levels")

    fp = sub.add_parser("frontiers", help="extract frontier polylines from an archive")
    fp.add_argument("archive")
    fp.add_argument("--levels", default=None,
                    help="comma-separated probability levels (default: plan levels)")
    fp.add_argument("--out", default=None)
    fp.add_argument("--format", choices=("json", "csv"), default="json")

    vp = sub.add_parser("solve", help="contribution rate hitting a confidence level")
    vp.add_argument("--config", default=None)
    vp.add_argument("--archive", default=None)
    vp.add_argument("--xi", type=float, required=True)
    vp.add_argument("--alpha", type=float, required=True)
    vp.add_argument("--out", default=None)

    pp = sub.add_parser("probability", help="tail probability for one policy")
    pp.add_argument("--config", required=True)
    pp.add_argument("--u0", type=float, required=True)
    pp.add_argument("--xi", type=float, required=True)
    pp.add_argument("--out", default=None)

    mp = sub.add_parser("mc", help="Monte Carlo oracle estimate")
    mp.add_argument("--config", required=True)
    mp.add_argument("--u0", type=float, required=True)
    mp.add_argument("--xi", type=float, required=True)
    mp.add_argument("--paths", type=int, default=200_000)
    mp.add_argument("--seed", type=int, default=0)
    mp.add_argument("--steps-per-year", type=int, default=252)
    mp.add_argument("--coordinate", choices=("wealth", "verhulst"), default="wealth")
    mp.add_argument("--threads", type=int, default=1)
    mp.add_argument("--out", default=None)

    dp = sub.add_parser("diagnose", help="truncation-health report for one policy")
    dp.add_argument("--config", required=True)
    dp.add_argument("--u0", type=float, default=None)
    dp.add_argument("--xi", type=float, default=None)
    dp.add_argument("--out", default=None)

    hp = sub.add_parser("serve", help="start the HTTP service")
    hp.add_argument("--config", default=None, help="plan registered at startup")
    hp.add_argument("--archive", default=None, help="prebuilt surface registered at startup")
    hp.add_argument("--host", default=None)
    hp.add_argument("--port", type=int, default=8080)
    hp.add_argument("--threads", type=int, default=2)

    cp = sub.add_parser("export-csv", help="export an archive's surface as CSV")
    cp.add_argument("archive")
    cp.add_argument("--out", required=True)
    return p


def _emit(payload: dict, out: str | None) -> None:
    text = canonical_json(payload)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _frontier_csv(payload: dict) -> str:
    lines = ["level,polyline,xi,y"]
    for entry in payload["frontiers"]:
        for pi, pol in enumerate(entry["polylines"]):
            for (xi, y) in pol:
                lines.append(f"{entry['level']!r},{pi},{xi!r},{y!r}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(canonical_json({"error": str(exc)}) + "\n")
        return 2
    except Exception as exc:  # build/runtime failures
        sys.stderr.write(canonical_json({"error": f"{type(exc).__name__}: {exc}"}) + "\n")
        return 1


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "surface":
        config = load_config(args.config)
        if args.threads is not None:
            from dataclasses import replace
            config = type(config)(plan=config.plan, market=config.market,
                                  solver=replace(config.solver, threads=args.threads))
        archive = build_archive(config, with_frontiers=not args.no_frontiers)
        archive.save(args.out)
        _emit({"written": str(args.out),
               "shape": list(archive.surface.shape),
               "provenance": archive.surface.grid.provenance}, None)
        return 0

    if cmd == "frontiers":
        archive = SurfaceArchive.load(args.archive)
        levels = None
        if args.levels:
            levels = [float(tok) for tok in args.levels.split(",") if tok]
        payload = frontiers_payload(archive, levels)
        if args.format == "csv":
            text = _frontier_csv(payload)
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
        else:
            _emit(payload, args.out)
        return 0

    if cmd == "solve":
        if args.archive:
            archive = SurfaceArchive.load(args.archive)
        elif args.config:
            archive = build_archive(load_config(args.config), with_frontiers=False)
        else:
            raise ConfigError("solve: provide --archive or --config")
        _emit(solve_payload(archive, args.xi, args.alpha), args.out)
        return 0

    if cmd == "probability":
        _emit(probability_payload(load_config(args.config), args.u0, args.xi), args.out)
        return 0

    if cmd == "mc":
        payload = mc_payload(load_config(args.config), args.u0, args.xi,
                             n_paths=args.paths, seed=args.seed,
                             steps_per_year=args.steps_per_year,
                             coordinate=args.coordinate, threads=args.threads)
        _emit(payload, args.out)
        return 0

    if cmd == "diagnose":
        _emit(diagnose_payload(load_config(args.config), args.u0, args.xi), args.out)
        return 0

    if cmd == "export-csv":
        SurfaceArchive.load(args.archive).to_csv(args.out)
        _emit({"written": str(args.out)}, None)
        return 0

    if cmd == "serve":
        import os

        import uvicorn

        from .http import create_app

        app = create_app(config_path=args.config, archive_path=args.archive,
                         build_threads=args.threads)
        host = args.host or os.environ.get("MORSEPLAN_HOST", "127.0.0.1")
        uvicorn.run(app, host=host, port=args.port)
        return 0

    raise ConfigError(f"unknown command {cmd!r}")


if __name__ == "__main__":
    raise SystemExit(main())
