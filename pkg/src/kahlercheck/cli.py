"""Command line: ``list``, ``check`` and ``convergence``.

Exit codes: 0 when every applicable check passes, 1 when a check fails,
2 on configuration or evaluation errors.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .catalog import entry_names, get_entry, list_entries
from .checks import Tolerances, Verdict
from .config import FORMATS, RunConfig, load_config
from .errors import ConfigError, EngineError
from .jetcalc import DEFAULT_H
from .report import build_report, canonical_json, convergence_csv, convergence_table, emit
from .runner import convergence, resolve_checks, run

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _parse_grid(text):
    try:
        vals = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"--grid: expected integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise ConfigError(f"--grid: expected positive integers, got {text!r}")
    return vals[0] if len(vals) == 1 else vals


def _parse_floats(text, flag):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{flag}: expected numbers, got {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise ConfigError(f"{flag}: expected positive numbers, got {text!r}")
    return vals


def _parse_checks(text):
    names = [n.strip() for n in text.replace(",", " ").split()]
    try:
        return resolve_checks("all" if names == ["all"] else names)
    except ValueError as exc:
        raise ConfigError(f"--checks: {exc}") from None


def resolve_target(target: str) -> RunConfig:
    """A config file path or a catalog entry name -> :class:`RunConfig`."""
    if os.path.isfile(target):
        return load_config(target)
    try:
        imm = get_entry(target)
    except KeyError:
        raise ConfigError(f"{target!r} is neither a config file nor a catalog entry "
                          f"(entries: {', '.join(entry_names())})") from None
    return RunConfig(immersion=imm, entry=target, checks=resolve_checks("all"))


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.checks is not None:
        cfg.checks = _parse_checks(args.checks)
    if getattr(args, "h", None) is not None:
        cfg.h = _parse_floats(args.h, "--h")[0]
    if args.grid is not None:
        cfg.points = _parse_grid(args.grid)
    if args.out is not None:
        cfg.outPath = args.out
    if args.format is not None:
        cfg.outFormat = args.format
    return cfg


def _write(data: bytes, path):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def cmd_list(args) -> int:
    entries = list_entries()
    if args.json:
        _write(canonical_json(entries).encode("utf-8"), None)
        return EXIT_PASS
    width = max(len(e["name"]) for e in entries)
    for e in entries:
        print(f"{e['name']:<{width}}  {e['target']:<14}  dim={e['dim']}  grid={e['grid']}^{e['dim']}  "
              f"{e['description']}")
    return EXIT_PASS


def cmd_check(args) -> int:
    cfg = _apply_overrides(resolve_target(args.target), args)
    started = time.perf_counter()
    result = run(cfg.immersion, points=cfg.points, h=cfg.h, tol=cfg.tolerances, checks=cfg.checks)
    elapsed = time.perf_counter() - started
    if result.errors and len(result.errors) == len(result.grid):
        print(f"error: every sample failed to evaluate; first: {result.errors[0][1]}", file=sys.stderr)
        return EXIT_ERROR
    report = build_report(result, cfg.echo())
    _write(emit(report, cfg.outFormat), cfg.outPath)
    for a in result.aggregates:
        if a.verdict is Verdict.FAIL:
            shown = a.maxResidual if a.minMargin is None else a.minMargin
            print(f"FAIL {a.name}: {shown}", file=sys.stderr)
    print(f"{result.entry}: {result.verdict.value} ({len(result.grid)} samples, {len(result.errors)} errors, "
          f"{elapsed:.2f}s)", file=sys.stderr)
    return EXIT_PASS if result.verdict is Verdict.PASS else EXIT_FAIL


def cmd_convergence(args) -> int:
    cfg = resolve_target(args.target)
    hs = _parse_floats(args.h, "--h")
    if len(hs) < 2:
        raise ConfigError("--h: need at least two steps")
    points = _parse_grid(args.grid) if args.grid is not None else cfg.points
    rows, orders = convergence(cfg.immersion, args.check, hs, points=points, tol=cfg.tolerances)
    table = convergence_table(args.check, rows, orders)
    table["entry"] = cfg.immersion.name
    data = canonical_json(table).encode("utf-8") if args.format == "json" else convergence_csv(table).encode("utf-8")
    _write(data, args.out)
    ok = table["monotone"] and all(o >= args.min_order for o in orders)
    print(f"{cfg.immersion.name} {args.check}: orders {', '.join(f'{o:.3g}' for o in orders)}; "
          f"{'monotone' if table['monotone'] else 'not monotone'}", file=sys.stderr)
    return EXIT_PASS if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kahlercheck", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ls = sub.add_parser("list", help="list catalog entries")
    ls.add_argument("--json", action="store_true", help="emit entries with expected flags as JSON")
    ls.set_defaults(func=cmd_list)

    ck = sub.add_parser("check", help="run checks on a catalog entry or config file")
    ck.add_argument("target", help="catalog entry name or path to a config file")
    ck.add_argument("--checks", help="comma separated check names, or 'all'")
    ck.add_argument("--h", help=f"relative finite-difference step (default {DEFAULT_H:g})")
    ck.add_argument("--grid", help="points per axis: one integer or one per axis")
    ck.add_argument("--out", help="output path ('-' or omitted for stdout)")
    ck.add_argument("--format", choices=FORMATS, help="report format (default json)")
    ck.set_defaults(func=cmd_check)

    cv = sub.add_parser("convergence", help="residual versus step size for one check")
    cv.add_argument("target", help="catalog entry name or path to a config file")
    cv.add_argument("--check", required=True, help="residual check name")
    cv.add_argument("--h", required=True, help="comma separated relative steps, largest first")
    cv.add_argument("--grid", help="points per axis")
    cv.add_argument("--min-order", type=float, default=2.0, help="observed order required for exit 0")
    cv.add_argument("--out", help="output path ('-' or omitted for stdout)")
    cv.add_argument("--format", choices=FORMATS, default="csv")
    cv.set_defaults(func=cmd_convergence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except EngineError as exc:
        print(f"evaluation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
