"""Command-line front end.

Subcommands: ``simulate``, ``sweep``, ``contour``, ``turning-point`` and
``calibrate-bath``.  Settings come from ``--config PATH`` and per-key
overrides (``--J 1MHz`` or ``--set J=1MHz``).

Exit codes: 0 success, 2 config error, 3 simulation error, 4 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ALIASES, KINDS, RunConfig, apply_overrides, parse_config, serialize_config
from .engine import calibrate_bath_scaling
from .errors import BudgetExceeded, CDDError, ConfigError, SequenceFileInvalid
from .sweep import (contour_export, contour_to_json, contour_to_text, group_cells, model_from_config,
                    records_to_csv, records_to_json, run_single, run_sweep, turning_point)

EXIT_OK, EXIT_CONFIG, EXIT_SIM, EXIT_BUDGET = 0, 2, 3, 4
COMMANDS = ("simulate", "sweep", "contour", "turning-point", "calibrate-bath")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        help="override one config key (repeatable)")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    keys = common.add_argument_group("config keys")
    for key in KINDS:
        if key in ("out", "format"):
            continue
        keys.add_argument(f"--{key.replace('_', '-')}", dest=f"key_{key}", metavar="VALUE")

    parser = argparse.ArgumentParser(prog="cddsim", description="CDD-protected DFS gate simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="records for n = 0..n_max plus free baselines")
    sub.add_parser("sweep", parents=[common], help="(J, beta) grid sweep")
    p = sub.add_parser("contour", parents=[common], help="log10(1-F) grid at a fixed level")
    p.add_argument("--level", type=int, help="concatenation level (default n_max)")
    sub.add_parser("turning-point", parents=[common], help="turning point per (J, beta) cell")
    p = sub.add_parser("calibrate-bath", parents=[common], help="bath-size scaling report")
    p.add_argument("--sizes", default="2,3,4,5", help="comma-separated bath sizes")
    sub.add_parser("show-config", parents=[common], help="print the resolved config")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = parse_config(text)
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[ALIASES.get(k.strip(), k.strip())] = v
    for key in KINDS:
        v = getattr(args, f"key_{key}", None)
        if v is not None:
            overrides[key] = v
    if args.out is not None:
        overrides["out"] = args.out
    if args.format is not None:
        overrides["format"] = args.format
    return apply_overrides(cfg, overrides) if overrides else cfg


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _records_text(records, cfg: RunConfig) -> str:
    return records_to_json(records, cfg) if cfg.format == "json" else records_to_csv(records)


def _run(args) -> None:
    cfg = resolve_config(args)
    cmd = args.command
    if cmd == "show-config":
        _emit(serialize_config(cfg), cfg)
    elif cmd == "simulate":
        _emit(_records_text(run_single(cfg), cfg), cfg)
    elif cmd == "sweep":
        _emit(_records_text(run_sweep(cfg), cfg), cfg)
    elif cmd == "contour":
        level = cfg.n_max if args.level is None else args.level
        if not 0 <= level <= cfg.n_max:
            raise ConfigError(f"--level must lie in 0..n_max={cfg.n_max}")
        grid = contour_export(run_sweep(cfg.replace(n_max=level)), level, cfg.delta,
                              cfg.J_values, cfg.beta_values)
        _emit(contour_to_json(grid) if cfg.format == "json" else contour_to_text(grid), cfg)
    elif cmd == "turning-point":
        cells = group_cells(run_sweep(cfg))
        rows = [(J, b, turning_point(recs)) for (J, b), recs in cells.items()]
        if cfg.format == "json":
            text = json.dumps({"schema_version": 1, "n_max": cfg.n_max, "gate": cfg.gate,
                               "cells": [{"J_rads": J, "beta_rads": b, "turning_point": t}
                                         for J, b, t in rows]}, indent=2) + "\n"
        else:
            text = "J_rads,beta_rads,turning_point\n" + "".join(f"{J!r},{b!r},{t}\n" for J, b, t in rows)
        _emit(text, cfg)
    elif cmd == "calibrate-bath":
        try:
            sizes = tuple(int(s) for s in args.sizes.split(","))
        except ValueError:
            raise ConfigError(f"--sizes expects integers, got {args.sizes!r}") from None
        report = calibrate_bath_scaling(model_from_config(cfg.replace(bath_count=1)), sizes)
        doc = {"schema_version": 1, "bath_sizes": list(report.bath_sizes),
               "one_minus_F": list(report.one_minus_F), "slope": report.slope,
               "intercept": report.intercept, "J_exponent": report.exponent,
               "multiplier": report.multiplier, "reference_size": report.reference_size,
               "target_size": report.target_size, "applied": report.applied, "notes": list(report.notes)}
        if cfg.format == "json":
            _emit(json.dumps(doc, indent=2) + "\n", cfg)
        else:
            lines = ["bath_count,one_minus_F"] + [f"{s},{v!r}" for s, v in report.pairs()]
            lines.append(f"# multiplier {report.multiplier!r} (not applied; set bath_scaling to opt in)")
            _emit("\n".join(lines) + "\n", cfg)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except (ConfigError, SequenceFileInvalid) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (CDDError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
