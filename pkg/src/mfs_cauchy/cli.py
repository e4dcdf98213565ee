"""
Command-line driver: ``mfs-cauchy {solve,sweep-noise,scan-params}``.

Exit status is 0 on success, 2 for an invalid config or arguments, 3 for a
numerical failure and 4 for an I/O failure.  Errors are also printed to
stderr as a one-line JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from . import __version__
from .config import RunConfig, bundled_configs, load_config
from .errors import ConfigError, MfsError
from .experiments import (
    NoiseSpec,
    collocation_sweep,
    noise_sweep,
    noisy_rhs,
    param_scan,
    prepare,
    solve_cauchy,
)
from .reports import csv_text, json_text, matrix_csv, write_outputs

log = logging.getLogger("mfs_cauchy")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            changes[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            changes[key.strip()] = value.strip()
    unknown = set(changes) - set(cfg.to_dict())
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    return cfg.override(**changes)


def cmd_solve(cfg: RunConfig, args) -> dict:
    prep = prepare(cfg.problem())
    noise = NoiseSpec(cfg.delta, cfg.seed)
    rep = solve_cauchy(prep, noise, cfg.grid(), alpha=cfg.alpha, extra_alphas=cfg.extra_alphas,
                       residual=cfg.residual)
    curve = rep.lcurve
    trace = zip(rep.trace_theta, rep.trace_component, rep.trace_approx, rep.trace_exact)
    lc = zip(curve.alphas, curve.residual_norms, curve.solution_norms, curve.curvatures,
             curve.compatible_residual_norms)
    files = {
        "trace.csv": csv_text(["theta", "component", "u_N", "u_exact"], trace),
        "lcurve.csv": csv_text(["alpha", "residual_norm", "solution_norm", "curvature",
                                "compatible_residual_norm"], lc),
    }
    summary = rep.summary()
    summary["has_corner"] = curve.has_corner
    if cfg.alpha is not None and math.isfinite(rep.error_at_suitable):
        summary["error_ratio_to_corner"] = rep.max_relative_error / rep.error_at_suitable
    if args.dump_matrix:
        files["matrix.csv"] = matrix_csv(prep.system.matrix)
        files["rhs.csv"] = matrix_csv(noisy_rhs(prep, noise)[:, None])
    return {"files": files, "summary": summary}


def cmd_sweep_noise(cfg: RunConfig, args) -> dict:
    if not cfg.deltas:
        raise ConfigError("sweep-noise needs a non-empty 'deltas' list")
    if not cfg.seeds:
        raise ConfigError("sweep-noise needs a non-empty 'seeds' list")
    if len(set(cfg.deltas)) < 2:
        log.warning("only one noise level given; no regression will be fitted")
    rep = noise_sweep(cfg.problem(), cfg.deltas, cfg.seeds, cfg.grid(), cfg.residual, jobs=args.jobs)
    header = ["delta", "seed", "optimal_alpha", "error_at_optimal", "suitable_alpha", "error_at_suitable"]
    med = [(m["delta"], m["optimal_alpha"], m["error_at_optimal"]) for m in rep.medians]
    files = {
        "sweep.csv": csv_text(header, rep.rows),
        "sweep_medians.csv": csv_text(["delta", "optimal_alpha", "error_at_optimal"], med),
    }
    summary = {"medians": rep.medians}
    if rep.error_fit is not None:
        summary["error_fit"] = rep.error_fit
        summary["alpha_fit"] = rep.alpha_fit
    return {"files": files, "summary": summary}


def cmd_scan_params(cfg: RunConfig, args) -> dict:
    noise = NoiseSpec(cfg.delta, cfg.seed)
    if cfg.mode == "M":
        if not cfg.M_values:
            raise ConfigError("scan-params --mode M needs a non-empty 'M_values' list")
        if any(b <= a for a, b in zip(cfg.M_values, cfg.M_values[1:])):
            raise ConfigError("M_values must be strictly increasing")
        rep = collocation_sweep(cfg.boundary(), cfg.exact(), cfg.M_values, cfg.N, cfg.radii(), noise, cfg.grid(),
                                cfg.eval_points, cfg.residual, jobs=args.jobs)
        rows = rep.rows
        files = {"scan.csv": csv_text(["M", "max_relative_error", "suitable_alpha"], rows)}
        return {"files": files, "summary": {"mode": "M", "cells": len(rows),
                                            "failed_cells": sum(not math.isfinite(r[1]) for r in rows)}}
    if not cfg.N_values or not cfg.R_values:
        raise ConfigError("scan-params --mode NR needs non-empty 'N_values' and 'R_values' lists")
    R_values = [cfg.radii(R) for R in cfg.R_values]
    rep = param_scan(cfg.boundary(), cfg.exact(), cfg.M, cfg.N_values, R_values, noise, cfg.grid(),
                     cfg.eval_points, cfg.residual, jobs=args.jobs)
    rows = []
    for N, R, e, a, msg in rep.rows:
        R_out, R_in = (R if isinstance(R, tuple) else (R, None))
        rows.append((N, R_out, R_in, e, a, msg))
    header = ["N", "R", "R_in", "max_relative_error", "suitable_alpha", "error"]
    files = {"scan.csv": csv_text(header, rows)}
    return {"files": files, "summary": {"mode": "NR", "cells": len(rows),
                                        "failed_cells": sum(bool(r[-1]) for r in rows)}}


COMMANDS = {"solve": cmd_solve, "sweep-noise": cmd_sweep_noise, "scan-params": cmd_scan_params}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfs-cauchy",
        description="Regularised MFS solver for the 2-D Laplace Cauchy problem.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--list-configs", action="store_true", help="print the bundled config names and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path or bundled config name")
        p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
        p.add_argument("--seed", type=int, help="override the noise seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps and scans")
        p.add_argument("--alpha", type=float, help="use this α instead of the L-curve corner")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
        p.add_argument("--dump-matrix", action="store_true", help="also write matrix.csv and rhs.csv")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "scan-params":
            p.add_argument("--mode", choices=["NR", "M"], help="(N, R) scan or sweep over M")
    return parser


def _fail(code, exc) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_configs:
        print("\n".join(bundled_configs()))
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = _effective_config(args)
        if getattr(args, "mode", None):
            cfg = cfg.override(mode=args.mode)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)

    try:
        result = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (MfsError, ArithmeticError, ValueError) as exc:
        return _fail(EXIT_NUMERICAL, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)

    summary = {
        "command": args.command,
        "version": __version__,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        **result["summary"],
    }
    files = dict(result["files"])
    files["summary.json"] = json_text(summary)
    try:
        write_outputs(args.out, files)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    log.info("wrote %s to %s", ", ".join(files), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
