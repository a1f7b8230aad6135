"""Command-line front end.

Subcommands: closed-form, simulate, sweep, verify, plot-f.
Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .params import InvalidParameterError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="gravent", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="YAML run configuration")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--threads", type=int, help="worker threads (overrides the config)")

    sp = sub.add_parser("closed-form", help="evaluate the closed-form predictions")
    common(sp)
    sp = sub.add_parser("simulate", help="stationary-phase simulation of one point")
    common(sp)
    sp.add_argument("--tolerance", type=float, help="enable the node-doubling check at this tolerance")
    sp = sub.add_parser("sweep", help="parameter sweep to CSV (resumable)")
    common(sp)
    sp.add_argument("--tolerance", type=float, help="enable the node-doubling check at this tolerance")
    sp = sub.add_parser("verify", help="run the acceptance checks")
    common(sp, config_required=False)
    sp.add_argument("--criteria", type=int, nargs="+", metavar="N", help="subset of criteria (1-10)")
    sp = sub.add_parser("plot-f", help="emit f0, f2, f4 as CSV and SVG")
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--x-min", type=float, default=0.0)
    sp.add_argument("--x-max", type=float, default=5.0)
    sp.add_argument("--points", type=int, default=501)
    return p


def _load(args):
    cfg = load_config(args.config)
    tol = getattr(args, "tolerance", None)
    cfg = cfg.with_overrides(output=args.out, threads=args.threads, tolerance=tol)
    if tol is not None:
        cfg = dataclasses.replace(cfg, numerics=dataclasses.replace(cfg.numerics, check_convergence=True))
    return cfg


def _verify(args) -> int:
    from .verification import Verifier

    out = Path(args.out) if args.out else None
    if args.config:
        # only the output location is taken from a config here
        cfg = _load(args)
        out = out or Path(cfg.output)
    if args.threads is not None and args.threads < 1:
        raise ConfigError("must be >= 1", "threads")
    numbers = args.criteria or list(range(1, 11))
    bad = [n for n in numbers if not 1 <= n <= 10]
    if bad:
        raise ConfigError(f"unknown criteria {bad}", "criteria")
    results = []
    verifier = Verifier()
    for n in numbers:
        r = verifier.run([n])[0]
        print(r.line(), flush=True)
        results.append(r)
    payload = {"passed": all(r.passed for r in results), "criteria": [r.as_dict() for r in results]}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "verify.json", "w") as fh:
            fh.write(json.dumps(payload, sort_keys=True, indent=2, default=float) + "\n")
    return EXIT_OK if payload["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "plot-f":
            from .runs import emit_ffunction_plot

            emit_ffunction_plot(args.out, args.x_min, args.x_max, args.points)
            print(f"wrote {Path(args.out) / 'f_functions.csv'} and .svg")
            return EXIT_OK
        if args.command == "verify":
            return _verify(args)
        cfg = _load(args)
        from . import runs

        if args.command == "closed-form":
            print(runs.run_closed_form(cfg).text())
        elif args.command == "simulate":
            print(runs.run_simulate(cfg).text())
        elif args.command == "sweep":
            print(f"wrote {runs.run_sweep(cfg)}")
        return EXIT_OK
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
