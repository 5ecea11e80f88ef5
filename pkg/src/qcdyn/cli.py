"""Command-line front end: run / sweep / diagram / examples / validate.

Exit codes: 0 success, 1 usage or configuration problems, 2 numerical
failures (drift guards, aliasing, fit refusals)."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .configio import apply_overrides, load_config, scenario_hash
from .errors import (ConfigError, DomainError, FitError, InsufficientDataError,
                     NumericsError, UsageError)
from .runner import examples_table, run_diagram, run_scenario, run_sweep

USAGE_ERRORS = (UsageError, ConfigError, DomainError)
NUMERICAL_ERRORS = (NumericsError, FitError, InsufficientDataError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="qcdyn",
        description="Quantum-classical correspondence toolkit: wave-packet, "
                    "trajectory and ensemble dynamics with Ehrenfest/revival "
                    "time extraction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="scenario YAML file")
        p.add_argument("--out", default=None,
                       help="output directory (default runs/<label>-<hash>)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes for sweeps "
                            "(default $QCDYN_THREADS or 1)")
        p.add_argument("--seed-override", type=int, default=None,
                       help="replace the ensemble seed from the config")
        p.add_argument("--quick", action="store_true",
                       help="reduced swarm/grid/window for smoke runs")

    add_common(sub.add_parser("run", help="execute one scenario"))
    add_common(sub.add_parser("sweep", help="tau scaling over hbar or N"))
    add_common(sub.add_parser("diagram",
                              help="Ehrenfest-vs-revival diagram dataset"))
    add_common(sub.add_parser("validate", help="lint a scenario file"))
    sub.add_parser("examples",
                   help="closed-form tau/T_c table for the worked examples")
    return parser


def _thread_count(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        return args.threads
    env = os.environ.get("QCDYN_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"QCDYN_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise UsageError(f"QCDYN_THREADS must be >= 1, got {n}")
        return n
    return 1


def _load(args):
    cfg = load_config(args.config)
    cfg = apply_overrides(cfg, seed_override=args.seed_override,
                          quick=args.quick)
    return cfg


def _out_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    return Path("runs") / f"{cfg.label}-{scenario_hash(cfg)[:12]}"


def _print_examples() -> None:
    rows = examples_table()
    print(f"{'system':<42} {'tau/T_c':>12} {'T_r/T_c':>12}  tau (absolute)")
    for row in rows:
        if "tau_years" in row:
            absolute = f"{row['tau_years']:.3g} years"
        else:
            absolute = f"{row['tau_seconds']:.3g} s"
        print(f"{row['system']:<42} {row['tau_over_Tc']:>12.3g} "
              f"{row['Tr_over_Tc']:>12.3g}  {absolute}")


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "examples":
            _print_examples()
            return 0

        cfg = _load(args)
        if args.command == "validate":
            print(f"OK {args.config}: kind={cfg.kind} label={cfg.label} "
                  f"hash={scenario_hash(cfg)[:12]}")
            return 0

        threads = _thread_count(args)
        out_dir = _out_dir(args, cfg)
        if args.command == "run":
            run_scenario(cfg, out_dir, threads=threads)
            print(f"run complete: {out_dir}")
        elif args.command == "sweep":
            run_sweep(cfg, out_dir, threads=threads)
            with open(out_dir / "scaling.json", "r", encoding="utf-8") as fh:
                scaling = json.load(fh)
            print(f"sweep complete: {out_dir} "
                  f"slope={scaling['slope']:.4f} r2={scaling['r_squared']:.4f}")
        elif args.command == "diagram":
            run_diagram(cfg, out_dir, threads=threads)
            print(f"diagram complete: {out_dir}")
        return 0
    except USAGE_ERRORS as exc:
        print(f"qcdyn: error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"qcdyn: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
