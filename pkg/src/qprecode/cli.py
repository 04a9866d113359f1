"""Command line entry point: ``qprecode sweep | converge | selftest``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import harness
from .errors import ConfigurationError, SweepError


def _add_config_flags(p):
    p.add_argument("--config", help="INI file with [system], [sweep], [run], [output]")
    p.add_argument("--profile", choices=["full", "fast"], default="full",
                   help="defaults before the config file is applied")
    for section in harness.SECTIONS.values():
        for f in dataclasses.fields(section):
            p.add_argument(f"--{f.name}", dest=f"cfg_{f.name}", metavar="VALUE",
                           help=f"override {f.name}")


def _config(args):
    base = harness.fast_profile() if args.profile == "fast" else harness.SimConfig()
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return harness.load_config(args.config, overrides, base=base)


def cmd_sweep(args):
    config = _config(args)
    out = Path(args.out or config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    result = harness.run_sweep(config)
    harness.emit_csv(result, out / "sweep.csv")
    if config.output.emit_plot:
        harness.emit_plot(result, out / "sweep.svg")
    harness.emit_meta(result, config, out / "run_meta.json")
    print(f"{'snr_db':>7} {'scheme':<13} {'mean':>8} {'stderr':>7}")
    for r in result.rows:
        print(f"{r.snr_db:7.1f} {r.scheme:<13} {r.mean_sum_rate:8.3f} {r.stderr:7.3f}")
    print(f"wrote {out}/sweep.csv ({result.metadata['elapsed_s']:.1f}s)")
    return 0


def cmd_converge(args):
    config = _config(args)
    out = Path(args.out or config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    rows = harness.run_convergence_trace(config, args.snr, args.drop_seed, oracle=args.oracle)
    path = harness.emit_convergence_csv(rows, out / "converge.csv")
    for row in rows:
        print(f"{row['iteration']:3d} {row['sum_rate']:9.4f} {row['objective']:10.4f}")
    print(f"wrote {path}")
    return 0


def cmd_selftest(args):
    from .selftest import run_selftest

    return 0 if run_selftest(args.seed) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="qprecode", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte Carlo sum rate versus SNR")
    _add_config_flags(p)
    p.add_argument("--out", help="output directory (overrides [output] directory)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("converge", help="per-iteration trace of the SD-based WMMSE run")
    _add_config_flags(p)
    p.add_argument("--snr", type=float, required=True, help="SNR in dB")
    p.add_argument("--drop-seed", type=int, default=0, help="drop index within the seed stream")
    p.add_argument("--oracle", action="store_true",
                   help="also run the exhaustive subproblem solver (tiny systems only)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("selftest", help="oracle cross-checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigurationError, SweepError) as exc:
        print(f"qprecode: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
