"""Command line entry point: ``polmod simulate | bounds | selftest``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis, harness, selftest
from .config import ConfigError, load_config


def _simulate(args) -> int:
    cfg = load_config(args.config)
    if args.override:
        cfg = cfg.with_overrides(args.override)
    if args.seed is not None:
        cfg = cfg.with_overrides({"scenario.seed": str(args.seed)})
    threads = harness.resolve_threads(args.threads)

    def progress(r):
        if not args.quiet:
            print(f"axis={r.axis_value:g} ber={r.ber:.3e} bler={r.bler:.3e} "
                  f"T={r.throughput_kbps:.2f} kbps blocks={r.n_blocks}", file=sys.stderr)

    records = harness.run_sweep(cfg, threads=threads, progress=progress)
    text = harness.format_csv(records, with_interference=cfg.interference)
    if args.out:
        with open(args.out, "wb") as f:
            f.write(text.encode())
    else:
        sys.stdout.write(text)
    return 0


def _bounds(args) -> int:
    values = np.arange(args.start, args.stop + args.step / 2, args.step)
    lines = ["gamma_bar,bound,gamma_bar_db"]
    for db in values:
        db = float(db)
        g = 10 ** (db / 10)
        b = analysis.pe_rayleigh_bound(g) if args.k_factor == 0 else analysis.pe_rician_bound(g, args.k_factor)
        lines.append(f"{g!r},{b!r},{db!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _selftest(args) -> int:
    return 0 if selftest.run() else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polmod", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario sweep and write CSV")
    s.add_argument("--config", required=True, help="scenario file (key = value lines)")
    s.add_argument("--out", help="output CSV path (stdout if omitted)")
    s.add_argument("--seed", type=int, help="master seed, overrides scenario.seed")
    s.add_argument("--threads", type=int, default=1, help="worker threads (POLMOD_THREADS wins)")
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; may be repeated")
    s.add_argument("--quiet", action="store_true", help="no per-point progress on stderr")
    s.set_defaults(func=_simulate)

    b = sub.add_parser("bounds", help="union-bound SER of PMod/QPSK versus per-polarization SNR")
    b.add_argument("--start", type=float, default=0.0, help="first SNR in dB")
    b.add_argument("--stop", type=float, default=20.0, help="last SNR in dB")
    b.add_argument("--step", type=float, default=2.0)
    b.add_argument("--k-factor", type=float, default=0.0, help="Rician K (0 gives the Rayleigh closed form)")
    b.add_argument("--out", help="output CSV path (stdout if omitted)")
    b.set_defaults(func=_bounds)

    t = sub.add_parser("selftest", help="run the oracle-equivalence checks")
    t.set_defaults(func=_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"polmod: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
