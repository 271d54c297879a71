"""Command-line entry point: ``surftrace <stage> [flags]``.

Exit codes: 0 success, 2 usage, 3 data (missing stage, malformed table),
4 table version mismatch, 5 computation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import ConfigError, build_config, parse_config_text
from .pipeline import STAGES, Pipeline, map_exception

log = logging.getLogger("surftrace")

_FLAGS = (
    ("--z", int, "nonzero surface parameter"),
    ("--pmax", int, "largest prime counted"),
    ("--p2max", int, "largest prime with an F_{p^2} count"),
    ("--rmax", int, "bound on the p-multiples in the correction law"),
    ("--cmax", int, "bound on the constants in the correction law"),
    ("--min-support", int, "calibration primes needed per symbol class"),
    ("--epsilon", str, "character file for the twist (default: calibrated unit)"),
    ("--seed", int, "Monte Carlo seed"),
    ("--workers", int, "worker processes"),
    ("--out", str, "output directory"),
    ("--verify-max", int, "largest prime cross-checked against brute-force oracles"),
    ("--mc-samples", int, "Monte Carlo samples per reference group"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="surftrace", description="Frobenius trace engine for t^2 = xy(x^2-1)(y^2-1)(x^2-y^2+zxy).")
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run the {stage} stage")
        sp.add_argument("--config", type=Path, help="key = value configuration file")
        sp.add_argument("-v", "--verbose", action="store_true")
        for flag, kind, text in _FLAGS:
            sp.add_argument(flag, type=kind, default=None, help=text)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        file_values = parse_config_text(args.config.read_text(encoding="utf-8")) if args.config else {}
        flags = {flag[2:].replace("-", "_"): getattr(args, flag[2:].replace("-", "_")) for flag, _, _ in _FLAGS}
        cfg = build_config(file_values, flags)
        pipe = Pipeline(cfg)
        ran = pipe.run(args.stage)
    except OSError as exc:
        print(f"surftrace: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - mapped to documented exit codes
        code = map_exception(exc)
        if code is None:
            raise
        print(f"surftrace: {exc}", file=sys.stderr)
        return code
    print(f"{args.stage}: {'done' if ran else 'already complete'} ({cfg.out})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
