"""Command line entry point: ``czlab <experiment> --config PATH [--set sec.key=value]... --out DIR``."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig
from .curve import CurveError
from .grid import GridError, OutOfWindowError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    from .experiments import EXPERIMENTS

    ap = argparse.ArgumentParser(prog="czlab", description="Cauchy commutator experiments on Lipschitz curves")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--config", help="INI file; missing keys fall back to built-in defaults")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    ap.add_argument("--out", required=True, help="output directory")
    return ap


def main(argv=None) -> int:
    from .experiments import EXPERIMENTS

    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config, args.overrides)
        report = EXPERIMENTS[args.experiment](cfg)
    except (ConfigError, OutOfWindowError, CurveError) as e:
        print(f"czlab: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except GridError as e:
        print(f"czlab: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    report.write(args.out, cfg)
    for c in report.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['detail']}")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
