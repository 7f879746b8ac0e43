"""Run every experiment with the sample configs and summarise exit codes.

Usage: python scripts/run_all.py [OUT_DIR] [--quick]
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from czlab.cli import main

HERE = Path(__file__).resolve().parent
ORDER = ["kernelcheck", "lowerbound", "boundedness", "compactness", "factorization"]


def run(out: Path, quick: bool) -> int:
    worst = 0
    for name in ORDER:
        cfg = HERE / "configs" / (f"{name}_quick.ini" if quick else f"{name}.ini")
        args = [name, "--out", str(out / name)]
        if cfg.exists():
            args += ["--config", str(cfg)]
        t0 = time.perf_counter()
        code = main(args)
        print(f"== {name}: exit {code} in {time.perf_counter() - t0:.1f}s\n")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="runs")
    ap.add_argument("--quick", action="store_true", help="use the reduced *_quick.ini configs")
    a = ap.parse_args()
    sys.exit(run(Path(a.out), a.quick))
