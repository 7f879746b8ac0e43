"""Print N * |C g(x0)| for the built-in curves over a range of separations N."""
from __future__ import annotations

import argparse

from czlab.experiments import homogeneity_table

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--curves", default="flat,sawtooth,sawtooth1,bump")
    ap.add_argument("--N", default="16,32,64,128,256,512,1024,2048")
    ap.add_argument("--radius", type=float, default=1.0)
    a = ap.parse_args()
    rows = homogeneity_table(a.curves.split(","), [int(n) for n in a.N.split(",")], a.radius)
    print("curve,N,N_abs_cg")
    for r in rows:
        print(",".join(str(v) for v in r))
