"""Frechet-Kolmogorov profiles of commutator image families.

Images are computed on the symbol's grid; the translation modulus and the
tail norm are measured on an inner window shrunk by the largest shift so
that no translated sample falls off the grid.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridError, GridFunction, OutOfWindowError, shift_cells
from .operators import kernel_sum
from .spaces import IntervalLattice, MorreyParams, bmo_norm, morrey_norm
from .symbols import smooth_bump


@dataclass
class FamilyReport:
    bound: float
    equicontinuity: list = field(default_factory=list)  # (z, sup_f ||T f(. + z) - T f||), z decreasing
    tail: list = field(default_factory=list)  # (alpha, sup_f ||T f chi_{|x| >= alpha}||), alpha increasing
    notes: list = field(default_factory=list)

    def equicontinuity_ratio(self) -> float:
        first = self.equicontinuity[0][1]
        return self.equicontinuity[-1][1] / first if first else 0.0

    def tail_slope(self) -> float:
        a = np.log([t[0] for t in self.tail])
        v = np.log([t[1] for t in self.tail])
        return float(np.polyfit(a, v, 1)[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "parameter", "value"])
        w.writerow(["bound", "", f"{self.bound:.17g}"])
        for z, v in self.equicontinuity:
            w.writerow(["equicontinuity", f"{z:.17g}", f"{v:.17g}"])
        for a, v in self.tail:
            w.writerow(["tail", f"{a:.17g}", f"{v:.17g}"])
        return buf.getvalue()


def commutator_images(curve, b: GridFunction, family) -> list[GridFunction]:
    out = []
    for f in family:
        if not f.is_compatible(b):
            raise GridError("family members must share the symbol lattice")
        out.append(b.with_values(kernel_sum(curve, f, b.midpoints, cutoff=0.5 * b.step, symbol=b)))
    return out


def fk_report(curve, b: GridFunction, family, params: MorreyParams, z_list, alpha_list) -> FamilyReport:
    family = list(family)
    if not family:
        raise GridError("empty family")
    h = b.step
    shifts = sorted({max(1, int(round(z / h))) for z in z_list}, reverse=True)
    K = shifts[0]
    if 2 * K >= b.n:
        raise OutOfWindowError("shifts exceed the symbol window")
    inner = slice(K, b.n - K)
    base = GridFunction(b.origin + K * h, h, np.zeros(b.n - 2 * K))
    half = base.n * h / 2
    if max(alpha_list) > b.n * h / 4 * (1 + 1e-12):
        raise OutOfWindowError(f"alpha up to {max(alpha_list):g} needs window length >= {4 * max(alpha_list):g}")
    lat = IntervalLattice.for_function(base)
    images = commutator_images(curve, b, family)
    rep = FamilyReport(bound=max(morrey_norm(base.with_values(g.values[inner]), params, lat) for g in images))
    for k in shifts:
        val = 0.0
        for g in images:
            d = shift_cells(g.values, k) - g.values
            val = max(val, morrey_norm(base.with_values(d[inner]), params, lat))
        rep.equicontinuity.append((k * h, val))
    x = base.midpoints
    center = base.origin + half
    for a in sorted(alpha_list):
        mask = np.abs(x - center) >= a
        rep.tail.append(
            (float(a), max(morrey_norm(base.with_values(g.values[inner] * mask), params, lat) for g in images))
        )
    rep.notes.append("uniformity sampled on finite z and alpha lattices")
    return rep


@dataclass(frozen=True)
class SmoothedSymbol:
    b_eps: GridFunction
    distance: float  # bmo_norm(b - b_eps) on the symbol window
    epsilon: float
    radius: float


def _cutoff(x, R):
    """1 on |x| <= R, 0 on |x| >= 2R, smooth in between."""
    s = np.clip((np.abs(x) - R) / R, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s < 1, np.exp(-1.0 / np.maximum(1 - s, 1e-300)), 0.0)
        c = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
    return a / (a + c)


def smooth_truncate_symbol(b: GridFunction, epsilon: float, radius: float | None = None) -> SmoothedSymbol:
    """Mollify at scale ``epsilon`` and cut off smoothly outside ``radius`` around the window centre."""
    if not epsilon > 0:
        raise GridError("epsilon must be positive")
    h = b.step
    m = int(math.floor(epsilon / h))
    if m >= 1:
        kern = smooth_bump(np.arange(-m, m + 1) * h / epsilon)
        kern = kern / kern.sum()
        v = np.convolve(b.values, kern, mode="same")
    else:
        v = b.values.copy()
    center = b.origin + b.n * h / 2
    R = radius if radius is not None else b.n * h / 4
    v = v * _cutoff(b.midpoints - center, R)
    out = b.with_values(v)
    return SmoothedSymbol(out, bmo_norm(b - out), float(epsilon), float(R))
