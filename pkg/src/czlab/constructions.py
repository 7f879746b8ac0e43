"""Oscillation sets and lower-bound test functions for commutators.

``oscillation_sets`` pairs a sub-level set of ``I`` with a half of the
interval ``I(x0 + 4r, r)`` so that ``b(x) - b(y)`` keeps one sign and
dominates the local mean oscillation. ``lower_bound_testfn`` builds the
mean-zero, sign-matched functions whose commutator images are bounded below
on dyadic annuli; ``noncompact_witness`` assembles them into families whose
images stay uniformly separated.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import CellSet, GridError, GridFunction, Interval, OutOfWindowError
from .operators import kernel_sum
from .spaces import (
    IntervalLattice,
    MorreyParams,
    _lattice_oscillations,
    _lmo_sorted,
    bmo_norm,
    median,
    morrey_norm,
)


class ConstructionError(GridError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class WitnessUnavailableError(GridError):
    pass


@dataclass(frozen=True)
class OscillationSets:
    E: CellSet
    F: CellSet
    sign: int
    omega: float
    alpha: float
    I: Interval
    I_tilde: Interval
    degenerate: bool = False

    def check(self, b: GridFunction) -> dict[str, bool]:
        """Evaluate the three set conclusions on the sampled symbol."""
        h = b.step
        bx = b.values.real[self.E.indices]
        by = b.values.real[self.F.indices]
        diff = self.sign * (bx[:, None] - by[None, :])
        return {
            "measure_E": abs(self.E.measure - self.I.length / 16) <= h * (1 + 1e-9),
            "measure_F": abs(self.F.measure - self.I_tilde.length / 2) <= h * (1 + 1e-9),
            "measure_G": self.E.measure * self.F.measure >= self.I.length**2 / 64 * (1 - 1e-12),
            "sign": bool(np.all(diff >= 0)),
            "domination": bool(np.all(np.abs(bx[:, None] - by[None, :]) >= self.omega)),
        }


def oscillation_sets(b: GridFunction, I: Interval) -> OscillationSets:
    I, _ = b.snap_interval(I)
    b.require_within(I.scaled(5), "5I")
    x0, r = I.center, I.radius
    It = Interval(x0 + 4 * r, r)
    alpha = median(b, It)
    i0, i1 = b.cell_range(I)
    j0, j1 = b.cell_range(It)
    v = b.values.real[i0:i1]
    n = v.size
    omega, _ = _lmo_sorted(np.sort(v), 1 / 8)

    dev = np.abs(v - alpha)
    n_cal = math.ceil(n / 8 - 1e-9)
    cand = np.flatnonzero(dev >= omega)
    if cand.size < n_cal:
        raise ConstructionError("level set smaller than |I|/8", {"n": n, "found": int(cand.size)})
    # drop smallest deviations first, leftmost first among ties
    order = np.lexsort((cand, dev[cand]))
    cal = cand[order[cand.size - n_cal :]]

    e1 = cal[v[cal] >= alpha]
    e2 = cal[v[cal] <= alpha]
    sign = 1 if e1.size >= e2.size else -1
    chosen = e1 if sign > 0 else e2
    n_E = math.ceil(n_cal / 2)
    keep = np.lexsort((chosen, -dev[chosen]))[:n_E]
    E_idx = chosen[keep] + i0

    w = b.values.real[j0:j1]
    m = w.size
    pool = np.flatnonzero(w <= alpha) if sign > 0 else np.flatnonzero(w >= alpha)
    n_F = math.ceil(m / 2)
    if pool.size < n_F:
        raise ConstructionError("median half of I_tilde too small", {"pool": int(pool.size), "need": n_F})
    far = np.lexsort((pool, -np.abs(w[pool] - alpha)))[:n_F]
    F_idx = pool[far] + j0

    return OscillationSets(
        E=CellSet.of(b, E_idx),
        F=CellSet.of(b, F_idx),
        sign=sign,
        omega=omega,
        alpha=alpha,
        I=I,
        I_tilde=It,
        degenerate=omega == 0.0,
    )


@dataclass(frozen=True)
class LowerBoundFn:
    f: GridFunction
    I: Interval
    a: float
    alpha: float
    params: MorreyParams

    @property
    def amplitude(self) -> float:
        return self.I.length ** (-(1 - self.params.lam) / self.params.p)


def lower_bound_testfn(b: GridFunction, I: Interval, params: MorreyParams) -> LowerBoundFn:
    I, _ = b.snap_interval(I)
    i0, i1 = b.require_within(I)
    alpha = median(b, I)
    v = b.values.real[i0:i1]
    up = (v > alpha).astype(float)
    down = (v < alpha).astype(float)
    n = v.size
    a = (up.sum() - down.sum()) / n
    amp = I.length ** (-(1 - params.lam) / params.p)
    vals = np.zeros(b.n)
    vals[i0:i1] = amp * (up - down - a)
    f = b.with_values(vals)
    lb = LowerBoundFn(f, I, float(a), alpha, params)

    diag = {
        "integral": float(np.sum(vals) * b.step),
        "l1": float(np.sum(np.abs(vals)) * b.step),
        "a": float(a),
        "sign_min": float(np.min(vals[i0:i1] * (v - alpha))),
    }
    if abs(diag["integral"]) > 1e-10 * max(diag["l1"], 1e-300):
        raise ConstructionError("test function does not integrate to zero", diag)
    if abs(a) > 0.5 + 1e-15:
        raise ConstructionError("|a_j| exceeds 1/2", diag)
    if diag["sign_min"] < 0:
        raise ConstructionError("test function does not follow the sign of b - alpha", diag)
    return lb


@dataclass(frozen=True)
class AnnulusBounds:
    k: int
    lower_lhs: float
    upper_lhs: float
    unit: float

    @property
    def lower_ratio(self) -> float:
        return self.lower_lhs / self.unit

    @property
    def upper_ratio(self) -> float:
        return self.upper_lhs / self.unit


def annulus_bounds(curve, b: GridFunction, lb: LowerBoundFn, k: int, params: MorreyParams, A1: float = 16.0) -> AnnulusBounds:
    """Integrals of |[b, C] f_j|^p over the right annulus piece and the full ring at scale 2^k."""
    if k < math.floor(math.log2(A1)):
        raise GridError(f"k={k} below floor(log2 A1)={math.floor(math.log2(A1))}")
    I = lb.I
    outer = I.scaled(2 ** (k + 1))
    i0, i1 = b.require_within(outer, "annulus")
    tg = GridFunction(b.origin + i0 * b.step, b.step, np.zeros(i1 - i0))
    img = kernel_sum(curve, lb.f, tg.midpoints, cutoff=0.5 * b.step, symbol=b)
    dens = np.abs(img) ** params.p * b.step
    x = tg.midpoints
    r = I.radius
    right = (x > I.center + 2**k * r) & (x < I.center + 2 ** (k + 1) * r)
    ring = np.abs(x - I.center) > 2**k * r
    unit = I.length ** (params.p - 1 + params.lam) / (2**k * I.length) ** (params.p - 1)
    return AnnulusBounds(k, float(dens[right].sum()), float(dens[ring].sum()), float(unit))


@dataclass(frozen=True)
class AnnulusFit:
    c1: float
    c2: float
    table: list
    delta: float

    def spread(self) -> tuple[float, float]:
        lo = [t.lower_ratio for t in self.table]
        up = [t.upper_ratio for t in self.table]
        return max(lo) / min(lo), max(up) / min(up)


def fit_annulus(curve, b, lb: LowerBoundFn, ks, params: MorreyParams, delta: float, A1: float = 16.0) -> AnnulusFit:
    table = [annulus_bounds(curve, b, lb, k, params, A1) for k in ks]
    c1 = min(t.lower_ratio for t in table) / delta**params.p
    c2 = max(t.upper_ratio for t in table)
    return AnnulusFit(c1, c2, table, delta)


def choose_A2(c1: float, c2: float, delta: float, p: float, A1: float = 16.0) -> float:
    """Smallest power of two A2 > A1 with A3 > 2 C2 / ((1 - 2^(1-p)) 2^(floor(log2 A2)(p-1)))."""
    A3 = 8 ** (1 - p) * c1 * delta**p * A1 ** (1 - p)
    if A3 <= 0:
        return math.inf
    need = 2 * c2 / ((1 - 2 ** (1 - p)) * A3)
    m = max(math.floor(math.log2(A1)) + 1, math.floor(math.log2(max(need, 1.0)) / (p - 1)) + 1)
    return float(2**m)


@dataclass
class Witness:
    scenario: str
    functions: list
    norms: list
    distances: np.ndarray
    delta: float
    A2: float | None = None
    achieved_ratio: float | None = None
    notes: list = field(default_factory=list)

    @property
    def unit(self) -> float:
        return float(min(self.norms))

    @property
    def min_distance(self) -> float:
        d = self.distances[~np.eye(len(self.norms), dtype=bool)]
        return float(d.min())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "j", "l", "m", "distance", "unit", "fitted_bound"])
        j = 0
        n = len(self.norms)
        for l in range(n):
            for m in range(l + 1, n):
                w.writerow(
                    [self.scenario, j, l, m, f"{self.distances[l, m]:.17g}", f"{self.unit:.17g}", f"{self.min_distance:.17g}"]
                )
                j += 1
        return buf.getvalue()


def _pick_scales(cand_len, cand_osc, cand_start, lengths_order, ratio, count):
    chosen = []
    last = None
    for L in lengths_order:
        if last is not None and max(L, last) / min(L, last) < ratio - 1e-12:
            continue
        sel = np.flatnonzero(cand_len == L)
        best = sel[np.lexsort((cand_start[sel], -cand_osc[sel]))[0]]
        chosen.append(best)
        last = L
        if len(chosen) == count:
            break
    return chosen


def noncompact_witness(
    curve,
    b: GridFunction,
    scenario: str,
    params: MorreyParams,
    count: int = 4,
    *,
    delta: float | None = None,
    lattice: IntervalLattice | None = None,
    ratio: float = 2.0,
    max_length: float | None = None,
    min_cells: int = 16,
    separation: float = 4.0,
) -> Witness:
    """Family of test functions on intervals with M(b, I) > delta and separated images.

    ``shrinking`` walks down dyadic scales from ``max_length``; ``growing``
    walks up from the finest admissible scale; ``escaping`` moves away from
    the origin keeping the ``separation``-dilates disjoint.
    """
    if lattice is None:
        lattice = IntervalLattice.for_function(b)
    if delta is None:
        delta = 0.5 * bmo_norm(b, lattice)
    s, L, osc = _lattice_oscillations(b, lattice)
    ok = (osc > delta) & (L >= min_cells)
    if max_length is None:
        max_length = b.n * b.step / 16
    if scenario == "shrinking":
        ok &= L * b.step <= max_length * (1 + 1e-12)
    if not ok.any() or delta <= 0:
        raise WitnessUnavailableError(f"no interval with oscillation above {delta:.4g} in the window")
    cs, cl, co = s[ok], L[ok], osc[ok]
    if scenario == "shrinking":
        picks = _pick_scales(cl, co, cs, np.unique(cl)[::-1], ratio, count)
    elif scenario == "growing":
        picks = _pick_scales(cl, co, cs, np.unique(cl), ratio, count)
    elif scenario == "escaping":
        centers = b.origin + (cs + cl / 2) * b.step
        radii = cl * b.step / 2
        order = np.lexsort((cs, -co, np.abs(centers)))
        picks = []
        for i in order:
            if all(abs(centers[i] - centers[j]) > separation * (radii[i] + radii[j]) for j in picks):
                if picks and abs(centers[i]) <= abs(centers[picks[-1]]):
                    continue
                picks.append(i)
            if len(picks) == count:
                break
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    if len(picks) < count:
        raise WitnessUnavailableError(f"only {len(picks)} admissible intervals for scenario {scenario!r}")

    fns, images = [], []
    for i in picks:
        lo = b.origin + cs[i] * b.step
        I = Interval.from_endpoints(lo, lo + cl[i] * b.step)
        lb = lower_bound_testfn(b, I, params)
        fns.append(lb)
        images.append(b.with_values(kernel_sum(curve, lb.f, b.midpoints, cutoff=0.5 * b.step, symbol=b)))
    mlat = IntervalLattice.for_function(b)
    norms = [morrey_norm(g, params, mlat) for g in images]
    n = len(images)
    dist = np.zeros((n, n))
    for l in range(n):
        for m in range(l + 1, n):
            dist[l, m] = dist[m, l] = morrey_norm(images[l] - images[m], params, mlat)
    lens = [lb.I.length for lb in fns]
    return Witness(
        scenario,
        fns,
        norms,
        dist,
        float(delta),
        achieved_ratio=float(min(max(a, c) / min(a, c) for a, c in zip(lens, lens[1:]))) if n > 1 else None,
        notes=["suprema restricted to the grid window"],
    )
