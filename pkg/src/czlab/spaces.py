"""Morrey, BMO and block-space functionals on grid functions.

Suprema over "all intervals" are discretized by :class:`IntervalLattice`, so
every reported norm is a lower bound of the continuous supremum restricted to
the lattice window. The Morrey quotient divides by ``r**lam`` with ``r`` the
radius (not the length) of the interval.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .grid import (
    GridError,
    GridFunction,
    Interval,
    InvalidExponentError,
    OutOfWindowError,
    lp_norm,
)


@dataclass(frozen=True)
class MorreyParams:
    p: float
    lam: float

    def __post_init__(self):
        if not (1 < self.p < math.inf):
            raise InvalidExponentError(f"p must lie in (1, inf), got {self.p}")
        if not (0 < self.lam < 1):
            raise InvalidExponentError(f"lambda must lie in (0, 1), got {self.lam}")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    def dual(self) -> "MorreyParams":
        return MorreyParams(self.p_conj, self.lam)


@dataclass(frozen=True)
class IntervalLattice:
    """Dyadic interval family on a cell-aligned base window.

    Level ``k`` holds intervals of ``round(n / 2**k)`` cells whose left ends
    are spaced by about ``length / offsets`` cells; the last interval of each
    level is flush with the right edge so every level covers the window.
    """

    origin: float
    step: float
    n: int
    k_min: int = 0
    k_max: int | None = None
    offsets: int = 4
    min_cells: int = 2

    def __post_init__(self):
        if self.n < 1 or self.offsets < 1:
            raise GridError("lattice needs at least one cell and one offset")
        if self.k_max is None:
            k = int(math.floor(math.log2(max(self.n / self.min_cells, 1.0))))
            object.__setattr__(self, "k_max", k)

    @classmethod
    def for_function(cls, f: GridFunction, **kw) -> "IntervalLattice":
        return cls(f.origin, f.step, f.n, **kw)

    @classmethod
    def for_window(cls, lo: float, hi: float, step: float, **kw) -> "IntervalLattice":
        from .grid import n_cells

        return cls(lo, step, n_cells(lo, hi, step), **kw)

    def refined(self) -> "IntervalLattice":
        return IntervalLattice(self.origin, self.step, self.n, self.k_min, self.k_max, 2 * self.offsets, self.min_cells)

    @property
    def depth(self) -> int:
        return self.k_max - self.k_min + 1

    def index_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return _index_pairs(self.n, self.k_min, self.k_max, self.offsets, self.min_cells)

    def intervals(self) -> list[Interval]:
        s, L = self.index_pairs()
        lo = self.origin + s * self.step
        return [Interval.from_endpoints(a, a + l * self.step) for a, l in zip(lo, L)]

    def shifted_for(self, f: GridFunction) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs expressed in ``f``'s cell coordinates."""
        probe = GridFunction(self.origin, self.step, np.zeros(1))
        off = f.lattice_offset(probe)
        s, L = self.index_pairs()
        return s + off, L


@lru_cache(maxsize=64)
def _index_pairs(n, k_min, k_max, offsets, min_cells):
    starts, lengths = [], []
    seen = set()
    for k in range(k_min, k_max + 1):
        L = max(min_cells, int(round(n / 2**k)))
        if L > n:
            L = n
        stride = max(1, int(round(L / offsets)))
        s = list(range(0, n - L + 1, stride))
        if s[-1] != n - L:
            s.append(n - L)
        for a in s:
            if (a, L) not in seen:
                seen.add((a, L))
                starts.append(a)
                lengths.append(L)
    s = np.array(starts, dtype=np.int64)
    L = np.array(lengths, dtype=np.int64)
    s.setflags(write=False)
    L.setflags(write=False)
    return s, L


def _window_sums(values: np.ndarray, starts: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Sums of ``values`` over index windows, treating out-of-range cells as zero."""
    S = np.concatenate([[0.0], np.cumsum(values)])
    a = np.clip(starts, 0, values.size)
    b = np.clip(starts + lengths, 0, values.size)
    return S[b] - S[a]


def _polish(S: np.ndarray, lo: int, hi: int, i: int, j: int, lam: float, h: float) -> float:
    """Coordinate ascent on the cell endpoints (i, j) of one interval, kept inside [lo, hi]."""

    def val(a, b):
        return (S[b] - S[a]) / (0.5 * (b - a) * h) ** lam

    best = val(i, j)
    d = max(1, (j - i) // 4)
    while d >= 1:
        moved = False
        for a, b in ((i - d, j), (i + d, j), (i, j - d), (i, j + d), (i - d, j + d), (i + d, j - d)):
            if lo <= a < b <= hi:
                v = val(a, b)
                if v > best * (1 + 1e-15):
                    best, i, j, moved = v, a, b, True
        if not moved:
            d //= 2
    return best


def morrey_norm(
    f: GridFunction, params: MorreyParams, lattice: IntervalLattice | None = None, polish: int = 3
) -> float:
    """max over intervals I(x, r) of [r**-lam * int_I |f|^p]^(1/p).

    The lattice maximum is refined by endpoint hill-climbing from the
    ``polish`` best lattice intervals; every candidate is an actual
    interval, so the result is still a lower bound of the supremum.
    """
    if lattice is None:
        lattice = IntervalLattice.for_function(f)
    s, L = lattice.shifted_for(f)
    dens = np.abs(f.values) ** params.p * f.step
    mass = _window_sums(dens, s, L)
    r = 0.5 * L * f.step
    q = mass / r**params.lam
    if q.size == 0:
        return 0.0
    best = float(np.max(q, initial=0.0))
    if polish and best > 0:
        S = np.concatenate([[0.0], np.cumsum(dens)])
        lo, hi = max(0, int(s.min())), min(f.n, int((s + L).max()))
        for k in np.argsort(-q, kind="stable")[:polish]:
            i = int(np.clip(s[k], lo, hi - 1))
            j = int(np.clip(s[k] + L[k], i + 1, hi))
            best = max(best, _polish(S, lo, hi, i, j, params.lam, f.step))
    return float(best ** (1.0 / params.p))


def morrey_profile(f: GridFunction, params: MorreyParams, lattice: IntervalLattice):
    """Per-interval Morrey quotients (starts, lengths, values) for diagnostics."""
    s, L = lattice.shifted_for(f)
    mass = _window_sums(np.abs(f.values) ** params.p * f.step, s, L)
    return s, L, (mass / (0.5 * L * f.step) ** params.lam) ** (1.0 / params.p)


def _cells(b: GridFunction, I: Interval) -> np.ndarray:
    i0, i1 = b.require_within(I)
    if i1 <= i0:
        raise GridError("interval contains no cell midpoints")
    return b.values[i0:i1]


def mean_oscillation(b: GridFunction, I: Interval) -> float:
    v = _cells(b, I)
    return float(np.mean(np.abs(v - v.mean())))


def _lattice_oscillations(b: GridFunction, lattice: IntervalLattice):
    s, L = lattice.shifted_for(b)
    if s.size == 0:
        return s, L, np.zeros(0)
    if s.min() < 0 or (s + L).max() > b.n:
        raise OutOfWindowError("lattice extends beyond the symbol window")
    osc = np.empty(s.size)
    for length in np.unique(L):
        sel = np.flatnonzero(L == length)
        win = np.lib.stride_tricks.sliding_window_view(b.values, int(length))[s[sel]]
        osc[sel] = np.mean(np.abs(win - win.mean(axis=1, keepdims=True)), axis=1)
    return s, L, osc


def bmo_norm(b: GridFunction, lattice: IntervalLattice | None = None) -> float:
    if lattice is None:
        lattice = IntervalLattice.for_function(b)
    return float(np.max(_lattice_oscillations(b, lattice)[2], initial=0.0))


def argmax_oscillation(b: GridFunction, lattice: IntervalLattice | None = None) -> tuple[Interval, float]:
    if lattice is None:
        lattice = IntervalLattice.for_function(b)
    s, L, osc = _lattice_oscillations(b, lattice)
    i = int(np.argmax(osc))
    lo = b.origin + s[i] * b.step
    return Interval.from_endpoints(lo, lo + L[i] * b.step), float(osc[i])


def median(b: GridFunction, I: Interval) -> float:
    """Minimizer of the mean absolute deviation; midpoint of the minimizing set on ties."""
    v = np.sort(_cells(b, I).real)
    n = v.size
    if n % 2:
        return float(v[n // 2])
    return float(0.5 * (v[n // 2 - 1] + v[n // 2]))


def _lmo_sorted(v: np.ndarray, mu: float) -> tuple[float, float]:
    n = v.size
    k = math.ceil(mu * n - 1e-9) - 1  # max number of cells allowed to exceed
    m = n - k  # cells that must sit within distance omega of c
    if m <= 1:
        return 0.0, float(v[0]) if n else 0.0
    widths = v[m - 1 :] - v[: n - m + 1]
    i = int(np.argmin(widths))
    return float(widths[i] / 2), float(0.5 * (v[i] + v[i + m - 1]))


def local_mean_oscillation(b: GridFunction, I: Interval, mu: float) -> float:
    """inf_c [(b - c) chi_I]^*(mu |I|) computed exactly on cell data.

    The admissible ``c`` must put all but ``ceil(mu n) - 1`` samples within
    distance ``omega``; the optimum centres the narrowest window covering
    that many consecutive sorted samples.
    """
    if not 0 < mu < 1:
        raise GridError(f"mu must lie in (0, 1), got {mu}")
    v = np.sort(_cells(b, I).real)
    return _lmo_sorted(v, mu)[0]


def lmo_sup(b: GridFunction, mu: float, lattice: IntervalLattice | None = None) -> float:
    if lattice is None:
        lattice = IntervalLattice.for_function(b)
    best = 0.0
    for I in lattice.intervals():
        best = max(best, local_mean_oscillation(b, I, mu))
    return best


@dataclass
class CmoProfile:
    small_scale: list = field(default_factory=list)  # (delta, sup M over |I| <= delta), delta decreasing
    large_scale: list = field(default_factory=list)  # (R, sup M over |I| >= R), R increasing
    far_field: list = field(default_factory=list)  # (R, sup M over I outside I(0, R)), R increasing

    def curves(self):
        return {"small": self.small_scale, "large": self.large_scale, "far": self.far_field}

    def vanishes(self, threshold: float) -> dict[str, bool]:
        return {k: (not c) or c[-1][1] <= threshold for k, c in self.curves().items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["condition", "parameter", "sup_oscillation"])
        for name, curve in self.curves().items():
            for param, val in curve:
                w.writerow([name, f"{param:.17g}", f"{val:.17g}"])
        return buf.getvalue()


def cmo_profile(b: GridFunction, lattice: IntervalLattice | None = None) -> CmoProfile:
    if lattice is None:
        lattice = IntervalLattice.for_function(b)
    if lattice.depth < 4:
        raise GridError("CMO profiles need at least four dyadic scales")
    s, L, osc = _lattice_oscillations(b, lattice)
    lo = b.origin + s * b.step
    hi = lo + L * b.step
    lengths = np.unique(L) * b.step
    prof = CmoProfile()
    for d in lengths[::-1]:
        prof.small_scale.append((float(d), float(osc[L * b.step <= d * (1 + 1e-12)].max())))
    for R in lengths:
        prof.large_scale.append((float(R), float(osc[L * b.step >= R * (1 - 1e-12)].max())))
    for R in np.concatenate([[0.0], lengths / 2]):
        far = (lo >= R - 1e-12) | (hi <= -R + 1e-12)
        if far.any():
            prof.far_field.append((float(R), float(osc[far].max())))
    return prof


def is_block(f: GridFunction, I: Interval, lam: float, q: float, rtol: float = 1e-12) -> bool:
    """True iff supp f lies in I and ||f||_q <= |I|^(-lam/q')."""
    qc = q / (q - 1.0)
    sup = f.support_range()
    if sup is None:
        return True
    i0, i1 = f.cell_range(I)
    if sup[0] < i0 or sup[1] > i1:
        return False
    return lp_norm(f, q) <= I.length ** (-lam / qc) * (1 + rtol)


def block_decomposition(g: GridFunction, lam: float, q: float) -> list[tuple[float, Interval]]:
    """Dyadic split of ``g`` into blocks, each rescaled to a maximal block.

    A node (index range) is either one block on the hull of its support, or
    the best decomposition of its connected components or of its two dyadic
    halves, whichever has the smaller coefficient sum.
    """
    qc = q / (q - 1.0)
    a = np.abs(g.values)
    P = np.concatenate([[0.0], np.cumsum(a**q)])
    nz = np.flatnonzero(a > 0)
    if nz.size == 0:
        return []
    h = g.step
    memo: dict = {}

    def hull(i0, i1):
        lo = np.searchsorted(nz, i0)
        hi = np.searchsorted(nz, i1)
        if hi <= lo:
            return None
        return int(nz[lo]), int(nz[hi - 1]) + 1

    def components(i0, i1):
        lo, hi = np.searchsorted(nz, i0), np.searchsorted(nz, i1)
        idx = nz[lo:hi]
        cuts = np.flatnonzero(np.diff(idx) > 1)
        bounds = []
        start = 0
        for c in cuts:
            bounds.append((int(idx[start]), int(idx[c]) + 1))
            start = c + 1
        bounds.append((int(idx[start]), int(idx[-1]) + 1))
        return bounds

    def best(i0, i1):
        hh = hull(i0, i1)
        if hh is None:
            return 0.0, []
        i0, i1 = hh
        key = (i0, i1)
        if key in memo:
            return memo[key]
        coef = ((P[i1] - P[i0]) * h) ** (1 / q) * ((i1 - i0) * h) ** (lam / qc)
        result = (coef, [(coef, i0, i1)])
        comps = components(i0, i1)
        if len(comps) > 1:
            parts = [best(a0, a1) for a0, a1 in comps]
            tot = sum(p[0] for p in parts)
            if tot < result[0]:
                result = (tot, [blk for p in parts for blk in p[1]])
        elif i1 - i0 >= 2:
            mid = (i0 + i1) // 2
            l, r = best(i0, mid), best(mid, i1)
            if l[0] + r[0] < result[0]:
                result = (l[0] + r[0], l[1] + r[1])
        memo[key] = result
        return result

    _, blocks = best(0, g.n)
    return [
        (float(c), Interval.from_endpoints(g.origin + i0 * h, g.origin + i1 * h)) for c, i0, i1 in blocks
    ]


def h_norm_upper(g: GridFunction, lam: float, q: float) -> float:
    """Coefficient sum of :func:`block_decomposition`; an upper bound of the h^{lam,q} norm."""
    return float(sum(c for c, _ in block_decomposition(g, lam, q)))
