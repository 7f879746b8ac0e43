"""Atoms, (g, h) factor pairs and the iterative factorization of H^1 atoms.

Every atom lives on its own small grid (step tied to its radius), so pairs
placed ``N r`` apart never require a dense global window. A residual is
kept as two pieces, one per bump, and re-atomized by a two-sided dyadic
chain.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridError, GridFunction, Interval, OutOfWindowError
from .operators import kernel_sum
from .spaces import IntervalLattice, MorreyParams, h_norm_upper, morrey_norm

ATOM_TOL = 1e-12
CELLS_PER_RADIUS = 32


class CancellationError(GridError):
    pass


class AtomSizeError(GridError):
    pass


class DegenerateDenominatorError(GridError):
    pass


class NotTwoBumpError(GridError):
    pass


class NoContractionError(GridError):
    def __init__(self, message, kappa=None, N=None):
        super().__init__(message)
        self.kappa = kappa
        self.N = N


@dataclass(frozen=True, eq=False)
class Atom:
    f: GridFunction
    I: Interval
    scale: float = 1.0  # factor applied by make_atom(rescale=True); 1.0 if untouched

    @property
    def rescaled(self) -> bool:
        return self.scale != 1.0


def make_atom(f: GridFunction, I: Interval, *, rescale: bool = False, tol: float = ATOM_TOL) -> Atom:
    sup = f.support_range()
    if sup is not None:
        i0, i1 = f.cell_range(I)
        if sup[0] < i0 or sup[1] > i1:
            raise GridError("atom support leaves its interval")
    l1 = float(np.sum(np.abs(f.values)) * f.step)
    mean = complex(np.sum(f.values) * f.step)
    if abs(mean) > tol * l1:
        raise CancellationError(f"atom mean {abs(mean):.3g} exceeds {tol:g} * ||f||_1 = {tol * l1:.3g}")
    r = I.radius
    top = float(np.max(np.abs(f.values), initial=0.0))
    scale = 1.0
    if top * r > (1 + f.step / r) * (1 + 1e-12):
        if not rescale:
            raise AtomSizeError(f"sup |f| = {top:.6g} exceeds 1/r = {1 / r:.6g}")
        scale = 1.0 / (r * top)
        f = f.with_values(f.values * scale)
    return Atom(f, I, scale)


@dataclass
class AtomicDecomposition:
    terms: list = field(default_factory=list)  # [(coefficient, Atom)]

    @property
    def coefficient_sum(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    def __len__(self):
        return len(self.terms)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for c, a in self.terms:
            out += c * a.f.sample(x)
        return out


@dataclass(frozen=True, eq=False)
class FactorPair:
    g: GridFunction
    h: GridFunction
    coefficient: complex
    N: int
    source_atom: Atom
    cg_x0: complex
    y0: float

    @property
    def x0(self) -> float:
        return self.source_atom.I.center


def _block(center: float, radius: float, step: float) -> GridFunction:
    n = int(round(2 * radius / step))
    return GridFunction(center - radius, step, np.ones(n))


def make_pair(curve, a: Atom, N: int, *, direction: int = 1, window: Interval | None = None) -> FactorPair:
    if N <= 10:
        raise GridError(f"N must exceed 10, got {N}")
    if direction not in (1, -1):
        raise GridError("direction must be +1 or -1")
    x0, r = a.I.center, a.I.radius
    y0 = x0 + direction * N * r
    if window is not None and not (window.lo <= y0 - r and y0 + r <= window.hi):
        raise OutOfWindowError(f"I({y0:g}, {r:g}) exceeds window ({window.lo:g}, {window.hi:g})")
    g = _block(y0, r, a.f.step)
    cg = complex(kernel_sum(curve, g, [x0])[0])
    if abs(cg) < 1e-12:
        raise DegenerateDenominatorError(f"|C g(x0)| = {abs(cg):.3g} below 1e-12")
    h = a.f.with_values(-a.f.values / cg)
    return FactorPair(g, h, 1.0 + 0j, int(N), a, cg, y0)


@dataclass(frozen=True, eq=False)
class Residual:
    """a - (g C*h - h C g) as two pieces: ``near`` on the atom grid, ``far`` on g's grid."""

    near: GridFunction
    far: GridFunction
    pair: FactorPair

    @property
    def pieces(self) -> tuple[GridFunction, GridFunction]:
        return (self.near, self.far)

    @property
    def mean(self) -> complex:
        return complex((np.sum(self.near.values) * self.near.step) + np.sum(self.far.values) * self.far.step)

    @property
    def relative_mean(self) -> float:
        a = self.pair.source_atom.f
        return abs(self.mean) / float(np.sum(np.abs(a.values)) * a.step)

    @property
    def sup(self) -> float:
        return float(max(np.abs(self.near.values).max(initial=0.0), np.abs(self.far.values).max(initial=0.0)))

    @property
    def fitted_const(self) -> float:
        """Smallest C with |residual| <= C / (N r) on both bumps."""
        return self.sup * self.pair.N * self.pair.source_atom.I.radius

    def evaluate(self, x) -> np.ndarray:
        return self.near.sample(x) + self.far.sample(x)

    def to_function(self) -> GridFunction:
        return self.near + self.far


def pair_terms(curve, pair: FactorPair) -> tuple[GridFunction, GridFunction]:
    """(g C*h on g's grid, h C g on the atom grid)."""
    g, h = pair.g, pair.h
    cstar_h = kernel_sum(curve, h, g.midpoints, adjoint=True)
    cg = kernel_sum(curve, g, h.midpoints)
    return g.with_values(g.values * cstar_h), h.with_values(h.values * cg)


def residual(curve, a: Atom, pair: FactorPair) -> Residual:
    gch, hcg = pair_terms(curve, pair)
    return Residual(a.f.with_values(a.f.values + hcg.values), gch.with_values(-gch.values), pair)


def pairing_gap(curve, pair: FactorPair) -> float:
    """|int g C*h - int h C g| relative to their size; the bilinear pairing makes this vanish."""
    gch, hcg = pair_terms(curve, pair)
    s1 = complex(np.sum(gch.values) * gch.step)
    s2 = complex(np.sum(hcg.values) * hcg.step)
    return abs(s1 - s2) / max(abs(s1), abs(s2), 1e-300)


# -- chain of atoms -------------------------------------------------------------


def _coarse_step(fine: float, lengths, target: float) -> float:
    """Largest fine * 2**j <= target dividing every length."""
    step = fine
    while step * 2 <= target * (1 + 1e-12) and all(
        abs(L / (2 * step) - round(L / (2 * step))) < 1e-9 for L in lengths
    ):
        step *= 2
    return step


def _piece_on(pieces, lo: float, hi: float, step: float) -> GridFunction:
    n = int(round((hi - lo) / step))
    out = GridFunction(lo, step, np.zeros(n, dtype=complex))
    x = out.midpoints
    vals = np.zeros(n, dtype=complex)
    for p in pieces:
        vals += p.sample(x)
    return out.with_values(vals)


def _term_atom(coef_terms: list, f: GridFunction, I: Interval):
    top = float(np.max(np.abs(f.values), initial=0.0))
    if top == 0.0:
        return
    # remove the rounding-level mean left over from the input's own defect
    i0, i1 = f.cell_range(I)
    mean = np.sum(f.values) / (i1 - i0)
    if mean != 0:
        v = f.values.copy()
        v[i0:i1] -= mean
        f = f.with_values(v)
        top = float(np.max(np.abs(v)))
    lam = top * I.radius
    coef_terms.append((lam, make_atom(f.with_values(f.values / lam), I)))


def _indicator_diff(c: float, r_in: float, r_out: float, step: float, m: complex) -> GridFunction:
    """m (phi_{I(c, r_in)} - phi_{I(c, r_out)}) with phi_J = chi_J / |J|."""
    g = GridFunction(c - r_out, step, np.zeros(int(round(2 * r_out / step)), dtype=complex))
    x = g.midpoints
    v = -m / (2 * r_out) * np.ones(g.n, dtype=complex)
    v[np.abs(x - c) < r_in] += m / (2 * r_in)
    return g.with_values(v)


def chain_atoms(u, x0: float, y0: float, N: int, radius: float | None = None) -> AtomicDecomposition:
    """Split a cancelling two-bump function into atoms along dyadic intervals.

    ``u`` is a GridFunction or a sequence of pieces on grids sharing a step.
    Local atoms absorb each bump minus its mean spread over I(., 2 r); the
    means are carried outward through I(., 2^k r), k < K, and joined by one
    connector atom on the hull of I(x0, 2^K r) and I(y0, 2^K r).
    """
    pieces = [u] if isinstance(u, GridFunction) else list(u)
    pieces = [p for p in pieces if np.any(p.values != 0)]
    if not pieces:
        return AtomicDecomposition([])
    step = min(p.step for p in pieces)
    l1 = sum(float(np.sum(np.abs(p.values)) * p.step) for p in pieces)
    total = sum(complex(np.sum(p.values) * p.step) for p in pieces)
    if abs(total) > 1e-10 * l1:
        raise NotTwoBumpError(f"u does not integrate to zero ({abs(total):.3g} vs ||u||_1 = {l1:.3g})")
    D = abs(y0 - x0)
    r = radius if radius is not None else D / N
    if not r > 0:
        raise NotTwoBumpError("cannot infer the bump radius")
    tol = 1e-9 * step
    for p in pieces:
        sup = p.support_range()
        lo = p.origin + sup[0] * p.step
        hi = p.origin + sup[1] * p.step
        in_x = lo >= x0 - r - tol and hi <= x0 + r + tol
        in_y = lo >= y0 - r - tol and hi <= y0 + r + tol
        if not (in_x or in_y):
            raise NotTwoBumpError(f"piece on ({lo:g}, {hi:g}) is not inside I(x0, r) or I(y0, r)")

    terms: list = []
    if D < 2 * r:
        lo, hi = min(x0, y0) - r, max(x0, y0) + r
        f = _piece_on(pieces, lo, hi, step)
        _term_atom(terms, f, Interval.from_endpoints(lo, hi))
        return AtomicDecomposition(terms)

    K = max(1, math.ceil(math.log2(D / r) - 1e-9) - 1)
    near_x = [abs(p.origin + p.n * p.step / 2 - x0) < abs(p.origin + p.n * p.step / 2 - y0) for p in pieces]
    ux = _piece_on([p for p, s in zip(pieces, near_x) if s], x0 - 2 * r, x0 + 2 * r, step)
    uy = _piece_on([p for p, s in zip(pieces, near_x) if not s], y0 - 2 * r, y0 + 2 * r, step)
    m = complex(np.sum(ux.values) * step)
    my = complex(np.sum(uy.values) * step)
    # local atoms
    phi = 1.0 / (4 * r)
    _term_atom(terms, ux.with_values(ux.values - m * phi), Interval(x0, 2 * r))
    _term_atom(terms, uy.with_values(uy.values - my * phi), Interval(y0, 2 * r))
    # outward telescoping on each side
    for k in range(1, K):
        rin, rout = 2**k * r, 2 ** (k + 1) * r
        st = _coarse_step(step, [rin, rout], rout / CELLS_PER_RADIUS)
        _term_atom(terms, _indicator_diff(x0, rin, rout, st, m), Interval(x0, rout))
        _term_atom(terms, _indicator_diff(y0, rin, rout, st, my), Interval(y0, rout))
    # connector between the outermost intervals
    R = 2**K * r
    lo, hi = min(x0, y0) - R, max(x0, y0) + R
    st = _coarse_step(step, [R, D, hi - lo], R / CELLS_PER_RADIUS)
    conn = GridFunction(lo, st, np.zeros(int(round((hi - lo) / st)), dtype=complex))
    x = conn.midpoints
    v = np.zeros(conn.n, dtype=complex)
    v[np.abs(x - x0) < R] += m / (2 * R)
    v[np.abs(x - y0) < R] += my / (2 * R)
    _term_atom(terms, conn.with_values(v), Interval.from_endpoints(lo, hi))
    return AtomicDecomposition(terms)


# -- iteration -------------------------------------------------------------------


@dataclass
class RoundRecord:
    round: int
    atoms_in: int
    mass_in: float
    mass_out: float
    pairs: list  # [(coefficient, FactorPair)]
    residuals: list  # [(coefficient, Residual)]
    pair_mass: float
    max_relative_mean: float

    @property
    def kappa(self) -> float:
        return self.mass_out / self.mass_in if self.mass_in else 0.0


@dataclass
class FactorizationResult:
    rounds: list
    final: AtomicDecomposition
    N: int
    initial_mass: float

    @property
    def kappas(self) -> list[float]:
        return [r.kappa for r in self.rounds]

    def mass_table(self) -> list[dict]:
        return [
            {
                "round": r.round,
                "atoms_in": r.atoms_in,
                "mass_in": r.mass_in,
                "mass_out": r.mass_out,
                "kappa": r.kappa,
                "pair_mass": r.pair_mass,
                "max_relative_mean": r.max_relative_mean,
            }
            for r in self.rounds
        ]

    def report(self) -> dict:
        return {
            "N": self.N,
            "initial_mass": self.initial_mass,
            "rounds": [
                {
                    **row,
                    "pairs": [
                        {"coeff_re": c.real, "coeff_im": c.imag, "N": p.N, "x0": p.x0, "y0": p.y0}
                        for c, p in r.pairs
                    ],
                }
                for row, r in zip(self.mass_table(), self.rounds)
            ],
            "final_atoms": len(self.final),
            "final_mass": self.final.coefficient_sum,
        }

    def to_json(self) -> str:
        return json.dumps(self.report(), sort_keys=True, indent=1)

    def reconstruct(self, curve, x) -> np.ndarray:
        """Sum over rounds of lambda (g C*h - h C g) plus the final residual, at points ``x``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for r in self.rounds:
            for (c, res) in r.residuals:
                a = res.pair.source_atom.f
                # g C*h - h C g = a - residual
                out += c * (a.sample(x) - res.evaluate(x))
        if self.rounds:
            for c, res in self.rounds[-1].residuals:
                out += c * res.evaluate(x)
        else:
            out += self.final.evaluate(x)
        return out


def _pair_mass(pair: FactorPair, params: MorreyParams) -> float:
    g = pair.g
    gn = morrey_norm(g, params, IntervalLattice.for_function(g))
    return gn * h_norm_upper(pair.h, params.lam, params.p_conj)


def factorize(
    curve,
    decomp: AtomicDecomposition,
    N: int,
    L: int,
    params: MorreyParams | None = None,
    *,
    kappa_max: float = 1.0,
    direction: int = 1,
) -> FactorizationResult:
    params = params or MorreyParams(2.0, 0.5)
    current = list(decomp.terms)
    mass = decomp.coefficient_sum
    result = FactorizationResult([], AtomicDecomposition(current), N, mass)
    for l in range(1, L + 1):
        if not current:
            result.rounds.append(RoundRecord(l, 0, 0.0, 0.0, [], [], 0.0, 0.0))
            continue
        nxt, pairs, ress = [], [], []
        pmass = 0.0
        worst = 0.0
        for c, a in current:
            pair = make_pair(curve, a, N, direction=direction)
            res = residual(curve, a, pair)
            worst = max(worst, res.relative_mean)
            pairs.append((c, pair))
            ress.append((c, res))
            pmass += abs(c) * _pair_mass(pair, params)
            chain = chain_atoms(res.pieces, a.I.center, pair.y0, N, radius=a.I.radius)
            nxt.extend((c * lam, atom) for lam, atom in chain.terms)
        out = float(sum(abs(c) for c, _ in nxt))
        rec = RoundRecord(l, len(current), mass, out, pairs, ress, pmass, worst)
        result.rounds.append(rec)
        if rec.kappa >= kappa_max:
            raise NoContractionError(
                f"round {l}: kappa = {rec.kappa:.3g} >= {kappa_max:g}; increase N (currently {N})", rec.kappa, N
            )
        current, mass = nxt, out
    result.final = AtomicDecomposition(current)
    return result
