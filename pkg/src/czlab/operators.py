"""Discrete Cauchy integrals, their commutators and maximal functions.

All sums run over the cell midpoints ``y`` of the source function with weight
``step``. The principal value drops the single cell containing the target
point, so for a target on the source lattice the excluded window is symmetric
and the odd part of the kernel cancels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import LipschitzCurve, _kernel
from .grid import GridError, GridFunction, GridMismatchError

_CHUNK = 1 << 21


class InvalidTruncationError(GridError):
    pass


@dataclass(frozen=True)
class TruncationLattice:
    """Geometric truncation radii t_min * ratio**k up to t_max."""

    t_min: float
    t_max: float
    ratio: float = 2.0**0.25

    def __post_init__(self):
        if not (self.t_min > 0 and self.t_max >= self.t_min and self.ratio > 1):
            raise GridError("truncation lattice needs 0 < t_min <= t_max and ratio > 1")

    @property
    def radii(self) -> np.ndarray:
        k = math.floor(math.log(self.t_max / self.t_min) / math.log(self.ratio) + 1e-9)
        return self.t_min * self.ratio ** np.arange(k + 1)


def kernel_sum(
    curve: LipschitzCurve,
    f: GridFunction,
    xs,
    *,
    cutoff: float | None = None,
    adjoint: bool = False,
    symbol: GridFunction | None = None,
) -> np.ndarray:
    """``sum_y K(x, y) w(x, y) f(y) h`` over source cells with ``|x - y| > cutoff``.

    ``cutoff=None`` keeps every cell (only valid off the support). With
    ``adjoint`` the kernel is transposed to ``K(y, x)``. With ``symbol=b`` the
    weight is ``b(x) - b(y)``, which gives the commutator ``[b, C]f``.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.zeros(xs.size, dtype=complex)
    src = np.flatnonzero(f.values)
    if src.size == 0 or xs.size == 0:
        return out
    ys = f.origin + (src + 0.5) * f.step
    fv = f.values[src] * f.step
    if symbol is not None:
        by = symbol.sample(ys)
        bx_all = symbol.sample(xs)
    rows = max(1, _CHUNK // src.size)
    for s in range(0, xs.size, rows):
        x = xs[s : s + rows, None]
        dist = np.abs(x - ys[None, :])
        if cutoff is not None:
            keep = dist > cutoff
            yy = np.where(keep, ys[None, :], x + 1.0)
        else:
            if np.any(dist == 0):
                raise GridError("target coincides with a source midpoint; use a cutoff")
            keep = None
            yy = np.broadcast_to(ys[None, :], dist.shape)
        k = _kernel(curve, yy, x) if adjoint else _kernel(curve, x, yy)
        term = k * fv[None, :]
        if symbol is not None:
            term = term * (bx_all[s : s + rows, None] - by[None, :])
        if keep is not None:
            term = np.where(keep, term, 0.0)
        out[s : s + rows] = term.sum(axis=1)
    return out


def _pv_cutoff(f: GridFunction) -> float:
    return 0.5 * f.step


def truncated_cauchy(curve, f: GridFunction, x: float, t: float) -> complex:
    if t < f.step * (1 - 1e-12):
        raise InvalidTruncationError(f"truncation {t} below grid step {f.step}")
    x = f.snap_point(x)
    return complex(kernel_sum(curve, f, [x], cutoff=t)[0])


def pv_cauchy(curve, f: GridFunction, x: float) -> complex:
    x = f.snap_point(x)
    return complex(kernel_sum(curve, f, [x], cutoff=_pv_cutoff(f))[0])


def adjoint_cauchy(curve, f: GridFunction, x: float) -> complex:
    """Bilinear adjoint: kernel K(y, x)."""
    x = f.snap_point(x)
    return complex(kernel_sum(curve, f, [x], cutoff=_pv_cutoff(f), adjoint=True)[0])


def maximal_truncated(curve, f: GridFunction, x: float, lattice: TruncationLattice) -> float:
    radii = lattice.radii
    if radii.size == 0:
        raise GridError("empty truncation lattice")
    return max(abs(truncated_cauchy(curve, f, x, t)) for t in radii)


def _check_symbol(b: GridFunction, f: GridFunction):
    if not b.is_compatible(f):
        raise GridMismatchError("symbol and argument must share a cell lattice; resample first")


def commutator(curve, b: GridFunction, f: GridFunction, x: float) -> complex:
    """``b(x) C(f)(x) - C(b f)(x)`` at the snapped point ``x``."""
    _check_symbol(b, f)
    x = f.snap_point(x)
    return complex(kernel_sum(curve, f, [x], cutoff=_pv_cutoff(f), symbol=b)[0])


def target_grid(f: GridFunction, target: GridFunction | None) -> GridFunction:
    if target is None:
        return f
    if not target.is_compatible(f):
        raise GridMismatchError("target grid must share the source lattice")
    return target


def cauchy_image(curve, f: GridFunction, target: GridFunction | None = None, *, adjoint=False) -> GridFunction:
    """Principal value (or adjoint) evaluated at every midpoint of ``target``."""
    tg = target_grid(f, target)
    vals = kernel_sum(curve, f, tg.midpoints, cutoff=_pv_cutoff(f), adjoint=adjoint)
    return tg.with_values(vals)


def commutator_image(curve, b: GridFunction, f: GridFunction, target: GridFunction | None = None) -> GridFunction:
    _check_symbol(b, f)
    tg = target_grid(f, target)
    vals = kernel_sum(curve, f, tg.midpoints, cutoff=_pv_cutoff(f), symbol=b)
    return tg.with_values(vals)


def hl_maximal(f: GridFunction, x: float) -> float:
    """Sup of |f| averages over cell-aligned intervals whose cells contain ``x``."""
    c = int(f.cell_of(x))
    lo, hi = min(0, c), max(f.n, c + 1)
    a = np.zeros(hi - lo)
    a[-lo : -lo + f.n] = np.abs(f.values)
    S = np.concatenate([[0.0], np.cumsum(a)])
    ci = c - lo
    i = np.arange(0, ci + 1)
    j = np.arange(ci + 1, hi - lo + 1)
    avg = (S[j][None, :] - S[i][:, None]) / (j[None, :] - i[:, None])
    return float(avg.max())


def hl_maximal_image(f: GridFunction) -> GridFunction:
    return f.with_values([hl_maximal(f, x) for x in f.midpoints])
