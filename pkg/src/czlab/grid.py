"""Uniform-grid functions on the real line.

Every function in the package is carried by a :class:`GridFunction`: complex
samples at the midpoints of equal cells ``[origin + i*step, origin + (i+1)*step)``,
zero outside the window. Integrals use the midpoint rule, which is exact for
data that is piecewise constant on cells.

Two grid functions are *compatible* when they share ``step`` and their origins
differ by an integer number of cells; binary arithmetic between compatible
functions pads both to the union window.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_LATTICE_TOL = 1e-9


class GridError(ValueError):
    pass


class GridMismatchError(GridError):
    """Raised when two functions do not live on a common cell lattice."""


class InvalidExponentError(GridError):
    pass


class OutOfWindowError(GridError):
    pass


@dataclass(frozen=True)
class Interval:
    """Open interval I(center, radius) = {y : |y - center| < radius}."""

    center: float
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise GridError(f"interval radius must be positive, got {self.radius}")

    @classmethod
    def from_endpoints(cls, lo: float, hi: float) -> "Interval":
        return cls(0.5 * (lo + hi), 0.5 * (hi - lo))

    @property
    def lo(self) -> float:
        return self.center - self.radius

    @property
    def hi(self) -> float:
        return self.center + self.radius

    @property
    def length(self) -> float:
        return 2.0 * self.radius

    def scaled(self, k: float) -> "Interval":
        return Interval(self.center, k * self.radius)

    def shifted(self, dx: float) -> "Interval":
        return Interval(self.center + dx, self.radius)


@dataclass(frozen=True, eq=False)
class GridFunction:
    origin: float
    step: float
    values: np.ndarray
    snap_residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise GridError(f"step must be positive, got {self.step}")
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(vals)):
            raise GridError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, lo: float, hi: float, step: float) -> "GridFunction":
        return cls(lo, step, np.zeros(n_cells(lo, hi, step), dtype=complex))

    @classmethod
    def from_function(cls, fn, lo: float, hi: float, step: float) -> "GridFunction":
        """Sample ``fn`` at the cell midpoints of the window ``[lo, hi)``."""
        n = n_cells(lo, hi, step)
        x = lo + (np.arange(n) + 0.5) * step
        return cls(lo, step, np.asarray(fn(x), dtype=complex) * np.ones(n))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.origin, self.step, values)

    # -- geometry -----------------------------------------------------------

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def lo(self) -> float:
        return self.origin

    @property
    def hi(self) -> float:
        return self.origin + self.n * self.step

    @property
    def midpoints(self) -> np.ndarray:
        return self.origin + (np.arange(self.n) + 0.5) * self.step

    @property
    def window(self) -> Interval:
        return Interval.from_endpoints(self.lo, self.hi)

    def cell_of(self, x):
        """Lattice index of the cell containing ``x`` (may lie outside the window)."""
        return np.floor((np.asarray(x, dtype=float) - self.origin) / self.step).astype(np.int64)

    def snap_point(self, x: float) -> float:
        """Nearest cell midpoint on the (infinitely extended) lattice."""
        i = math.floor((x - self.origin) / self.step)
        return self.origin + (i + 0.5) * self.step

    def cell_range(self, interval: Interval) -> tuple[int, int]:
        """Lattice index range [i0, i1) of cells whose midpoints lie in ``interval``.

        Endpoints are snapped to the nearest cell boundary, so the result does
        not depend on rounding noise in the interval coordinates.
        """
        i0 = math.floor((interval.lo - self.origin) / self.step + 0.5)
        i1 = math.floor((interval.hi - self.origin) / self.step + 0.5)
        return i0, max(i1, i0)

    def snap_interval(self, interval: Interval) -> tuple[Interval, float]:
        """Snap to cell boundaries; returns the snapped interval and the residual."""
        i0, i1 = self.cell_range(interval)
        if i1 <= i0:
            i1 = i0 + 1
        lo = self.origin + i0 * self.step
        hi = self.origin + i1 * self.step
        resid = max(abs(lo - interval.lo), abs(hi - interval.hi))
        return Interval.from_endpoints(lo, hi), resid

    def contains_interval(self, interval: Interval) -> bool:
        i0, i1 = self.cell_range(interval)
        return i0 >= 0 and i1 <= self.n

    def require_within(self, interval: Interval, what: str = "interval") -> tuple[int, int]:
        i0, i1 = self.cell_range(interval)
        if i0 < 0 or i1 > self.n:
            raise OutOfWindowError(
                f"{what} ({interval.lo:.6g}, {interval.hi:.6g}) exceeds grid window "
                f"({self.lo:.6g}, {self.hi:.6g})"
            )
        return i0, i1

    def lattice_offset(self, other: "GridFunction") -> int:
        """Cell offset of ``other.origin`` relative to ``self.origin``."""
        if not math.isclose(self.step, other.step, rel_tol=1e-12):
            raise GridMismatchError(f"steps differ: {self.step} vs {other.step}")
        k = (other.origin - self.origin) / self.step
        kr = round(k)
        if abs(k - kr) > _LATTICE_TOL * max(1.0, abs(k)):
            raise GridMismatchError("origins are not aligned to a common cell lattice")
        return int(kr)

    def is_compatible(self, other: "GridFunction") -> bool:
        try:
            self.lattice_offset(other)
        except GridMismatchError:
            return False
        return True

    def same_grid(self, other: "GridFunction") -> bool:
        return self.n == other.n and self.is_compatible(other) and self.lattice_offset(other) == 0

    # -- evaluation ---------------------------------------------------------

    def sample(self, x) -> np.ndarray:
        """Piecewise-constant evaluation; zero outside the window."""
        idx = self.cell_of(x)
        inside = (idx >= 0) & (idx < self.n)
        out = np.zeros(idx.shape, dtype=complex)
        out[inside] = self.values[idx[inside]]
        return out

    def restrict(self, interval: Interval) -> "GridFunction":
        """Multiply by the indicator of ``interval`` (window unchanged)."""
        i0, i1 = self.cell_range(interval)
        vals = np.zeros(self.n, dtype=complex)
        a, b = max(i0, 0), min(i1, self.n)
        if b > a:
            vals[a:b] = self.values[a:b]
        return self.with_values(vals)

    def embed(self, origin: float, n: int) -> "GridFunction":
        """Re-window onto ``n`` cells starting at ``origin`` (same lattice)."""
        probe = GridFunction(origin, self.step, np.zeros(1))
        off = probe.lattice_offset(self)  # cells from new origin to self.origin
        vals = np.zeros(n, dtype=complex)
        a, b = max(off, 0), min(off + self.n, n)
        if b > a:
            vals[a:b] = self.values[a - off : b - off]
        return GridFunction(origin, self.step, vals)

    def support_range(self) -> tuple[int, int] | None:
        nz = np.flatnonzero(self.values)
        if nz.size == 0:
            return None
        return int(nz[0]), int(nz[-1]) + 1

    # -- arithmetic ---------------------------------------------------------

    def _aligned(self, other: "GridFunction"):
        off = self.lattice_offset(other)
        if off == 0 and other.n == self.n:
            return self.values, other.values, self.origin
        lo = min(0, off)
        hi = max(self.n, off + other.n)
        a = np.zeros(hi - lo, dtype=complex)
        b = np.zeros(hi - lo, dtype=complex)
        a[-lo : -lo + self.n] = self.values
        b[off - lo : off - lo + other.n] = other.values
        return a, b, self.origin + lo * self.step

    def _binary(self, other, op):
        if isinstance(other, GridFunction):
            a, b, origin = self._aligned(other)
            return GridFunction(origin, self.step, op(a, b))
        return self.with_values(op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GridFunction):
            raise TypeError("division by a grid function is not supported")
        return self.with_values(self.values / other)

    def __neg__(self):
        return self.with_values(-self.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def conj(self) -> "GridFunction":
        return self.with_values(np.conj(self.values))

    def real(self) -> np.ndarray:
        return self.values.real

    # -- io -----------------------------------------------------------------

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re", "im"])
        for x, v in zip(self.midpoints, self.values):
            w.writerow([f"{x:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source, step: float | None = None) -> "GridFunction":
        text = Path(source).read_text() if not _looks_like_csv(source) else source
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise GridError("empty grid function CSV")
        x = np.array([float(r["x"]) for r in rows])
        vals = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        if step is None:
            if x.size < 2:
                raise GridError("step must be given for single-cell CSV")
            step = float(np.mean(np.diff(x)))
        if x.size > 1 and not np.allclose(np.diff(x), step, rtol=1e-9, atol=0):
            raise GridError("CSV midpoints are not uniformly spaced")
        return cls(float(x[0] - 0.5 * step), step, vals)


def _looks_like_csv(source) -> bool:
    return isinstance(source, str) and "\n" in source


def n_cells(lo: float, hi: float, step: float) -> int:
    n = (hi - lo) / step
    nr = round(n)
    if abs(n - nr) > 1e-6 * max(1.0, n):
        raise GridError(f"window length {hi - lo} is not a multiple of step {step}")
    if nr < 1:
        raise GridError("window must contain at least one cell")
    return int(nr)


@dataclass(frozen=True)
class CellSet:
    """A set of cells of a grid, stored as sorted unique lattice indices."""

    origin: float
    step: float
    n: int
    indices: np.ndarray

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.n):
            raise GridError("cell indices out of grid bounds")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, f: GridFunction, indices) -> "CellSet":
        return cls(f.origin, f.step, f.n, indices)

    @property
    def measure(self) -> float:
        return self.indices.size * self.step

    @property
    def midpoints(self) -> np.ndarray:
        return self.origin + (self.indices + 0.5) * self.step

    def __len__(self):
        return int(self.indices.size)

    def indicator(self) -> GridFunction:
        vals = np.zeros(self.n, dtype=complex)
        vals[self.indices] = 1.0
        return GridFunction(self.origin, self.step, vals)


def _clipped(f: GridFunction, over: Interval | None) -> np.ndarray:
    if over is None:
        return f.values
    i0, i1 = f.cell_range(over)
    a, b = max(i0, 0), min(i1, f.n)
    return f.values[a:b] if b > a else f.values[:0]


def integrate(f: GridFunction, over: Interval | None = None) -> complex:
    """Midpoint-rule integral over cells whose midpoints lie in ``over``."""
    return complex(np.sum(_clipped(f, over)) * f.step)


def lp_norm(f: GridFunction, p: float, over: Interval | None = None) -> float:
    if not p >= 1:
        raise InvalidExponentError(f"p must be >= 1, got {p}")
    v = np.abs(_clipped(f, over))
    if math.isinf(p):
        return float(v.max(initial=0.0))
    return float(np.sum(v**p) * f.step) ** (1.0 / p)


def rearrangement_value(f: GridFunction, I: Interval, t: float) -> float:
    """Non-increasing rearrangement of ``f * chi_I`` evaluated at ``t``.

    ``(f chi_I)^*(t) = inf{a : |{|f| > a} cap I| < t}``. With cell weights
    ``h`` the infimum is the (K+1)-th largest ``|sample|`` where
    ``K = ceil(t/h) - 1`` is the largest admissible count of exceedances.
    """
    if not t > 0:
        raise GridError(f"rearrangement needs t > 0, got {t}")
    v = np.sort(np.abs(_clipped(f, I)))[::-1]
    k = math.ceil(t / f.step - 1e-9) - 1
    return float(v[k]) if k < v.size else 0.0


def translate(f: GridFunction, z: float) -> GridFunction:
    """Return ``x -> f(x - z)`` with ``z`` snapped to a whole number of cells."""
    k = round(z / f.step)
    resid = z - k * f.step
    return GridFunction(f.origin + k * f.step, f.step, f.values, snap_residual=resid)


def shift_cells(values: np.ndarray, k: int) -> np.ndarray:
    """Array version of ``x -> f(x + k*step)`` with zero fill."""
    out = np.zeros_like(values)
    n = values.size
    if k >= 0:
        if k < n:
            out[: n - k] = values[k:]
    else:
        if -k < n:
            out[-k:] = values[: n + k]
    return out
