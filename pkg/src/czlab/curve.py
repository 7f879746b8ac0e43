"""Lipschitz graph curves and the Cauchy kernel along them."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class CurveError(ValueError):
    pass


class SingularityError(CurveError):
    pass


@dataclass(frozen=True, eq=False)
class LipschitzCurve:
    """Graph {(t, A(t))} of a piecewise-linear A given by its knots."""

    t: np.ndarray
    A: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).copy()
        A = np.asarray(self.A, dtype=float).copy()
        if t.ndim != 1 or t.size < 2 or t.shape != A.shape:
            raise CurveError("need at least two knots with matching t and A")
        if np.any(np.diff(t) <= 0):
            raise CurveError("knot abscissae must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(A))):
            raise CurveError("knots must be finite")
        for arr in (t, A):
            arr.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "A", A)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.A) / np.diff(self.t)

    @property
    def lip_const(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    @property
    def is_flat(self) -> bool:
        return bool(np.all(self.A == 0.0))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "A"])
        for a, b in zip(self.t, self.A):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])
        if path is not None:
            Path(path).write_text(buf.getvalue())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path, declared_lip: float | None = None, rtol: float = 1e-9):
        rows = list(csv.DictReader(io.StringIO(Path(path).read_text())))
        curve = cls([float(r["t"]) for r in rows], [float(r["A"]) for r in rows], name=Path(path).stem)
        if declared_lip is not None and not math.isclose(curve.lip_const, declared_lip, rel_tol=rtol, abs_tol=1e-12):
            raise CurveError(f"declared lip_const {declared_lip} != computed {curve.lip_const}")
        return curve


def eval_A(curve: LipschitzCurve, t):
    """Piecewise-linear interpolation with linear extension by the boundary slopes."""
    tt = np.asarray(t, dtype=float)
    out = np.interp(tt, curve.t, curve.A)
    s = curve.slopes
    left = tt < curve.t[0]
    right = tt > curve.t[-1]
    out = np.where(left, curve.A[0] + s[0] * (tt - curve.t[0]), out)
    out = np.where(right, curve.A[-1] + s[-1] * (tt - curve.t[-1]), out)
    return out if out.ndim else float(out)


def _kernel(curve: LipschitzCurve, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if curve.is_flat:
        denom = (y - x) + 0j
    else:
        denom = (y - x) + 1j * (eval_A(curve, y) - eval_A(curve, x))
    return 1.0 / (1j * math.pi * denom)


def cauchy_kernel(curve: LipschitzCurve, x, y):
    """Kernel 1/(pi i (y - x + i[A(y) - A(x)])); raises on the diagonal."""
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(xa == ya):
        raise SingularityError("Cauchy kernel is singular at x == y")
    k = _kernel(curve, xa, ya)
    return complex(k) if k.ndim == 0 else k


# -- built-in curves ----------------------------------------------------------


def flat(lo: float = -1.0, hi: float = 1.0) -> LipschitzCurve:
    return LipschitzCurve([lo, hi], [0.0, 0.0], name="flat")


def sawtooth(lip: float = 0.5, period: float = 1.0, lo: float = -64.0, hi: float = 64.0) -> LipschitzCurve:
    """Zigzag with slopes +-lip, zero at multiples of ``period``."""
    n = int(math.ceil((hi - lo) / (0.5 * period)))
    t = lo + 0.5 * period * np.arange(n + 1)
    A = np.where(np.arange(n + 1) % 2 == 0, 0.0, 0.5 * period * lip)
    return LipschitzCurve(t, A, name=f"sawtooth{lip:g}")


def bump(amplitude: float = 0.5, width: float = 1.0, n_knots: int = 257) -> LipschitzCurve:
    """Smooth C_c^inf bump exp(-1/(1-s^2)) scaled, sampled onto knots."""
    t = np.linspace(-width, width, n_knots)
    s = t / width
    with np.errstate(divide="ignore", over="ignore"):
        core = np.where(np.abs(s) < 1, np.exp(-1.0 / np.clip(1 - s * s, 1e-300, None)), 0.0)
    A = amplitude * core / math.exp(-1.0)
    t = np.concatenate([[-2 * width], t, [2 * width]])
    A = np.concatenate([[0.0], A, [0.0]])
    return LipschitzCurve(t, A, name=f"bump{amplitude:g}")


BUILTIN_CURVES = {
    "flat": lambda: flat(),
    "sawtooth": lambda: sawtooth(0.5),
    "sawtooth1": lambda: sawtooth(1.0),
    "bump": lambda: bump(0.5),
}


def builtin_curve(name: str) -> LipschitzCurve:
    try:
        return BUILTIN_CURVES[name]()
    except KeyError:
        raise CurveError(f"unknown curve {name!r}; choose from {sorted(BUILTIN_CURVES)}") from None


# -- kernel estimates -----------------------------------------------------------


@dataclass(frozen=True)
class KernelConstants:
    c_size: float
    c_smooth: float
    skipped_size: int
    skipped_smooth: int
    n_samples: int


def random_triples(rng: np.random.Generator, n: int, lo: float = -4.0, hi: float = 4.0) -> np.ndarray:
    """Admissible (x, y, z): x != y and |x - y| > 2|y - z|."""
    x = rng.uniform(lo, hi, n)
    y = rng.uniform(lo, hi, n)
    frac = rng.uniform(-0.499, 0.499, n) * rng.uniform(0, 1, n) ** 2
    z = y + frac * np.abs(x - y)
    return np.column_stack([x, y, z])


def verify_kernel_estimates(curve: LipschitzCurve, samples) -> KernelConstants:
    """Smallest constants making the size and smoothness estimates hold on ``samples``."""
    s = np.asarray(samples, dtype=float).reshape(-1, 3)
    x, y, z = s.T
    d = np.abs(x - y)
    ok_size = d > 0
    c_size = 0.0
    if ok_size.any():
        c_size = float(np.max(np.abs(_kernel(curve, x[ok_size], y[ok_size])) * d[ok_size]))
    dz = np.abs(y - z)
    ok_smooth = ok_size & (d > 2 * dz)
    c_smooth = 0.0
    moving = ok_smooth & (dz > 0)
    if moving.any():
        xs, ys, zs = x[moving], y[moving], z[moving]
        diff = np.abs(_kernel(curve, xs, ys) - _kernel(curve, xs, zs)) + np.abs(
            _kernel(curve, ys, xs) - _kernel(curve, zs, xs)
        )
        c_smooth = float(np.max(diff * d[moving] ** 2 / dz[moving]))
    skipped_size = int((~ok_size).sum())
    skipped_smooth = int((~ok_smooth).sum())
    if skipped_size or skipped_smooth:
        warnings.warn(f"skipped {skipped_size} size / {skipped_smooth} smoothness samples", stacklevel=2)
    return KernelConstants(c_size, c_smooth, skipped_size, skipped_smooth, len(s))
