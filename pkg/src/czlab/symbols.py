"""Built-in symbol corpus sampled onto a grid window."""
from __future__ import annotations

import math

import numpy as np

from .grid import GridError, GridFunction


def heaviside(x, at: float = 0.0):
    return (np.asarray(x) >= at).astype(float)


def clipped_log(x, floor: float = 1e-12):
    return np.log(np.maximum(np.abs(np.asarray(x, dtype=float)), floor))


def smooth_bump(x, center: float = 0.0, width: float = 1.0, height: float = 1.0):
    s = (np.asarray(x, dtype=float) - center) / width
    inside = np.abs(s) < 1
    out = np.zeros_like(s)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return height * out


def sawtooth_bmo(x, period: float = 1.0):
    """Bounded periodic ramp; a BMO function that is not in CMO at large scales."""
    u = np.asarray(x, dtype=float) / period
    return u - np.floor(u) - 0.5


def random_step(lo: float, hi: float, seed, n_pieces: int = 12, slots: int = 64):
    """Piecewise-constant symbol with N(0,1) levels and jumps on a fixed ``slots`` lattice of [lo, hi).

    The jump positions do not depend on the sampling step, so refinements
    sample the same function.
    """
    rng = np.random.default_rng(seed)
    unit = (hi - lo) / slots
    cuts = lo + unit * np.sort(rng.choice(np.arange(1, slots), size=n_pieces - 1, replace=False))
    levels = rng.standard_normal(n_pieces)

    def fn(x):
        return levels[np.searchsorted(cuts, np.asarray(x, dtype=float), side="right")]

    return fn


SYMBOLS = {
    "heaviside": heaviside,
    "clipped-log": clipped_log,
    "smooth-bump": smooth_bump,
    "sawtooth-bmo": sawtooth_bmo,
    "constant": lambda x: np.ones_like(np.asarray(x, dtype=float)),
}


def make_symbol(name: str, lo: float, hi: float, step: float, *, seed=0, scale: float = 1.0) -> GridFunction:
    if name == "random-step":
        g = GridFunction.from_function(random_step(lo, hi, seed), lo, hi, step)
    elif name in SYMBOLS:
        g = GridFunction.from_function(SYMBOLS[name], lo, hi, step)
    else:
        raise GridError(f"unknown symbol {name!r}; choose from {sorted([*SYMBOLS, 'random-step'])}")
    if scale != 1.0:
        g = g.with_values(scale * g.values)
    return g


def parse_symbol(sym: str) -> tuple[str, float, int]:
    """``[scale*]name[@seed]`` -> (name, scale, seed)."""
    seed = 0
    scale = 1.0
    sym = sym.strip()
    if "@" in sym:
        sym, s = sym.split("@", 1)
        seed = int(s)
    if "*" in sym:
        s, sym = sym.split("*", 1)
        scale = float(s)
        if not math.isfinite(scale):
            raise GridError("symbol scale must be finite")
    return sym.strip(), scale, seed
