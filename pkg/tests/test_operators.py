import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from czlab.curve import flat, sawtooth
from czlab.grid import GridFunction, GridMismatchError, integrate
from czlab.operators import (
    InvalidTruncationError,
    TruncationLattice,
    adjoint_cauchy,
    cauchy_image,
    commutator,
    commutator_image,
    hl_maximal,
    maximal_truncated,
    pv_cauchy,
    truncated_cauchy,
)

H = 1e-3


def chi(lo, hi, wlo=-3.0, whi=3.0, step=H):
    return GridFunction.from_function(lambda x: ((x > lo) & (x < hi)).astype(float), wlo, whi, step)


@pytest.fixture(scope="module")
def box():
    return chi(-1, 1)


def test_truncated_closed_form(box):
    v = truncated_cauchy(flat(), box, 2.0, 2.0)
    assert abs(v - 1j * math.log(1.5) / math.pi) <= 1e-3


def test_truncated_edge_cases(box):
    assert truncated_cauchy(flat(), box, 2.0, 4.0) == 0
    assert truncated_cauchy(flat(), GridFunction.zeros(-1, 1, H), 0.3, 0.5) == 0
    with pytest.raises(InvalidTruncationError):
        truncated_cauchy(flat(), box, 2.0, H / 2)


def test_pv_examples(box):
    assert abs(pv_cauchy(flat(), box, 2.0) - 1j * math.log(3) / math.pi) <= 1e-3
    # odd integrand around a midpoint with a symmetric exclusion window
    g = GridFunction.from_function(lambda x: (np.abs(x) < 1).astype(float), -1.5, 1.5, 3 / 301)
    assert abs(pv_cauchy(flat(), g, 0.0)) <= 1e-12


def test_adjoint_antisymmetry(box):
    for x in (-2.5, 0.3, 1.7):
        assert adjoint_cauchy(flat(), box, x) == -pv_cauchy(flat(), box, x)
    assert adjoint_cauchy(flat(), GridFunction.zeros(-1, 1, H), 0.2) == 0


def test_bilinear_duality():
    h = 1 / 128
    f = GridFunction.from_function(lambda x: np.where(x < -1, 1.0, 0.0) * (x > -2), -3, 3, h)
    g = GridFunction.from_function(lambda x: np.where(x > 1, 2.0 - x, 0.0) * (x < 2.5), -3, 3, h)
    for c in (flat(), sawtooth(0.5)):
        lhs = integrate(cauchy_image(c, f) * g)
        rhs = integrate(f * cauchy_image(c, g, adjoint=True))
        assert abs(lhs - rhs) <= 1e-6


def test_maximal(box):
    lat = TruncationLattice(H, 2.0)
    m = maximal_truncated(flat(), box, 2.0, lat)
    assert abs(m - math.log(3) / math.pi) <= 1e-3
    for t in lat.radii[::5]:
        assert m >= abs(truncated_cauchy(flat(), box, 2.0, t))
    assert maximal_truncated(flat(), GridFunction.zeros(-1, 1, H), 0.0, lat) == 0


def test_commutator_examples():
    h = 1 / 1024
    b = GridFunction.from_function(lambda x: x, -3, 3, h)
    f = GridFunction.from_function(lambda x: ((x > 0) & (x < 1)).astype(float), -3, 3, h)
    for x in (-2.0, 0.5, 2.5):
        assert abs(commutator(flat(), b, f, x) - 1j / math.pi) <= 1e-3
    c = b.with_values(np.full(b.n, 4.0))
    assert commutator(flat(), c, f, 0.3) == 0
    with pytest.raises(GridMismatchError):
        commutator(flat(), b, GridFunction(-3 + h / 3, h, np.ones(8)), 0.0)


def test_pointwise_matches_image():
    h = 1 / 64
    f = GridFunction.from_function(lambda x: np.cos(3 * x) * (np.abs(x) < 1), -2, 2, h)
    b = GridFunction.from_function(lambda x: np.sign(x), -2, 2, h)
    img = cauchy_image(sawtooth(0.5), f)
    cimg = commutator_image(sawtooth(0.5), b, f)
    for i in (0, 17, 128, 255):
        x = f.midpoints[i]
        assert pv_cauchy(sawtooth(0.5), f, x) == img.values[i]
        assert commutator(sawtooth(0.5), b, f, x) == cimg.values[i]


def test_pv_first_order_convergence():
    errs = []
    for step in (1 / 64, 1 / 128, 1 / 256):
        f = chi(-1, 1, -3, 3, step)
        xs = f.midpoints[np.abs(np.abs(f.midpoints) - 1) > 0.25]
        img = cauchy_image(flat(), f).sample(xs)
        exact = 1j / math.pi * np.log(np.abs((xs + 1) / (xs - 1)))
        errs.append(np.max(np.abs(img - exact)))
    assert errs[1] <= 0.55 * errs[0] + 1e-14 and errs[2] <= 0.55 * errs[1] + 1e-14


def test_hl_maximal_examples():
    f = chi(0, 1, -3, 3, 1 / 64)
    assert hl_maximal(f, 0.5) == 1.0
    assert abs(hl_maximal(f, 2.0) - 0.5) <= 1 / 64


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=30), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=40, deadline=None)
def test_commutator_linear(vals, a, c):
    n = len(vals)
    f = GridFunction(0.0, 0.25, np.array(vals))
    g = f.with_values(np.roll(f.values, 1))
    b = f.with_values(np.arange(n) ** 0.5)
    x = f.midpoints[n // 2]
    lhs = commutator(sawtooth(0.5), b, a * f + c * g, x)
    rhs = a * commutator(sawtooth(0.5), b, f, x) + c * commutator(sawtooth(0.5), b, g, x)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=3, max_size=30))
@settings(max_examples=40, deadline=None)
def test_hl_dominates(vals):
    f = GridFunction(0.0, 0.5, np.array(vals))
    for x in f.midpoints:
        assert hl_maximal(f, x) >= abs(f.sample(np.array([x]))[0]) * (1 - 1e-12)
