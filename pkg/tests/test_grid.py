import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from czlab.grid import (
    GridFunction,
    GridMismatchError,
    InvalidExponentError,
    Interval,
    OutOfWindowError,
    integrate,
    lp_norm,
    rearrangement_value,
    translate,
)

H = 1 / 64


def ind(lo, hi, wlo=-4.0, whi=4.0, step=H):
    return GridFunction.from_function(lambda x: ((x > lo) & (x < hi)).astype(float), wlo, whi, step)


def test_integrate_indicator():
    f = ind(0, 1)
    assert abs(integrate(f, Interval.from_endpoints(0, 1)) - 1.0) <= H


def test_integrate_odd_is_zero():
    f = ind(0, 1) - ind(-1, 0)
    assert integrate(f) == 0


def test_integrate_linear():
    f = GridFunction.from_function(lambda x: x, 0, 1, H)
    assert abs(integrate(f, Interval.from_endpoints(0, 1)) - 0.5) <= H**2


def test_lp_norm_examples():
    assert abs(lp_norm(ind(0, 1), 2) - 1.0) <= H
    assert abs(lp_norm(2 * ind(0, 4, -8, 8), 2) - 4.0) <= H
    assert lp_norm(GridFunction.zeros(0, 1, H), 2) == 0
    with pytest.raises(InvalidExponentError):
        lp_norm(ind(0, 1), 0.5)


def test_rearrangement_examples():
    f = GridFunction.from_function(lambda x: (x < 0.5).astype(float), 0, 1, H)
    I = Interval.from_endpoints(0, 1)
    assert rearrangement_value(f, I, 0.25) == 1.0
    assert rearrangement_value(f, I, 0.75) == 0.0
    c = GridFunction.from_function(lambda x: -3.0 + 0 * x, 0, 1, H)
    assert rearrangement_value(c, I, 0.4) == 3.0


def test_translate_examples():
    f = ind(0, 1)
    assert np.array_equal(translate(f, 0).values, f.values)
    g = translate(f, 1.0)
    assert np.allclose(g.sample(np.array([1.5, 0.5, 2.5])), [1, 0, 0])
    back = translate(g, -1.0)
    assert back.origin == f.origin and np.array_equal(back.values, f.values)


def test_translate_off_lattice_records_residual():
    g = translate(ind(0, 1), 0.3 * H)
    assert g.snap_residual == pytest.approx(0.3 * H)


def test_incompatible_grids_raise():
    f = ind(0, 1)
    g = GridFunction(-4 + H / 3, H, np.ones(10))
    with pytest.raises(GridMismatchError):
        f + g


def test_out_of_window():
    with pytest.raises(OutOfWindowError):
        ind(0, 1).require_within(Interval(0, 10))


def test_csv_roundtrip(tmp_path):
    f = GridFunction.from_function(lambda x: np.sin(x) + 1j * x, -1, 1, 0.1)
    text = f.to_csv(tmp_path / "f.csv")
    g = GridFunction.from_csv(tmp_path / "f.csv")
    assert text.splitlines()[0] == "x,re,im"
    assert g.same_grid(f) and np.array_equal(g.values, f.values)


vals = st.lists(st.floats(-10, 10, allow_nan=False), min_size=4, max_size=40)


@given(vals, vals, st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=60, deadline=None)
def test_integrate_linear_property(u, v, a, b):
    n = min(len(u), len(v))
    f = GridFunction(0.0, 0.25, np.array(u[:n]))
    g = GridFunction(0.5, 0.25, np.array(v[:n]))
    lhs = integrate(a * f + b * g)
    rhs = a * integrate(f) + b * integrate(g)
    scale = 1 + abs(a) * lp_norm(f, 1) + abs(b) * lp_norm(g, 1)
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(vals, st.integers(-20, 20))
@settings(max_examples=60, deadline=None)
def test_translate_group(u, k):
    f = GridFunction(0.0, 0.5, np.array(u))
    g = translate(translate(f, k * 0.5), -k * 0.5)
    assert g.origin == f.origin and np.array_equal(g.values, f.values)
    assert math.isclose(lp_norm(translate(f, k * 0.5), 2), lp_norm(f, 2), rel_tol=1e-12)
