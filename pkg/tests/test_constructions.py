import math

import numpy as np
import pytest

from conftest import step_corpus
from czlab.constructions import (
    WitnessUnavailableError,
    annulus_bounds,
    choose_A2,
    fit_annulus,
    lower_bound_testfn,
    noncompact_witness,
    oscillation_sets,
)
from czlab.curve import flat, sawtooth
from czlab.grid import GridFunction, Interval, OutOfWindowError
from czlab.spaces import MorreyParams, mean_oscillation, morrey_norm
from czlab.symbols import make_symbol

P = MorreyParams(2.0, 0.5)


def test_sets_linear_symbol():
    b = GridFunction.from_function(lambda x: x, -4, 12, 1 / 64)
    s = oscillation_sets(b, Interval.from_endpoints(0, 2))
    assert s.I_tilde == Interval(5.0, 1.0)
    assert s.alpha == 5.0 and s.sign == -1
    assert s.omega == pytest.approx(7 / 8, abs=1 / 64)
    e, f = s.E.midpoints, s.F.midpoints
    assert e.min() > 0 and e.max() < 2 and f.min() > 5 and f.max() < 6
    assert np.min(np.abs(e[:, None] - f[None, :])) >= 3
    assert all(s.check(b).values())


def test_sets_heaviside():
    b = GridFunction.from_function(lambda x: (x >= 0).astype(float), -6, 6, 1 / 64)
    s = oscillation_sets(b, Interval(0, 1))
    assert s.I_tilde == Interval(4.0, 1.0) and s.alpha == 1.0 and s.sign == -1
    assert np.all(b.values[s.E.indices] == 0) and s.omega <= 1
    assert s.F.measure == pytest.approx(1.0)
    assert all(s.check(b).values())


def test_sets_constant_degenerate():
    b = GridFunction.from_function(lambda x: 0 * x + 2, -6, 6, 1 / 64)
    s = oscillation_sets(b, Interval(0, 1))
    assert s.omega == 0 and s.degenerate and all(s.check(b).values())


def test_sets_window():
    b = GridFunction.from_function(lambda x: x, -4, 4, 1 / 64)
    with pytest.raises(OutOfWindowError):
        oscillation_sets(b, Interval(1, 1))


def test_sets_corpus():
    for b, I in step_corpus(100, 1, seed=11):
        assert all(oscillation_sets(b, I).check(b).values())


def test_testfn_odd_symbol():
    b = GridFunction.from_function(np.sign, -4, 4, 1 / 64)
    lb = lower_bound_testfn(b, Interval(0, 1), P)
    amp = 2 ** (-(1 - P.lam) / P.p)
    assert lb.alpha == 0 and lb.a == 0
    x = b.midpoints
    expect = np.where(np.abs(x) < 1, amp * np.sign(x), 0.0)
    assert np.array_equal(lb.f.values.real, expect)


def test_testfn_half_indicator():
    b = GridFunction.from_function(lambda x: (x < 0.5).astype(float), -1, 2, 1 / 64)
    lb = lower_bound_testfn(b, Interval.from_endpoints(0, 1), P)
    assert lb.alpha == 0.5 and lb.a == 0 and lb.f.values.sum() == 0


@pytest.mark.parametrize("p,lam", [(1.5, 0.25), (2, 0.5), (3, 0.75)])
def test_testfn_corpus(p, lam):
    mp = MorreyParams(p, lam)
    for b, I in step_corpus(100, 1, seed=12):
        lb = lower_bound_testfn(b, I, mp)
        v = lb.f.values.real
        i0, i1 = b.cell_range(lb.I)
        assert abs(lb.a) <= 0.5
        assert abs(v.sum()) <= 1e-10 * max(np.abs(v).sum(), 1e-300)
        assert np.all(v[:i0] == 0) and np.all(v[i1:] == 0)
        assert np.all(v[i0:i1] * (b.values.real[i0:i1] - lb.alpha) >= 0)


def test_annulus_constant_symbol_vanishes():
    b = GridFunction.from_function(lambda x: 0 * x + 1, -64, 64, 1 / 32)
    lb = lower_bound_testfn(b.with_values(np.sign(b.midpoints)), Interval(0, 0.25), P)
    t = annulus_bounds(flat(), b, lb, 4, P)
    assert t.lower_lhs == 0 and t.upper_lhs == 0


def test_annulus_heaviside_fits():
    b = GridFunction.from_function(lambda x: (x >= 0).astype(float), -64, 64, 1 / 128)
    lb = lower_bound_testfn(b, Interval(0, 0.125), P)
    delta = mean_oscillation(b, lb.I)
    assert delta == pytest.approx(0.5)
    for c in (flat(), sawtooth(0.5)):
        fit = fit_annulus(c, b, lb, range(4, 9), P, delta)
        assert fit.c1 > 0 and math.isfinite(fit.c2)
        assert max(fit.spread()) <= 1.3
        for t in fit.table:
            assert t.lower_ratio >= fit.c1 / 2 * delta**P.p
    A2 = choose_A2(fit.c1, fit.c2, delta, P.p)
    assert A2 > 16 and math.log2(A2).is_integer()


def test_annulus_window():
    b = GridFunction.from_function(lambda x: (x >= 0).astype(float), -8, 8, 1 / 64)
    lb = lower_bound_testfn(b, Interval(0, 0.5), P)
    with pytest.raises(OutOfWindowError):
        annulus_bounds(flat(), b, lb, 5, P)


def test_witness_clipped_log():
    b = make_symbol("clipped-log", -8, 8, 1 / 512)
    w = noncompact_witness(flat(), b, "shrinking", P, 4)
    lens = [lb.I.length for lb in w.functions]
    assert all(a >= 2 * c for a, c in zip(lens, lens[1:]))
    assert w.min_distance >= 0.1 * w.unit
    rows = w.to_csv().splitlines()
    assert rows[0] == "scenario,j,l,m,distance,unit,fitted_bound" and len(rows) == 7


def test_witness_unavailable():
    with pytest.raises(WitnessUnavailableError):
        noncompact_witness(flat(), make_symbol("smooth-bump", -8, 8, 1 / 512), "shrinking", P, 4)
    with pytest.raises(WitnessUnavailableError):
        noncompact_witness(flat(), make_symbol("constant", -8, 8, 1 / 64), "shrinking", P, 4)


def test_witness_growing_window_limited():
    b = make_symbol("clipped-log", -8, 8, 1 / 256)
    w = noncompact_witness(flat(), b, "growing", P, 3)
    assert w.achieved_ratio >= 2 and w.min_distance > 0
