import numpy as np
import pytest

from czlab.grid import GridFunction, Interval
from czlab.symbols import make_symbol

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, passed: bool, detail: str):
    ACCEPTANCE[n] = (bool(passed), detail)
    print(f"criterion {n}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def step_corpus(n_symbols=100, n_intervals=10, lo=-16.0, hi=16.0, step=1 / 32, seed=0):
    """(b, I) pairs: random step symbols and intervals whose 5-fold dilate fits the window."""
    rng = np.random.default_rng(seed)
    for s in range(n_symbols):
        b = make_symbol("random-step", lo, hi, step, seed=[seed, s])
        for _ in range(n_intervals):
            r = step * rng.integers(2, 64)
            c = rng.uniform(lo + 5 * r, hi - 5 * r)
            I, _ = b.snap_interval(Interval(c, r))
            if b.contains_interval(I.scaled(5)):
                yield b, I
