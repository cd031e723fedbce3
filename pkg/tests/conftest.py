"""Shared oracles: kernel formulas written out by hand, independent of the package."""
import math

import numpy as np
import pytest
from scipy import integrate

ACCEPTANCE_LINES = []


def ref_tc(beta, continuous=False):
    if continuous:
        return lambda s, t: math.exp(-beta * max(s, t))
    return lambda s, t: beta ** max(s, t)


def ref_dc(decay, rho, continuous=False):
    return lambda s, t: decay ** ((s + t) / 2) * rho ** abs(s - t)


def ref_ss(beta):
    def k(s, t):
        m = max(s, t)
        return math.exp(-beta * (s + t + m)) / 2 - math.exp(-3 * beta * m) / 6
    return k


def ref_matrix(f, xs, ys=None):
    ys = xs if ys is None else ys
    return np.array([[f(float(a), float(b)) for b in ys] for a in xs])


def ref_abs_tail(f, start, horizon):
    """``sum_{s,t = start..horizon} |f(s, t)|`` by brute force."""
    idx = np.arange(start, horizon + 1, dtype=float)
    return float(np.abs(ref_matrix(f, idx)).sum())


def quad_box(f, box1, box2):
    """``int_box1 int_box2 f(s, t) dt ds`` by nested adaptive quadrature.

    The inner integral is split at ``t = s`` where kernels built from
    ``max(s, t)`` or ``|s - t|`` have a kink.
    """
    (a, b), (c, d) = box1, box2

    def inner(s):
        pts = [s] if c < s < d else None
        return integrate.quad(lambda t: f(s, t), c, d, points=pts, epsabs=1e-13,
                              epsrel=1e-12, limit=400)[0]

    pts = [x for x in (c, d) if a < x < b] or None
    return integrate.quad(inner, a, b, points=pts, epsabs=1e-13, epsrel=1e-12, limit=400)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record_acceptance(number, passed, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
