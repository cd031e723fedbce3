"""Reference quadrature over rectangles for kernels with a diagonal kink.

Used as the independent oracle for section integrals and for the continuous
integrability measure. Every stable kernel family in this package is smooth
off the diagonal ``s == t`` but only Lipschitz across it, so the nested
adaptive integrals below always split at the diagonal.
"""
from __future__ import annotations

import numpy as np
from scipy import integrate

EPSABS = 1e-14
EPSREL = 1e-12


def _breakpoints(a, b, candidates):
    return sorted({float(c) for c in candidates if a < c < b})


def _quad(f, a, b, points):
    pts = _breakpoints(a, b, points)
    val, err = integrate.quad(f, a, b, points=pts or None, epsabs=EPSABS,
                              epsrel=EPSREL, limit=400)
    return val, err


def iterated_integral(f, box_outer, box_inner):
    """Compute ``int_{box_outer} int_{box_inner} f(x, y) dy dx``.

    ``f`` is a scalar function of ``(x, y)``; ``x`` ranges over ``box_outer``
    and ``y`` over ``box_inner``. Returns ``(value, error_estimate)``.
    """
    a, b = map(float, box_outer)
    c, d = map(float, box_inner)
    inner_err = [0.0]

    def inner(x):
        val, err = _quad(lambda y: f(x, y), c, d, (x,))
        inner_err[0] = max(inner_err[0], err)
        return val

    val, err = _quad(inner, a, b, (c, d))
    return val, err + inner_err[0] * (b - a)


def double_integral(f, box1, box2):
    """Integral of ``f(s, t)`` over ``box1 x box2``, both iteration orders.

    Returns ``(s_outer, t_outer)``: the value integrating ``s`` in the outer
    loop and the value integrating ``t`` in the outer loop.
    """
    first, _ = iterated_integral(f, box1, box2)
    second, _ = iterated_integral(lambda t, s: f(s, t), box2, box1)
    return first, second


def kernel_box_integral(k, box1, box2, absolute=False):
    """``int_{box1} int_{box2} k(s, t) dt ds`` for a continuous-time kernel."""
    if absolute:
        f = lambda s, t: abs(k(s, t))  # noqa: E731
    else:
        f = k.__call__
    val, _ = iterated_integral(f, box1, box2)
    return val


def gauss_legendre_composite(f, breaks, order=16):
    """Integrate a vectorized ``f`` over consecutive ``breaks`` intervals.

    Returns ``(value, error_estimate)`` where the error estimate is the
    difference from a rule of half the order.
    """
    breaks = np.asarray(breaks, dtype=float)
    if breaks.size < 2:
        return 0.0, 0.0
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)

    def rule(n):
        x, w = np.polynomial.legendre.leggauss(n)
        pts = mid[:, None] + half[:, None] * x[None, :]
        vals = f(pts.ravel()).reshape(pts.shape)
        return float(np.sum(half * (vals @ w)))

    fine = rule(order)
    coarse = rule(order // 2)
    return fine, abs(fine - coarse)
