"""Finite-atom elements of an RKHS: sums of weighted kernel sections.

An element ``e = sum_i w_i k(., c_i)`` is stored with sorted, distinct
centers. All inner products reduce to kernel quadratic forms; kernels with
a bounded ``p(min) q(max)`` factorization (TC, SS, Constant) use an
``O(n log n)`` prefix-sum evaluation, everything else a chunked dense one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivergenceSuspected, InvalidArgument
from .kernels import KernelDescriptor, tail_mass

_CHUNK = 1 << 22  # entries per dense block


def _coalesce(centers, weights):
    centers = np.asarray(centers, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if centers.shape != weights.shape:
        raise InvalidArgument("centers and weights must have equal length")
    if centers.size == 0:
        return centers, weights
    uniq, inv = np.unique(centers, return_inverse=True)
    if uniq.size == centers.size:
        order = np.argsort(centers, kind="stable")
        return centers[order], weights[order]
    merged = np.zeros(uniq.size)
    np.add.at(merged, inv, weights)
    return uniq, merged


@dataclass(frozen=True, eq=False)
class RkhsElement:
    """``sum_i weights[i] * k(., centers[i])``; centers sorted and distinct."""

    kernel: KernelDescriptor
    centers: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        c = self.kernel.domain.check(self.centers)
        c, w = _coalesce(c, self.weights)
        if not np.all(np.isfinite(w)):
            raise InvalidArgument("atom weights must be finite")
        c.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "weights", w)

    @classmethod
    def zero(cls, kernel):
        return cls(kernel, np.empty(0), np.empty(0))

    @property
    def atoms(self):
        return list(zip(self.weights.tolist(), self.centers.tolist()))

    def __len__(self):
        return self.centers.size

    def _same_kernel(self, other):
        if not isinstance(other, RkhsElement):
            return NotImplemented
        if other.kernel != self.kernel:
            raise InvalidArgument("elements live in RKHSs of different kernels")
        return True

    def __add__(self, other):
        if self._same_kernel(other) is NotImplemented:
            return NotImplemented
        return RkhsElement(self.kernel,
                           np.concatenate([self.centers, other.centers]),
                           np.concatenate([self.weights, other.weights]))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return RkhsElement(self.kernel, self.centers, -self.weights)

    def __mul__(self, alpha):
        return RkhsElement(self.kernel, self.centers, float(alpha) * self.weights)

    __rmul__ = __mul__

    def __call__(self, t):
        return evaluate(self, t)

    def drop_zeros(self):
        keep = self.weights != 0
        return RkhsElement(self.kernel, self.centers[keep], self.weights[keep])


def section(k: KernelDescriptor, t) -> RkhsElement:
    return RkhsElement(k, np.atleast_1d(float(k.domain.check(t))), np.ones(1))


def combination(k: KernelDescriptor, centers, weights) -> RkhsElement:
    return RkhsElement(k, centers, weights)


# -- bilinear forms -------------------------------------------------------------

def _cross_dense(k, x, a, y, b):
    if x.size == 0 or y.size == 0:
        return 0.0
    rows = max(1, _CHUNK // max(y.size, 1))
    total = 0.0
    for i in range(0, x.size, rows):
        total += float(a[i:i + rows] @ (k.matrix(x[i:i + rows], y) @ b))
    return total


def _cross_semiseparable(factors, x, a, y, b):
    """sum_ij a_i b_j sum_r p_r(min(x_i, y_j)) q_r(max(x_i, y_j)), x and y sorted."""
    if x.size == 0 or y.size == 0:
        return 0.0
    total = 0.0
    cut = np.searchsorted(x, y, side="right")  # x[:cut[j]] <= y[j]
    for p, q in factors:
        pre = np.concatenate([[0.0], np.cumsum(a * p(x))])
        aq = a * q(x)
        suf = np.concatenate([np.cumsum(aq[::-1])[::-1], [0.0]])
        total += float(b @ (q(y) * pre[cut] + p(y) * suf[cut]))
    return total


def _sorted(x, a):
    x = np.asarray(x, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    if x.size > 1 and np.any(np.diff(x) < 0):
        order = np.argsort(x, kind="stable")
        return x[order], a[order]
    return x, a


def cross_form(k: KernelDescriptor, x, a, y, b) -> float:
    """``a^T K(x, y) b`` for center arrays ``x``, ``y`` and weights ``a``, ``b``."""
    factors = k.semiseparable_factors()
    if factors is not None:
        return _cross_semiseparable(factors, *_sorted(x, a), *_sorted(y, b))
    return _cross_dense(k, x, a, y, b)


def inner(e1: RkhsElement, e2: RkhsElement) -> float:
    e1._same_kernel(e2)
    return cross_form(e1.kernel, e1.centers, e1.weights, e2.centers, e2.weights)


def norm(e: RkhsElement) -> float:
    return math.sqrt(max(inner(e, e), 0.0))


def evaluate(e: RkhsElement, t):
    """Pointwise value(s) ``sum_i w_i k(t, c_i)`` by the reproducing property."""
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
    if e.centers.size == 0:
        out = np.zeros(tt.size)
    else:
        rows = max(1, _CHUNK // e.centers.size)
        out = np.concatenate([e.kernel.matrix(tt[i:i + rows], e.centers) @ e.weights
                              for i in range(0, tt.size, rows)]) if tt.size else np.zeros(0)
    return float(out[0]) if scalar else out


def element_gram(elements) -> np.ndarray:
    """Matrix of pairwise inner products of elements sharing one kernel."""
    elements = list(elements)
    n = len(elements)
    if n == 0:
        return np.zeros((0, 0))
    k = elements[0].kernel
    for e in elements[1:]:
        elements[0]._same_kernel(e)
    union = np.unique(np.concatenate([e.centers for e in elements]))
    if union.size <= 4096 or k.semiseparable_factors() is None:
        w = np.zeros((n, union.size))
        for i, e in enumerate(elements):
            w[i, np.searchsorted(union, e.centers)] = e.weights
        kw = np.zeros((union.size, n))
        rows = max(1, _CHUNK // max(union.size, 1))
        for i in range(0, union.size, rows):
            kw[i:i + rows] = k.matrix(union[i:i + rows], union) @ w.T
        g = w @ kw
    else:
        g = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                g[i, j] = g[j, i] = inner(elements[i], elements[j])
    return 0.5 * (g + g.T)


# -- section integrals and sums -------------------------------------------------

def dyadic_grid(lo, hi, level):
    """Left endpoints ``lo + (i - 1) * delta`` and spacing ``delta = 2**-level * (hi - lo)``."""
    n = 1 << int(level)
    delta = (hi - lo) / n
    return lo + delta * np.arange(n), delta


def section_integral(k: KernelDescriptor, lo, hi, level: int) -> RkhsElement:
    """Left-endpoint dyadic Riemann approximant of ``int_lo^hi k(., t) dt``."""
    if k.discrete:
        raise InvalidArgument("section_integral needs a continuous-time kernel; use section_sum")
    lo, hi = float(lo), float(hi)
    if not (0 <= lo < hi < math.inf):
        raise InvalidArgument(f"need 0 <= lo < hi < inf, got [{lo}, {hi}]")
    if level < 0 or int(level) != level:
        raise InvalidArgument("level must be a non-negative integer")
    centers, delta = dyadic_grid(lo, hi, level)
    return RkhsElement(k, centers, np.full(centers.size, delta))


@lru_cache(maxsize=256)
def tail_horizon(k: KernelDescriptor, budget, max_horizon=None):
    """Smallest discrete horizon ``H`` with ``sum_{s,t > H} |k(s, t)| < budget``.

    Raises :class:`DivergenceSuspected` if the tail never drops below the budget.
    """
    if not budget > 0:
        raise InvalidArgument("tail budget must be positive")
    max_horizon = 4096 if max_horizon is None else max_horizon
    if not k.discrete:
        return _tail_horizon_continuous(k, budget, max_horizon)
    hi = 0
    history = []
    while True:
        m = tail_mass(k, hi + 1)
        history.append((hi, m))
        if m < budget:
            break
        if hi >= max_horizon:
            raise DivergenceSuspected(
                f"kernel tail stays above {budget:.3g} up to horizon {max_horizon}", history)
        hi = max(1, 2 * hi)
    lo = hi // 2 if hi > 1 else -1
    # tail(lo + 1) >= budget > tail(hi + 1); bisect
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_mass(k, mid + 1) < budget:
            hi = mid
        else:
            lo = mid
    return hi


def _tail_horizon_continuous(k, budget, max_horizon, resolution=1e-3):
    hi = 1.0
    history = []
    while True:
        m = tail_mass(k, hi)
        history.append((hi, m))
        if m < budget:
            break
        if hi >= max_horizon:
            raise DivergenceSuspected(
                f"kernel tail stays above {budget:.3g} up to horizon {max_horizon}", history)
        hi *= 2.0
    lo = 0.0 if hi == 1.0 else hi / 2
    if tail_mass(k, lo) < budget:
        return lo
    while hi - lo > resolution * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if tail_mass(k, mid) < budget:
            hi = mid
        else:
            lo = mid
    return hi


def section_sum(k: KernelDescriptor, lo, hi=math.inf, tail_tol=1e-8) -> RkhsElement:
    """``sum_{lo <= t <= H} k(., t)`` with ``H = hi`` or the tail-truncation horizon."""
    if not k.discrete:
        raise InvalidArgument("section_sum needs a discrete-time kernel; use section_integral")
    k.domain.check(lo)
    lo = int(lo)
    if hi == math.inf:
        h = max(lo, tail_horizon(k, tail_tol ** 2))
    else:
        k.domain.check(hi)
        h = int(hi)
        if h < lo:
            raise InvalidArgument(f"need lo <= hi, got [{lo}, {h}]")
    centers = np.arange(lo, h + 1, dtype=float)
    return RkhsElement(k, centers, np.ones(centers.size))
