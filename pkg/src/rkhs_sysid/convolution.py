"""Bounded input signals, the convolution functional and its RKHS representer.

For an input ``u`` and time ``tau`` the functional is

    L(g) = sum_{s >= 0} g_s u_{tau - s}        (discrete time)
    L(g) = int_0^inf g_s u_{tau - s} ds        (continuous time)

and its representer ``phi`` satisfies ``L(g) = <phi, g>``, with
``phi_t = L(k_t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .kernels import KernelDescriptor, TimeDomain, tail_mass
from .quadrature import gauss_legendre_composite
from .rkhs import RkhsElement, evaluate, norm, section_integral, tail_horizon


@dataclass(frozen=True, eq=False)
class Signal:
    """A bounded signal on the two-sided time axis.

    Discrete: values at integer ``times`` (any sign), zero elsewhere.
    Continuous: piecewise constant; ``values[i]`` holds on
    ``[times[i], times[i + 1])``, the last value holds forever, and the
    signal is zero before ``times[0]``.
    """

    domain: TimeDomain
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "domain", TimeDomain.parse(self.domain))
        t = np.asarray(self.times, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.shape != v.shape:
            raise InvalidArgument("signal times and values differ in length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise InvalidArgument("signal times and values must be finite")
        if self.domain is TimeDomain.DISCRETE:
            if np.any(t != np.round(t)):
                raise InvalidArgument("discrete signal indices must be integers")
            order = np.argsort(t, kind="stable")
            t, v = t[order], v[order]
            if np.any(np.diff(t) == 0):
                raise InvalidArgument("duplicate discrete signal index")
        elif np.any(np.diff(t) <= 0):
            raise InvalidArgument("continuous knot times must be strictly increasing")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def discrete(cls, values, start=0):
        values = np.asarray(values, dtype=float)
        return cls(TimeDomain.DISCRETE, start + np.arange(values.size), values)

    @classmethod
    def piecewise(cls, knots, values):
        return cls(TimeDomain.CONTINUOUS, knots, values)

    @classmethod
    def zero(cls, domain="discrete"):
        return cls(domain, np.empty(0), np.empty(0))

    @property
    def is_discrete(self):
        return self.domain is TimeDomain.DISCRETE

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.times.size == 0:
            return np.zeros(t.shape)
        if self.is_discrete:
            idx = np.searchsorted(self.times, t)
            idx_c = np.clip(idx, 0, self.times.size - 1)
            hit = self.times[idx_c] == t
            return np.where(hit, self.values[idx_c], 0.0)
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.where(idx >= 0, self.values[np.clip(idx, 0, None)], 0.0)

    def scaled(self, alpha):
        return Signal(self.domain, self.times, float(alpha) * self.values)

    def shifted(self, delay):
        """``u_shifted(t) = u(t - delay)``."""
        return Signal(self.domain, self.times + delay, self.values)

    def __add__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        if other.domain is not self.domain:
            raise InvalidArgument("cannot add signals of different time domains")
        t = np.union1d(self.times, other.times)
        return Signal(self.domain, t, self(t) + other(t))

    def pieces(self):
        """Continuous only: ``(start, end, value)`` triples, last one unbounded."""
        ends = np.append(self.times[1:], math.inf)
        return list(zip(self.times.tolist(), ends.tolist(), self.values.tolist()))


def _check_pair(u, g_or_k):
    k = g_or_k.kernel if isinstance(g_or_k, RkhsElement) else g_or_k
    if u.domain is not k.domain:
        raise InvalidArgument(
            f"input is {u.domain.value}-time but kernel is {k.domain.value}-time")
    return k


def _lag_window(u, tau):
    """Discrete lags s >= 0 where u_{tau - s} may be non-zero."""
    if u.times.size == 0:
        return np.empty(0)
    lo = max(0, int(tau - u.times[-1]))
    hi = int(tau - u.times[0])
    if hi < lo:
        return np.empty(0)
    return np.arange(lo, hi + 1, dtype=float)


def _lag_intervals(u, tau, horizon=math.inf):
    """Continuous: ``(s_lo, s_hi, value)`` with ``u_{tau - s} = value`` on ``(s_lo, s_hi]``."""
    out = []
    for start, end, val in u.pieces():
        s_hi = min(tau - start, horizon)
        s_lo = max(0.0, tau - end)
        if s_hi > s_lo and val != 0.0:
            out.append((s_lo, s_hi, val))
    return out


def apply_L_with_error(u: Signal, tau, g: RkhsElement, max_step=0.25):
    """``(L_{u,tau}(g), error_estimate)``; the estimate is 0 in discrete time."""
    k = _check_pair(u, g)
    k.domain.check(tau)
    if k.discrete:
        lags = _lag_window(u, tau)
        if lags.size == 0 or g.centers.size == 0:
            return 0.0, 0.0
        v = u(tau - lags)
        keep = v != 0
        return float(evaluate(g, lags[keep]) @ v[keep]), 0.0
    total, err = 0.0, 0.0
    for s_lo, s_hi, val in _lag_intervals(u, tau):
        inside = g.centers[(g.centers > s_lo) & (g.centers < s_hi)]
        n_sub = max(1, math.ceil((s_hi - s_lo) / max_step))
        breaks = np.union1d(np.linspace(s_lo, s_hi, n_sub + 1), inside)
        val_i, err_i = gauss_legendre_composite(lambda s: evaluate(g, s), breaks)
        total += val * val_i
        err += abs(val) * err_i
    return total, err


def apply_L(u: Signal, tau, g: RkhsElement) -> float:
    """The convolution functional ``L_{u,tau}`` applied to ``g``."""
    return apply_L_with_error(u, tau, g)[0]


@dataclass(frozen=True, eq=False)
class Representer:
    """Finite-atom representer of ``L_{u,tau}``.

    ``tail_bound`` bounds the RKHS-norm error from truncating the lag range at
    ``truncation_horizon``; ``discretization_error`` (continuous time only) is
    a refinement-based estimate of the Riemann-sum error.
    """

    tau: float
    element: RkhsElement
    truncation_horizon: float
    tail_bound: float
    discretization_error: float = 0.0

    @property
    def error_bound(self):
        return self.tail_bound + self.discretization_error


def _level_for(length, max_step):
    return max(0, math.ceil(math.log2(max(length / max_step, 1.0))))


def representer_phi(k: KernelDescriptor, u: Signal, tau, tail_tol=1e-8,
                    max_step=1.0 / 256) -> Representer:
    """Build the representer of ``L_{u,tau}`` in the RKHS of ``k``.

    Lags beyond the horizon ``H`` with ``|u|_inf^2 * tail(H) < tail_tol^2``
    are dropped. In continuous time each input piece contributes a dyadic
    section integral with spacing at most ``max_step``.
    """
    _check_pair(u, k)
    k.domain.check(tau)
    sup = u.sup_norm
    zero = RkhsElement.zero(k)
    if sup == 0.0:
        return Representer(float(tau), zero, 0.0, 0.0)
    horizon = tail_horizon(k, (tail_tol / sup) ** 2)
    if k.discrete:
        lags = _lag_window(u, tau)
        if lags.size == 0:
            return Representer(float(tau), zero, 0.0, 0.0)
        truncated = lags[-1] > horizon
        lags = lags[lags <= horizon]
        weights = u(tau - lags)
        element = RkhsElement(k, lags, weights).drop_zeros()
        tail = sup * math.sqrt(tail_mass(k, horizon + 1)) if truncated else 0.0
        return Representer(float(tau), element, float(horizon), tail)

    parts, coarse = [], []
    truncated = False
    for s_lo, s_hi, val in _lag_intervals(u, tau):
        if s_lo >= horizon:
            truncated = True
            continue
        if s_hi > horizon:
            truncated = True
            s_hi = horizon
        level = _level_for(s_hi - s_lo, max_step)
        parts.append(val * section_integral(k, s_lo, s_hi, level))
        coarse.append(val * section_integral(k, s_lo, s_hi, max(level - 1, 0)))
    if not parts:
        element = zero
        disc = 0.0
    else:
        element = _sum(parts)
        disc = 2.0 * norm(element - _sum(coarse))
    tail = sup * math.sqrt(tail_mass(k, horizon)) if truncated else 0.0
    return Representer(float(tau), element, float(horizon), tail, disc)


def _sum(elements):
    k = elements[0].kernel
    return RkhsElement(k, np.concatenate([e.centers for e in elements]),
                       np.concatenate([e.weights for e in elements]))


def operator_norm(phi: Representer) -> float:
    """RKHS norm of the representer, i.e. the norm of the bounded functional."""
    return norm(phi.element)


def partial_sum_element(k: KernelDescriptor, u: Signal, tau, n) -> RkhsElement:
    """``f_n = sum_{s=0}^{n} k(., s) u_{tau - s}`` (discrete time)."""
    if not k.discrete:
        raise InvalidArgument("partial sums are defined for discrete-time kernels")
    lags = np.arange(0, int(n) + 1, dtype=float)
    return RkhsElement(k, lags, u(tau - lags))
