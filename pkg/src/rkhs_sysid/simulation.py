"""Ground-truth LTI systems, input generators and noisy dataset synthesis.

Noise is drawn with NumPy's ``Generator(PCG64(seed)).standard_normal``, so a
given seed reproduces the same stream wherever the same NumPy bit generator
is available.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .convolution import Signal, _lag_intervals
from .errors import InvalidArgument
from .kernels import TimeDomain

BIBO_TOL = 1e-12


class LtiSystem:
    """Base class: a BIBO-stable system given by its impulse response."""

    domain = TimeDomain.DISCRETE

    def true_response(self, t):
        raise NotImplementedError

    def l1_norm(self) -> float:
        raise NotImplementedError

    def tail_bound(self, start) -> float:
        """Upper bound on ``sum_{t >= start} |g_t|`` (or the integral)."""
        raise NotImplementedError


@dataclass(frozen=True)
class TransferFunctionSystem(LtiSystem):
    """Discrete rational transfer function ``num(z^-1) / den(z^-1)``."""

    num: tuple
    den: tuple
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        num = tuple(float(x) for x in np.atleast_1d(self.num))
        den = tuple(float(x) for x in np.atleast_1d(self.den))
        if not den or den[0] == 0:
            raise InvalidArgument("denominator must have a non-zero leading coefficient")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if self.pole_radius >= 1.0:
            raise InvalidArgument(
                f"unstable transfer function: pole modulus {self.pole_radius:.6g} >= 1")

    @property
    def poles(self):
        return np.roots(self.den) if len(self.den) > 1 else np.empty(0)

    @property
    def pole_radius(self) -> float:
        p = self.poles
        return float(np.max(np.abs(p))) if p.size else 0.0

    def _table(self, n):
        tab = self._cache.get("g")
        if tab is None or tab.size < n:
            m = max(n, 2 * (tab.size if tab is not None else 64))
            imp = np.zeros(m)
            imp[0] = 1.0
            tab = sps.lfilter(self.num, self.den, imp)
            self._cache["g"] = tab
        return tab[:n]

    def true_response(self, t):
        t = np.asarray(t)
        if np.any(t < 0) or np.any(t != np.round(t)):
            raise InvalidArgument("discrete times must be non-negative integers")
        n = int(np.max(t)) + 1 if t.size else 0
        out = self._table(n)[t.astype(int)] if t.size else np.zeros(0)
        return float(out) if out.ndim == 0 else out

    def _geometric_envelope(self):
        # |g_t| <= C r^t with r between the pole radius and 1
        r = 0.5 * (1.0 + self.pole_radius) if self.pole_radius > 0 else 0.5
        g = self._table(4096)
        c = float(np.max(np.abs(g) / r ** np.arange(g.size)))
        return c, r

    def l1_norm(self):
        g = self._table(64)
        h = 64
        while self.tail_bound(h) > BIBO_TOL * max(np.abs(g).sum(), 1.0):
            h *= 2
            g = self._table(h)
        return float(np.abs(g).sum())

    def tail_bound(self, start):
        c, r = self._geometric_envelope()
        return c * r ** start / (1 - r)


@dataclass(frozen=True)
class ImpulseTableSystem(LtiSystem):
    """Explicit impulse response table, ``|g_t| <= constant * rate**t`` beyond it (taken as 0)."""

    table: tuple
    rate: float
    constant: float

    def __post_init__(self):
        tab = tuple(float(x) for x in np.atleast_1d(self.table))
        if not all(math.isfinite(x) for x in tab):
            raise InvalidArgument("impulse table must be finite")
        if not 0 < self.rate < 1 or self.constant < 0:
            raise InvalidArgument("tail envelope needs rate in (0, 1) and constant >= 0")
        object.__setattr__(self, "table", tab)

    def true_response(self, t):
        t = np.asarray(t)
        if np.any(t < 0) or np.any(t != np.round(t)):
            raise InvalidArgument("discrete times must be non-negative integers")
        tab = np.asarray(self.table)
        idx = t.astype(int)
        out = np.where(idx < tab.size, tab[np.clip(idx, 0, tab.size - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def l1_norm(self):
        return float(np.abs(self.table).sum())

    def tail_bound(self, start):
        start = max(start, len(self.table))
        return self.constant * self.rate ** start / (1 - self.rate)


@dataclass(frozen=True)
class ExponentialSystem(LtiSystem):
    """Continuous-time ``g(t) = sum_r gains[r] * exp(-rates[r] * t)`` with all rates > 0."""

    gains: tuple
    rates: tuple
    domain = TimeDomain.CONTINUOUS

    def __post_init__(self):
        gains = tuple(float(x) for x in np.atleast_1d(self.gains))
        rates = tuple(float(x) for x in np.atleast_1d(self.rates))
        if len(gains) != len(rates) or not gains:
            raise InvalidArgument("gains and rates must be non-empty and equally long")
        if min(rates) <= 0:
            raise InvalidArgument("every decay rate must be positive")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "rates", rates)

    def true_response(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise InvalidArgument("time must be non-negative")
        out = sum(c * np.exp(-p * t) for c, p in zip(self.gains, self.rates))
        return float(out) if np.ndim(out) == 0 else out

    def integral(self, a, b):
        """Exact ``int_a^b g(t) dt``."""
        return sum(c / p * (math.exp(-p * a) - math.exp(-p * b))
                   for c, p in zip(self.gains, self.rates))

    def l1_norm(self):
        return sum(abs(c) / p for c, p in zip(self.gains, self.rates))

    def tail_bound(self, start):
        return sum(abs(c) / p * math.exp(-p * start) for c, p in zip(self.gains, self.rates))


def one_pole(a: float) -> TransferFunctionSystem:
    """``g_t = a**t``."""
    return TransferFunctionSystem((1.0,), (1.0, -float(a)))


def true_response(sys: LtiSystem, t):
    return sys.true_response(t)


def simulate(sys: LtiSystem, u: Signal, times) -> np.ndarray:
    """Noiseless outputs ``sum_s g_s u_{tau - s}`` at each ``tau`` in ``times``."""
    if u.domain is not sys.domain:
        raise InvalidArgument("input and system live on different time domains")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty(times.size)
    if u.is_discrete:
        u.domain.check(times)
        if u.times.size == 0 or times.size == 0:
            return np.zeros(times.size)
        first = int(u.times[0])
        dense = u(np.arange(first, int(u.times[-1]) + 1))
        reach = int(times.max()) - first
        if reach < 0:
            return np.zeros(times.size)
        full = np.convolve(sys.true_response(np.arange(reach + 1)), dense)
        idx = times.astype(int) - first
        ok = (idx >= 0) & (idx < full.size)
        out[ok] = full[idx[ok]]
        out[~ok] = 0.0
        return out
    for i, tau in enumerate(times):
        out[i] = sum(val * sys.integral(lo, hi) for lo, hi, val in _lag_intervals(u, tau))
    return out


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidArgument("noise sigma must be finite and >= 0")

    def draw(self, n):
        rng = np.random.Generator(np.random.PCG64(self.seed))
        return self.sigma * rng.standard_normal(n)


@dataclass(frozen=True, eq=False)
class Dataset:
    input: Signal
    sample_times: np.ndarray
    outputs: np.ndarray
    noise_sigma: float | None = None

    def __post_init__(self):
        t = self.input.domain.check(np.atleast_1d(self.sample_times)).ravel()
        y = np.asarray(self.outputs, dtype=float).ravel()
        if t.size != y.size:
            raise InvalidArgument("sample_times and outputs differ in length")
        if t.size == 0:
            raise InvalidArgument("dataset is empty")
        if np.any(np.diff(t) <= 0):
            raise InvalidArgument("sample times must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise InvalidArgument("outputs must be finite")
        object.__setattr__(self, "sample_times", t)
        object.__setattr__(self, "outputs", y)

    def __len__(self):
        return self.sample_times.size

    def subset(self, idx):
        idx = np.sort(np.asarray(idx))
        return Dataset(self.input, self.sample_times[idx], self.outputs[idx], self.noise_sigma)


def make_dataset(sys: LtiSystem, u: Signal, times, noise: NoiseSpec = NoiseSpec()) -> Dataset:
    clean = simulate(sys, u, times)
    y = clean + noise.draw(clean.size) if noise.sigma > 0 else clean
    return Dataset(u, np.asarray(times, dtype=float), y, noise.sigma)


INPUT_KINDS = ("impulse", "step", "prbs", "sine", "uniform_random")


def make_input(kind, length=100, amplitude=1.0, seed=0, *, domain="discrete", dt=1.0,
               frequency=0.05, phase=0.0, hold=1) -> Signal:
    """Generate a bounded test input with ``sup_norm <= amplitude``.

    Samples are placed at ``0, 1, ..., length - 1`` (discrete) or at knots
    ``0, dt, ...`` with a terminating zero knot (continuous). ``hold``
    repeats each PRBS / random sample that many times.
    """
    if kind not in INPUT_KINDS:
        raise InvalidArgument(f"unknown input kind {kind!r}; expected one of {INPUT_KINDS}")
    if length < 1 or amplitude < 0 or hold < 1:
        raise InvalidArgument("need length >= 1, amplitude >= 0, hold >= 1")
    length, hold = int(length), int(hold)
    rng = np.random.Generator(np.random.PCG64(seed))
    n_draw = -(-length // hold)
    if kind == "impulse":
        v = np.zeros(length)
        v[0] = 1.0
    elif kind == "step":
        v = np.ones(length)
    elif kind == "prbs":
        nbits = max(2, math.ceil(math.log2(n_draw + 1)))
        state = rng.integers(0, 2, nbits)
        if not state.any():
            state[0] = 1
        seq = sps.max_len_seq(nbits, state=state, length=n_draw)[0]
        v = np.repeat(2.0 * seq - 1.0, hold)[:length]
    elif kind == "sine":
        v = np.sin(2 * np.pi * frequency * np.arange(length) + phase)
    else:
        v = np.repeat(rng.uniform(-1.0, 1.0, n_draw), hold)[:length]
    v = amplitude * v
    if TimeDomain.parse(domain) is TimeDomain.DISCRETE:
        return Signal.discrete(v)
    knots = dt * np.arange(length + 1)
    return Signal.piecewise(knots, np.append(v, 0.0))
