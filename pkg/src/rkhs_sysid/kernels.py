"""Kernel families on Z+ x Z+ or R+ x R+, Gram matrices and integrability.

The closed forms used here:

* TC  (tuned/correlated):   ``beta**max(s, t)`` (discrete) or ``exp(-beta*max(s, t))``
* DC  (diagonal/correlated): ``decay**((s + t)/2) * rho**|s - t|``
* SS  (stable spline):      ``exp(-beta*(s + t + m))/2 - exp(-3*beta*m)/6`` with ``m = max(s, t)``
* Constant:                 ``c`` everywhere (not stable; used to exercise divergence reporting)
* Tabulated:                a symmetric table on an explicit grid, nearest-grid-point inside it
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DivergenceSuspected, InvalidArgument
from . import quadrature

PSD_TOL = 1e-10

FAMILIES = ("TC", "DC", "SS", "Constant", "Tabulated")

FAMILY_PARAMS = {
    "TC": ("beta",),
    "DC": ("decay", "rho"),
    "SS": ("beta",),
    "Constant": ("value",),
    "Tabulated": (),
}


class TimeDomain(enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"

    @classmethod
    def parse(cls, value) -> "TimeDomain":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgument(f"unknown time domain {value!r}; "
                                  "expected 'discrete' or 'continuous'") from None

    def check(self, t):
        """Validate time value(s) and return them as a float array."""
        arr = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("time values must be finite")
        if np.any(arr < 0):
            raise InvalidArgument("time values must be non-negative")
        if self is TimeDomain.DISCRETE and np.any(arr != np.round(arr)):
            raise InvalidArgument(f"discrete-time values must be integers, got {t!r}")
        return arr


@dataclass(frozen=True, eq=False)
class KernelDescriptor:
    """A Mercer kernel with its hyperparameters.

    Build instances with :func:`tc`, :func:`dc`, :func:`ss`, :func:`constant`,
    :func:`tabulated` or :func:`make_kernel`; the constructor validates.
    """

    family: str
    domain: TimeDomain
    params: tuple = ()
    grid: np.ndarray | None = field(default=None, repr=False)
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "domain", TimeDomain.parse(self.domain))
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown kernel family {self.family!r}")
        p = dict(self.params)
        expected = set(FAMILY_PARAMS[self.family])
        if set(p) != expected:
            raise InvalidArgument(
                f"{self.family} kernel takes hyperparameters {sorted(expected)}, got {sorted(p)}")
        for name, value in p.items():
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise InvalidArgument(f"hyperparameter {name} must be a finite real")
        object.__setattr__(self, "params", tuple(sorted((k, float(v)) for k, v in p.items())))
        discrete = self.domain is TimeDomain.DISCRETE
        if self.family == "TC":
            beta = p["beta"]
            if discrete and not 0 < beta < 1:
                raise InvalidArgument("discrete TC needs beta in (0, 1)")
            if not discrete and not beta > 0:
                raise InvalidArgument("continuous TC needs beta > 0")
        elif self.family == "DC":
            if not 0 < p["decay"] < 1:
                raise InvalidArgument("DC needs decay in (0, 1)")
            lo = -1.0 if discrete else 0.0
            if not (lo <= p["rho"] <= 1) or (not discrete and p["rho"] == 0):
                raise InvalidArgument(
                    "DC needs rho in [-1, 1] (discrete) or (0, 1] (continuous)")
        elif self.family == "SS":
            if not p["beta"] > 0:
                raise InvalidArgument("SS needs beta > 0")
        elif self.family == "Constant":
            if not p["value"] >= 0:
                raise InvalidArgument("Constant kernel needs value >= 0")
        else:
            self._check_table()

    def _check_table(self):
        if self.grid is None or self.table is None:
            raise InvalidArgument("Tabulated kernel needs a grid and a table")
        grid = self.domain.check(np.array(self.grid, dtype=float).ravel())
        table = np.array(self.table, dtype=float)
        n = grid.size
        if n == 0:
            raise InvalidArgument("Tabulated kernel grid is empty")
        if np.any(np.diff(grid) <= 0):
            raise InvalidArgument("Tabulated kernel grid must be strictly increasing")
        if table.shape != (n, n):
            raise InvalidArgument(f"table shape {table.shape} does not match grid size {n}")
        if not np.all(np.isfinite(table)):
            raise InvalidArgument("table values must be finite")
        if not np.array_equal(table, table.T):
            raise InvalidArgument("table must be exactly symmetric")
        grid.setflags(write=False)
        table.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "table", table)

    @property
    def hyper(self) -> dict:
        return dict(self.params)

    @property
    def discrete(self) -> bool:
        return self.domain is TimeDomain.DISCRETE

    @cached_property
    def key(self) -> tuple:
        """Hashable identity used for equality and caching."""
        extra = ()
        if self.family == "Tabulated":
            h = hashlib.sha256(self.grid.tobytes() + self.table.tobytes()).hexdigest()
            extra = (h,)
        return (self.family, self.domain.value, self.params) + extra

    def __eq__(self, other):
        return isinstance(other, KernelDescriptor) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def support(self):
        """Closed interval outside which the kernel is undefined, or ``None``."""
        if self.family == "Tabulated":
            return float(self.grid[0]), float(self.grid[-1])
        return None

    def matrix(self, s, t) -> np.ndarray:
        """Kernel values on the outer grid ``s x t`` (1-D inputs)."""
        s = self.domain.check(np.atleast_1d(s)).ravel()
        t = self.domain.check(np.atleast_1d(t)).ravel()
        return self._raw(s[:, None], t[None, :])

    def pairwise(self, s, t) -> np.ndarray:
        """Kernel values ``k(s[i], t[i])`` for broadcastable arrays."""
        s = self.domain.check(s)
        t = self.domain.check(t)
        return self._raw(s, t)

    def __call__(self, s, t) -> float:
        return float(self.pairwise(s, t))

    def _raw(self, s, t):
        p = dict(self.params)
        fam = self.family
        if fam == "TC":
            m = np.maximum(s, t)
            if self.discrete:
                return np.power(p["beta"], m)
            return np.exp(-p["beta"] * m)
        if fam == "DC":
            return np.power(p["decay"], 0.5 * (s + t)) * np.power(p["rho"], np.abs(s - t))
        if fam == "SS":
            b = p["beta"]
            m = np.maximum(s, t)
            return 0.5 * np.exp(-b * (s + t + m)) - np.exp(-3.0 * b * m) / 6.0
        if fam == "Constant":
            return np.full(np.broadcast(s, t).shape, p["value"])
        return self._tabulated(s, t)

    def _index(self, x):
        g = self.grid
        if np.any(x < g[0]) or np.any(x > g[-1]):
            raise InvalidArgument(
                f"query outside the tabulated grid [{g[0]}, {g[-1]}]")
        hi = np.clip(np.searchsorted(g, x), 1, g.size - 1) if g.size > 1 else np.zeros_like(x, dtype=int)
        if g.size == 1:
            return hi
        lo = hi - 1
        # ties go to the lower grid point
        return np.where(x - g[lo] <= g[hi] - x, lo, hi)

    def _tabulated(self, s, t):
        s, t = np.broadcast_arrays(s, t)
        return self.table[self._index(s), self._index(t)]

    def semiseparable_factors(self):
        """Factors ``[(p, q), ...]`` with ``k(s, t) = sum p(min) * q(max)``.

        Only returned for families where every factor is bounded on T, which
        keeps prefix-sum evaluation free of overflow and cancellation.
        """
        p = dict(self.params)
        if self.family == "TC":
            if self.discrete:
                b = p["beta"]
                return [(lambda x: np.ones_like(x), lambda x: np.power(b, x))]
            b = p["beta"]
            return [(lambda x: np.ones_like(x), lambda x: np.exp(-b * x))]
        if self.family == "SS":
            b = p["beta"]
            return [
                (lambda x: 0.5 * np.exp(-b * x), lambda x: np.exp(-2.0 * b * x)),
                (lambda x: np.full_like(x, -1.0 / 6.0), lambda x: np.exp(-3.0 * b * x)),
            ]
        if self.family == "Constant":
            c = p["value"]
            return [(lambda x: np.full_like(x, c), lambda x: np.ones_like(x))]
        return None

    def to_dict(self) -> dict:
        d = {"family": self.family, "domain": self.domain.value}
        d.update(self.hyper)
        if self.family == "Tabulated":
            d["grid"] = self.grid.tolist()
            d["table"] = self.table.tolist()
        return d


def tc(beta, domain="discrete") -> KernelDescriptor:
    return KernelDescriptor("TC", domain, (("beta", beta),))


def dc(decay, rho, domain="discrete") -> KernelDescriptor:
    return KernelDescriptor("DC", domain, (("decay", decay), ("rho", rho)))


def ss(beta, domain="continuous") -> KernelDescriptor:
    return KernelDescriptor("SS", domain, (("beta", beta),))


def constant(value=1.0, domain="discrete") -> KernelDescriptor:
    return KernelDescriptor("Constant", domain, (("value", value),))


def tabulated(grid, table, domain="discrete") -> KernelDescriptor:
    return KernelDescriptor("Tabulated", domain, (), np.asarray(grid, float), np.asarray(table, float))


def make_kernel(spec: dict) -> KernelDescriptor:
    """Build a kernel from a mapping such as ``{"family": "TC", "domain": "discrete", "beta": 0.8}``."""
    spec = dict(spec)
    try:
        family = spec.pop("family")
    except KeyError:
        raise InvalidArgument("kernel block needs a 'family' entry") from None
    domain = spec.pop("domain", "discrete")
    if family == "Tabulated":
        grid = spec.pop("grid", None)
        table = spec.pop("table", None)
        if spec:
            raise InvalidArgument(f"unknown keys for Tabulated kernel: {sorted(spec)}")
        if grid is None or table is None:
            raise InvalidArgument("Tabulated kernel needs 'grid' and 'table'")
        return tabulated(grid, table, domain)
    return KernelDescriptor(family, domain, tuple(spec.items()))


def eval_kernel(k: KernelDescriptor, s, t) -> float:
    return k(s, t)


@dataclass(frozen=True)
class GramMatrix:
    points: np.ndarray
    values: np.ndarray

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.values)[0])

    def is_psd(self, tol=PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol * max(float(np.trace(self.values)), 0.0)


def gram(k: KernelDescriptor, points) -> GramMatrix:
    pts = np.atleast_1d(np.asarray(points, dtype=float)).ravel()
    if pts.size == 0:
        raise InvalidArgument("gram needs at least one point")
    vals = k.matrix(pts, pts)
    # k is symmetric by construction; average away any asymmetric round-off
    vals = 0.5 * (vals + vals.T)
    return GramMatrix(pts, vals)


# -- integrability -------------------------------------------------------------

def _abs_box_sum(k, lo, hi, chunk=2048):
    """Sum of |k(s, t)| over the integer box [lo, hi]^2 (inclusive), clipped to the support."""
    sup = k.support
    if sup is not None:
        lo = max(lo, math.ceil(sup[0]))
        hi = min(hi, math.floor(sup[1]))
    if hi < lo:
        return 0.0
    pts = np.arange(lo, hi + 1, dtype=float)
    total = 0.0
    for i in range(0, pts.size, chunk):
        total += float(np.abs(k.matrix(pts[i:i + chunk], pts)).sum())
    return total


def _cells(grid, lo, hi):
    """Widths of nearest-grid-point cells restricted to [lo, hi]."""
    edges = np.concatenate([[grid[0]], 0.5 * (grid[1:] + grid[:-1]), [grid[-1]]])
    edges = np.clip(edges, lo, hi)
    return np.diff(edges)


def tabulated_box_integral(k: KernelDescriptor, box1, box2) -> float:
    """Exact integral of a continuous-time tabulated kernel over ``box1 x box2``."""
    if k.family != "Tabulated" or k.discrete:
        raise InvalidArgument("needs a continuous-time tabulated kernel")
    w1 = _cells(k.grid, *map(float, box1))
    w2 = _cells(k.grid, *map(float, box2))
    return float(w1 @ k.table @ w2)


def _abs_box_integral(k, lo, hi):
    """Integral of |k| over [lo, hi]^2 for a continuous-time kernel."""
    sup = k.support
    if sup is not None:
        lo, hi = max(lo, sup[0]), min(hi, sup[1])
        if hi <= lo:
            return 0.0
        w = _cells(k.grid, lo, hi)
        return float(w @ np.abs(k.table) @ w)
    if hi <= lo:
        return 0.0
    return quadrature.kernel_box_integral(k, (lo, hi), (lo, hi), absolute=True)


def _doubling(partial, tol, max_horizon, start_h, what, rtol=0.0):
    history = []
    h = start_h
    prev = partial(h)
    history.append((h, prev))
    while True:
        nxt_h = 2 * h if h > 0 else 1
        if nxt_h > max_horizon:
            raise DivergenceSuspected(
                f"{what} did not settle within horizon {max_horizon} "
                f"(last value {prev:.6g})", history)
        cur = partial(nxt_h)
        history.append((nxt_h, cur))
        if abs(cur - prev) < tol or abs(cur - prev) <= rtol * abs(cur):
            return cur, nxt_h, history
        h, prev = nxt_h, cur


def integrability_measure(k: KernelDescriptor, tail_tol=1e-12, max_horizon=None,
                          *, with_history=False):
    """Partial sum (or integral) of |k| over [0, H]^2 at the first settled dyadic horizon.

    Raises :class:`DivergenceSuspected` when doubling ``H`` still changes the
    value by ``tail_tol`` or more at ``max_horizon``.
    """
    if not tail_tol > 0:
        raise InvalidArgument("tail_tol must be positive")
    if k.discrete:
        max_horizon = 4096 if max_horizon is None else max_horizon
        partial = lambda h: _abs_box_sum(k, 0, int(h))  # noqa: E731
    else:
        max_horizon = 1024.0 if max_horizon is None else max_horizon
        partial = lambda h: _abs_box_integral(k, 0.0, float(h))  # noqa: E731
    start = 0
    if k.support is not None:
        # never stop before the table has been covered
        start = 1 << max(0, math.ceil(math.log2(max(k.support[1], 1.0))))
    value, horizon, history = _doubling(partial, tail_tol, max_horizon, start,
                                        "integrability partial sum")
    if with_history:
        return value, horizon, history
    return value


def tail_mass(k: KernelDescriptor, start, rtol=1e-6, max_extent=None, *, numeric=False) -> float:
    """Sum (or integral) of |k(s, t)| over s, t >= start.

    TC, DC and SS tails have closed forms; other kernels (or ``numeric=True``)
    double boxes ``[start, start + L)^2`` until one doubling changes the value
    by at most ``rtol`` relative (or it is exactly zero).
    """
    if k.discrete:
        start = int(math.ceil(start))
        max_extent = 4096 if max_extent is None else max_extent
        partial = lambda L: _abs_box_sum(k, start, start + int(L) - 1)  # noqa: E731
    else:
        start = float(start)
        max_extent = 4096.0 if max_extent is None else max_extent
        partial = lambda L: _abs_box_integral(k, start, start + float(L))  # noqa: E731
    if not numeric:
        closed = _closed_tail(k, start)
        if closed is not None:
            return closed
    first = 1
    sup = k.support
    if sup is not None:
        if start > sup[1]:
            return 0.0
        first = 1 << max(0, math.ceil(math.log2(max(sup[1] - start + 1, 1.0))))
    value, _, _ = _doubling(partial, 0.0, max_extent, first, "kernel tail", rtol=rtol)
    return value


def _closed_tail(k, start):
    p = k.hyper
    if k.family == "TC":
        b = p["beta"]
        if k.discrete:
            return b ** start * (1 + b) / (1 - b) ** 2
        return 2.0 * math.exp(-b * start) / b ** 2
    if k.family == "DC":
        lam, rho = p["decay"], p["rho"]
        if k.discrete:
            r = abs(rho) * math.sqrt(lam)
            return lam ** start * (1 + r) / ((1 - lam) * (1 - r))
        alpha, gamma = -math.log(lam), -math.log(rho)
        return 2.0 * math.exp(-alpha * start) / (alpha * (alpha / 2 + gamma))
    if k.family == "SS" and not k.discrete:
        b = p["beta"]
        return 7.0 * math.exp(-3.0 * b * start) / (54.0 * b ** 2)
    return None
