"""Numerical checks of integrability, stability and continuity statements.

Each check returns a :class:`CheckReport` listing ``(label, observed, bound)``
comparisons; the verdict is pass iff every observed value is at most its
bound. Bounds come from the inequality being checked, never from a fudge.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .convolution import (Signal, apply_L_with_error, operator_norm, partial_sum_element,
                          representer_phi)
from .errors import DivergenceSuspected, InvalidArgument
from .kernels import KernelDescriptor, integrability_measure, tabulated_box_integral, tail_mass
from .quadrature import double_integral
from .rkhs import RkhsElement, inner, norm, section_integral


@dataclass
class CheckReport:
    check_name: str
    parameters: dict
    comparisons: list = field(default_factory=list)
    observed: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    note: str = ""

    def compare(self, label, observed, bound):
        self.comparisons.append((label, float(observed), float(bound)))

    @property
    def verdict(self) -> bool:
        return all(obs <= bnd for _, obs, bnd in self.comparisons)

    @property
    def worst_margin(self) -> float:
        if not self.comparisons:
            return math.inf
        return min(bnd - obs for _, obs, bnd in self.comparisons)

    @property
    def parameter_hash(self) -> str:
        blob = json.dumps(self.parameters, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.verdict else 'FAIL'}] {self.check_name} "
                 f"({self.parameter_hash})"]
        if self.note:
            lines.append(f"  note: {self.note}")
        for label, obs, bnd in self.comparisons:
            mark = "ok " if obs <= bnd else "BAD"
            lines.append(f"  {mark} {label}: observed {obs!r} <= bound {bnd!r}")
        return "\n".join(lines)


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "parameter_hash", "verdict", "worst_margin"])
    for r in sorted(reports, key=lambda r: (r.check_name, r.parameter_hash)):
        w.writerow([r.check_name, r.parameter_hash, "pass" if r.verdict else "fail",
                    repr(r.worst_margin)])
    return buf.getvalue()


def _kparams(k):
    d = k.to_dict()
    d.pop("table", None)
    d.pop("grid", None)
    return d


# -- integrability and stability -------------------------------------------------

def check_integrability(k: KernelDescriptor, tail_tol=1e-12, max_horizon=None) -> CheckReport:
    rep = CheckReport("integrability", {"kernel": _kparams(k), "tail_tol": tail_tol,
                                        "max_horizon": max_horizon},
                      tolerances={"tail_tol": tail_tol})
    try:
        value, horizon, history = integrability_measure(k, tail_tol, max_horizon,
                                                        with_history=True)
        rep.observed.update(measure=value, horizon=horizon)
    except DivergenceSuspected as exc:
        history = exc.history
        rep.note = "divergence suspected: partial sums kept growing up to the horizon cap"
    rep.observed["partial_sums"] = history
    last = abs(history[-1][1] - history[-2][1]) if len(history) > 1 else math.inf
    rep.compare("last dyadic increment", last, tail_tol)
    return rep


def worst_case_probe(k: KernelDescriptor, horizon) -> Signal:
    """``u_s = sign(sum_{t <= horizon} k(t, s))`` for ``s = 0..horizon``."""
    pts = np.arange(horizon + 1, dtype=float)
    col = k.matrix(pts, pts).sum(axis=0)
    return Signal.discrete(np.where(col >= 0, 1.0, -1.0))


def check_stability_probe(k: KernelDescriptor, inputs, horizon=256, tol=1e-10) -> CheckReport:
    """Partial sums of ``sum_t |sum_s u_s k(t, s)|`` for a few probe inputs.

    A pass is evidence only: stability quantifies over every bounded input.
    """
    if not k.discrete:
        raise InvalidArgument("the stability probe is implemented for discrete-time kernels")
    rep = CheckReport("stability_probe", {"kernel": _kparams(k), "horizon": horizon,
                                          "tol": tol, "n_inputs": len(inputs)},
                      tolerances={"tol": tol},
                      note="evidence only: finitely many probe inputs cannot establish stability")
    t = np.arange(horizon + 1, dtype=float)
    try:
        measure = integrability_measure(k)
    except DivergenceSuspected:
        measure = math.inf
    rep.observed["integrability_measure"] = measure
    for i, u in enumerate(inputs):
        s = u.times[(u.times >= 0)]
        uv = u(s)
        if s.size == 0:
            partial = np.zeros(t.size)
            dominating = 0.0
        else:
            km = k.matrix(t, s)
            partial = np.cumsum(np.abs(km @ uv))
            dominating = float(np.sum(np.abs(km) @ np.abs(uv)))
        half = partial[horizon // 2]
        rep.observed[f"input{i}_partial_sum"] = float(partial[-1])
        rep.compare(f"input {i}: increment over last half-horizon", partial[-1] - half,
                    tol * max(1.0, float(partial[-1])))
        rep.compare(f"input {i}: partial sum vs sum |u||k|", partial[-1], dominating * (1 + 1e-12))
        rep.compare(f"input {i}: partial sum vs sup|u| * integrability measure", partial[-1],
                    u.sup_norm * measure * (1 + 1e-12))
    return rep


# -- dyadic section integrals ----------------------------------------------------

def dyadic_sequence(k, lo, hi, n_max):
    """``(norm_sq[n], d[n])`` for ``n = 0..n_max`` with ``d[n] = |f_{n+1} - f_n|``."""
    norms, gaps = [], []
    prev = section_integral(k, lo, hi, 0)
    for n in range(n_max + 1):
        nxt = section_integral(k, lo, hi, n + 1)
        norms.append(inner(prev, prev))
        gaps.append(norm(nxt - prev))
        prev = nxt
    return norms, gaps


def _box_integrals(k, box1, box2):
    # nearest-grid tables are piecewise constant: sum cells exactly instead of adaptive quadrature
    if k.family == "Tabulated":
        v = tabulated_box_integral(k, box1, box2)
        return v, v
    return double_integral(k.__call__, box1, box2)


def check_dyadic_cauchy(k: KernelDescriptor, lo, hi, n_max=14, gap_tol=1e-4,
                        identity_tol=1e-4) -> CheckReport:
    if k.discrete:
        raise InvalidArgument("dyadic refinement needs a continuous-time kernel")
    if not lo < hi:
        raise InvalidArgument("need lo < hi")
    norms, gaps = dyadic_sequence(k, lo, hi, n_max)
    quad, _ = _box_integrals(k, (lo, hi), (lo, hi))
    rep = CheckReport("dyadic_cauchy", {"kernel": _kparams(k), "lo": lo, "hi": hi,
                                        "n_max": n_max},
                      tolerances={"gap_tol": gap_tol, "identity_tol": identity_tol},
                      note="observes Cauchy decay only; does not estimate a continuity modulus")
    if k.family == "Tabulated":
        rep.note += "; kernel continuity is assumed, not checked, for tabulated kernels"
    rep.observed.update(norm_sq=norms, refinement_gaps=gaps, quadrature=quad)
    rep.compare(f"refinement gap d_{n_max}", gaps[-1], gap_tol)
    rep.compare(f"|norm(f_{n_max})^2 - double integral|", abs(norms[-1] - quad), identity_tol)
    return rep


def check_fubini(k: KernelDescriptor, box1, box2, level=14, tol=1e-4,
                 order_tol=1e-10) -> CheckReport:
    if k.discrete:
        raise InvalidArgument("the Fubini check needs a continuous-time kernel")
    f1 = section_integral(k, *box1, level)
    f2 = section_integral(k, *box2, level)
    ip = inner(f1, f2)
    q_st, q_ts = _box_integrals(k, box1, box2)
    rep = CheckReport("fubini", {"kernel": _kparams(k), "box1": list(box1),
                                 "box2": list(box2), "level": level},
                      tolerances={"tol": tol, "order_tol": order_tol})
    rep.observed.update(inner=ip, swapped_inner=inner(f2, f1), iterated_st=q_st,
                        iterated_ts=q_ts)
    rep.compare("|<f1, f2> - iterated (s outer)|", abs(ip - q_st), tol)
    rep.compare("|<f1, f2> - iterated (t outer)|", abs(ip - q_ts), tol)
    rep.compare("|iterated orders differ|", abs(q_st - q_ts), order_tol)
    return rep


# -- partial sums and continuity ----------------------------------------------------

def check_partial_sum_cauchy(k: KernelDescriptor, u: Signal, tau, ladder=(4, 8, 16, 32),
                             ratio=2) -> CheckReport:
    """``|f_n - f_m| <= |u|_inf * sqrt(sum_{s,t >= m+1} |k|)`` on an ``(m, ratio*m)`` ladder."""
    if not k.discrete:
        raise InvalidArgument("partial-sum Cauchy check needs a discrete-time kernel")
    rep = CheckReport("partial_sum_cauchy", {"kernel": _kparams(k), "tau": tau,
                                             "ladder": list(ladder), "ratio": ratio,
                                             "sup_norm": u.sup_norm},
                      tolerances={"relative": 1e-8})
    sup = u.sup_norm
    for m in ladder:
        n = ratio * m
        d = norm(partial_sum_element(k, u, tau, n) - partial_sum_element(k, u, tau, m))
        bound = sup * math.sqrt(tail_mass(k, m + 1))
        rep.observed[f"d_{m}_{n}"] = d
        rep.compare(f"|f_{n} - f_{m}|", d, bound * (1 + 1e-8))
    return rep


def random_element(k: KernelDescriptor, rng, span, max_atoms=10) -> RkhsElement:
    n = int(rng.integers(1, max_atoms + 1))
    if k.discrete:
        centers = rng.integers(0, int(span) + 1, n).astype(float)
    else:
        centers = rng.uniform(0.0, span, n)
    return RkhsElement(k, centers, rng.normal(size=n))


def _probe_span(k, u, tau, phi):
    if u.times.size:
        reach = max(0.0, tau - float(u.times[0]))
    else:
        reach = 0.0
    span = min(reach, phi.truncation_horizon) if phi.truncation_horizon else reach
    return max(span, 1.0) + (5 if k.discrete else 1.0)


def check_continuity_certificate(k: KernelDescriptor, u: Signal, tau, trial_count=1000,
                                 seed=0, tail_tol=1e-8) -> CheckReport:
    """Sampled Cauchy-Schwarz certificate for the convolution functional.

    For random finite-atom ``g``:
    ``|L(g)| <= (|phi| + tail) |g| (1 + 1e-10)`` and
    ``|L(g) - <phi, g>| <= tail_tol |g| + 1e-10`` (discrete time). In
    continuous time the duality tolerance also carries the representer's
    Riemann-sum estimate and the quadrature error of ``L(g)``.
    """
    phi = representer_phi(k, u, tau, tail_tol)
    opn = operator_norm(phi)
    rng = np.random.default_rng(seed)
    span = _probe_span(k, u, tau, phi)
    worst_ratio = 0.0
    worst_dual = -math.inf
    for _ in range(trial_count):
        g = random_element(k, rng, span)
        gn = norm(g)
        lg, qerr = apply_L_with_error(u, tau, g)
        ip = inner(phi.element, g)
        cap = (opn + phi.error_bound) * gn * (1 + 1e-10)
        if cap > 0:
            worst_ratio = max(worst_ratio, abs(lg) / cap)
        elif lg != 0:
            worst_ratio = math.inf
        if k.discrete:
            slack = tail_tol * gn + 1e-10
        else:
            slack = phi.error_bound * gn + qerr + 1e-10
        worst_dual = max(worst_dual, abs(lg - ip) - slack)
    rep = CheckReport("continuity_certificate",
                      {"kernel": _kparams(k), "tau": tau, "trials": trial_count, "seed": seed,
                       "tail_tol": tail_tol, "sup_norm": u.sup_norm},
                      tolerances={"tail_tol": tail_tol, "relative": 1e-10, "absolute": 1e-10})
    rep.observed.update(operator_norm=opn, tail_bound=phi.tail_bound,
                        discretization_error=phi.discretization_error)
    rep.compare("max |L(g)| / ((|phi| + tail) |g|)", worst_ratio, 1.0)
    rep.compare("max duality excess over tolerance", worst_dual, 0.0)
    return rep


# -- suites ----------------------------------------------------------------------

CHECK_NAMES = ("integrability", "stability_probe", "partial_sum_cauchy",
               "continuity_certificate", "dyadic_cauchy", "fubini")

DISCRETE_SUITE = ("integrability", "stability_probe", "partial_sum_cauchy",
                  "continuity_certificate")
CONTINUOUS_SUITE = ("integrability", "dyadic_cauchy", "fubini", "continuity_certificate")


def run_checks(k: KernelDescriptor, names=None, *, seed=0, tail_tol=1e-8, trials=1000,
               integrability_tol=1e-12, max_horizon=None, horizon=256, level=14,
               interval=(0.0, 1.0), box2=(1.5, 2.5)):
    """Run the named checks with default probes; one report per name, in order."""
    if names is None:
        names = DISCRETE_SUITE if k.discrete else CONTINUOUS_SUITE
    rng = np.random.default_rng(seed)
    reports = []
    for name in names:
        if name not in CHECK_NAMES:
            raise InvalidArgument(f"unknown check {name!r}; expected one of {CHECK_NAMES}")
        try:
            reports.append(_run_one(k, name, rng, seed=seed, tail_tol=tail_tol, trials=trials,
                                    integrability_tol=integrability_tol,
                                    max_horizon=max_horizon, horizon=horizon, level=level,
                                    interval=interval, box2=box2))
        except DivergenceSuspected as exc:
            rep = CheckReport(name, {"kernel": _kparams(k), "seed": seed},
                              note=f"refused, kernel tail does not converge: {exc}")
            rep.compare("kernel tail converged (0 = yes)", 1.0, 0.0)
            reports.append(rep)
    return reports


def _probe_horizon(k, horizon, max_horizon):
    """Grow ``horizon`` until the kernel mass beyond its midpoint is negligible."""
    cap = max(horizon, max_horizon or 4096)
    while horizon < cap and tail_mass(k, horizon // 2) > 1e-12:
        horizon = min(2 * horizon, cap)
    return horizon


def _run_one(k, name, rng, *, seed, tail_tol, trials, integrability_tol, max_horizon,
             horizon, level, interval, box2):
    if name == "integrability":
        return check_integrability(k, integrability_tol, max_horizon)
    if name == "stability_probe":
        horizon = _probe_horizon(k, horizon, max_horizon)
        probes = [Signal.discrete(np.ones(horizon + 1)), worst_case_probe(k, horizon),
                  Signal.zero()]
        return check_stability_probe(k, probes, horizon)
    if name == "partial_sum_cauchy":
        tau = 64
        u = Signal.discrete(rng.choice([-1.0, 1.0], tau + 1))
        return check_partial_sum_cauchy(k, u, tau)
    if name == "continuity_certificate":
        if k.discrete:
            u = Signal.discrete(rng.uniform(-1, 1, 40), start=-10)
            tau = 20
        else:
            u = Signal.piecewise([0.0, 0.5, 1.0, 2.0], [1.0, -0.5, 0.25, 0.0])
            tau = 2.5
        return check_continuity_certificate(k, u, tau, trials, seed, tail_tol)
    if name == "dyadic_cauchy":
        return check_dyadic_cauchy(k, *interval, n_max=level)
    return check_fubini(k, interval, box2, level)
