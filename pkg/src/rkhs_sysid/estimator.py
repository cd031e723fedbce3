"""Regularized impulse-response estimation in the RKHS of a stable kernel.

Minimizes ``sum_i (L_{t_i}(g) - y_i)^2 + lam * ||g||^2``. The minimizer is
``g* = sum_i c_i phi_{t_i}`` with ``c = (O + lam I)^{-1} y`` and
``O[i, j] = <phi_{t_i}, phi_{t_j}>``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .convolution import Signal, apply_L, representer_phi
from .errors import InvalidArgument, NumericalFailure
from .kernels import PSD_TOL, KernelDescriptor
from .rkhs import RkhsElement, element_gram, evaluate, inner
from .simulation import Dataset

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OutputKernelMatrix:
    values: np.ndarray
    error_bounds: np.ndarray
    representers: tuple

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.values)[0]) if self.values.size else 0.0

    def is_psd(self, tol=PSD_TOL):
        return self.min_eigenvalue() >= -tol * max(float(np.trace(self.values)), 0.0)


def output_kernel_matrix(k: KernelDescriptor, u: Signal, times, tail_tol=1e-8,
                         **phi_kwargs) -> OutputKernelMatrix:
    """Gram matrix of the representers ``phi_{t_i}``.

    ``error_bounds[i, j]`` bounds ``|O_ij - O_ij(exact)|`` from the
    representers' error bounds: ``e_i |phi_j| + e_j |phi_i| + e_i e_j``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    reps = tuple(representer_phi(k, u, t, tail_tol, **phi_kwargs) for t in times)
    values = element_gram([r.element for r in reps])
    errs = np.array([r.error_bound for r in reps])
    norms = np.sqrt(np.clip(np.diag(values), 0.0, None))
    bounds = np.outer(errs, norms) + np.outer(norms, errs) + np.outer(errs, errs)
    return OutputKernelMatrix(values, bounds, reps)


@dataclass(frozen=True, eq=False)
class Estimate:
    kernel: KernelDescriptor
    input: Signal
    sample_times: np.ndarray
    coefficients: np.ndarray
    lam: float
    representers: tuple
    O: np.ndarray
    jitter: float = 0.0
    condition_number: float = float("nan")
    residual: float = 0.0
    tail_tol: float = 1e-8

    @property
    def element(self) -> RkhsElement:
        """``g* = sum_i c_i phi_{t_i}`` as a single finite-atom element."""
        k = self.kernel
        parts = [(c * r.element) for c, r in zip(self.coefficients, self.representers)]
        if not parts:
            return RkhsElement.zero(k)
        return RkhsElement(k, np.concatenate([p.centers for p in parts]),
                           np.concatenate([p.weights for p in parts]))


def _solve_spd(a, y):
    """Cholesky solve with one jittered retry; returns ``(x, jitter)``."""
    try:
        return linalg.cho_solve(linalg.cho_factor(a, lower=True), y), 0.0
    except linalg.LinAlgError:
        pass
    n = a.shape[0]
    jitter = 1e-12 * max(float(np.trace(a)), 1e-300) / n
    log.warning("Cholesky failed; retrying with jitter %.3g", jitter)
    try:
        return linalg.cho_solve(linalg.cho_factor(a + jitter * np.eye(n), lower=True), y), jitter
    except linalg.LinAlgError as exc:
        raise NumericalFailure(f"O + lam*I is not positive definite even with jitter {jitter:.3g}") from exc


def fit(k: KernelDescriptor, data: Dataset, lam: float, tail_tol=1e-8, **phi_kwargs) -> Estimate:
    """Representer-form solution of the regularized identification problem."""
    if not lam > 0:
        raise InvalidArgument("lambda must be > 0 (uniqueness needs strong convexity)")
    okm = output_kernel_matrix(k, data.input, data.sample_times, tail_tol, **phi_kwargs)
    o = okm.values
    y = data.outputs
    a = o + lam * np.eye(y.size)
    c, jitter = _solve_spd(a, y)
    residual = float(np.max(np.abs(a @ c - y)))
    if not np.all(np.isfinite(c)) or residual > 1e-8 * (1 + np.max(np.abs(y))):
        raise NumericalFailure(f"solve residual {residual:.3g} exceeds bound")
    ev = np.linalg.eigvalsh(a)
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else float("inf")
    return Estimate(k, data.input, data.sample_times, c, float(lam), okm.representers,
                    o, jitter, cond, residual, tail_tol)


def restore_estimate(k: KernelDescriptor, u: Signal, sample_times, coefficients, lam,
                     tail_tol=1e-8, **phi_kwargs) -> Estimate:
    """Rebuild an :class:`Estimate` from stored coefficients (representers are recomputed)."""
    okm = output_kernel_matrix(k, u, sample_times, tail_tol, **phi_kwargs)
    return Estimate(k, u, np.asarray(sample_times, dtype=float),
                    np.asarray(coefficients, dtype=float), float(lam), okm.representers,
                    okm.values, tail_tol=tail_tol)


def predict_impulse(est: Estimate, t):
    """``g*_t = sum_i c_i phi_{t_i}(t)``; accepts a scalar or an array of times."""
    est.kernel.domain.check(t)
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(tt.size)
    for c, r in zip(est.coefficients, est.representers):
        if c != 0.0 and len(r.element):
            out += c * evaluate(r.element, tt)
    return float(out[0]) if scalar else out


def predict_output(est: Estimate, tau) -> float:
    """Output of the estimated system at ``tau`` under the training input."""
    return apply_L(est.input, tau, est.element)


def objective(k: KernelDescriptor, data: Dataset, lam: float, g: RkhsElement) -> float:
    """``sum_i (L_{t_i}(g) - y_i)^2 + lam * ||g||^2``, evaluated exactly on ``g``'s atoms."""
    if g.kernel != k:
        raise InvalidArgument("g does not belong to the RKHS of k")
    resid = np.array([apply_L(data.input, t, g) for t in data.sample_times]) - data.outputs
    return float(resid @ resid) + lam * inner(g, g)


def select_lambda(k: KernelDescriptor, data: Dataset, grid, holdout_every=5, tail_tol=1e-8,
                  **phi_kwargs):
    """Pick ``lam`` from ``grid`` by hold-out output MSE, then refit on all data.

    Every ``holdout_every``-th measurement is held out. Returns
    ``(estimate, lam, scores)``; with a single grid entry no hold-out is run.
    """
    grid = [float(x) for x in np.atleast_1d(grid)]
    if not grid:
        raise InvalidArgument("lambda grid is empty")
    if len(grid) == 1:
        return fit(k, data, grid[0], tail_tol, **phi_kwargs), grid[0], {}
    idx = np.arange(len(data))
    test = idx[holdout_every - 1::holdout_every]
    train = np.setdiff1d(idx, test)
    if test.size == 0 or train.size == 0:
        raise InvalidArgument("dataset too small for hold-out selection")
    train_data = data.subset(train)
    # representers depend only on the times, so build the training O once
    okm = output_kernel_matrix(k, data.input, data.sample_times, tail_tol, **phi_kwargs)
    o_full = okm.values
    o_tt = o_full[np.ix_(train, train)]
    o_vt = o_full[np.ix_(test, train)]
    scores = {}
    for lam in grid:
        if not lam > 0:
            raise InvalidArgument("lambda grid entries must be > 0")
        c, _ = _solve_spd(o_tt + lam * np.eye(train.size), train_data.outputs)
        pred = o_vt @ c
        scores[lam] = float(np.mean((pred - data.outputs[test]) ** 2))
    best = min(grid, key=lambda lam: (scores[lam], lam))
    return fit(k, data, best, tail_tol, **phi_kwargs), best, scores
