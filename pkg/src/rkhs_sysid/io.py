"""CSV / JSON readers and writers for kernels, elements, signals, datasets and estimates.

Floats are written in Python's shortest round-trip form (``repr``), so
files are byte-stable and lossless.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .convolution import Signal
from .errors import InvalidArgument
from .kernels import KernelDescriptor, TimeDomain, make_kernel, tabulated
from .rkhs import RkhsElement


def fmt(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2 ** 53:
        return str(int(x))
    return repr(x)


def _write_rows(path, header, rows, preamble=()):
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def _read_rows(path, header):
    text = Path(path).read_text()
    lines = text.splitlines()
    preamble = [ln[1:].strip() for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    if not body:
        raise InvalidArgument(f"{path}: empty CSV")
    reader = csv.reader(body)
    got = [h.strip() for h in next(reader)]
    if got != list(header):
        raise InvalidArgument(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise InvalidArgument(f"{path}:{lineno}: non-numeric value in {row}") from None
        if len(row) != len(header):
            raise InvalidArgument(f"{path}:{lineno}: expected {len(header)} columns")
    return np.array(rows, dtype=float).reshape(-1, len(header)), preamble


# -- kernels ----------------------------------------------------------------------

def kernel_to_json(k: KernelDescriptor) -> str:
    return json.dumps(k.to_dict(), sort_keys=True)


def kernel_from_json(text: str) -> KernelDescriptor:
    return make_kernel(json.loads(text))


def write_tabulated_csv(path, k: KernelDescriptor):
    if k.family != "Tabulated":
        raise InvalidArgument("only Tabulated kernels have a CSV table form")
    g = k.grid
    rows = [(g[i], g[j], k.table[i, j]) for i in range(g.size) for j in range(g.size)]
    _write_rows(path, ("s", "t", "value"), rows)


def read_tabulated_csv(path, domain="discrete") -> KernelDescriptor:
    rows, _ = _read_rows(path, ("s", "t", "value"))
    grid = np.unique(np.concatenate([rows[:, 0], rows[:, 1]]))
    table = np.full((grid.size, grid.size), np.nan)
    i = np.searchsorted(grid, rows[:, 0])
    j = np.searchsorted(grid, rows[:, 1])
    table[i, j] = rows[:, 2]
    # a triangle is enough; mirror the missing half
    table = np.where(np.isnan(table), table.T, table)
    if np.isnan(table).any():
        raise InvalidArgument(f"{path}: table does not cover every (s, t) pair of its grid")
    return tabulated(grid, table, domain)


# -- RKHS elements ------------------------------------------------------------------

def write_element_csv(path, e: RkhsElement):
    _write_rows(path, ("weight", "center"), zip(e.weights, e.centers),
                preamble=[f"kernel {kernel_to_json(e.kernel)}"])


def read_element_csv(path) -> RkhsElement:
    rows, pre = _read_rows(path, ("weight", "center"))
    heads = [p for p in pre if p.startswith("kernel ")]
    if not heads:
        raise InvalidArgument(f"{path}: missing '# kernel {{...}}' header line")
    k = kernel_from_json(heads[0][len("kernel "):])
    return RkhsElement(k, rows[:, 1], rows[:, 0])


# -- signals and datasets ---------------------------------------------------------

def write_signal_csv(path, u: Signal):
    header = ("index", "value") if u.is_discrete else ("knot_time", "value")
    _write_rows(path, header, zip(u.times, u.values))


def read_signal_csv(path) -> Signal:
    first = next(ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#"))
    if first.strip().startswith("index"):
        rows, _ = _read_rows(path, ("index", "value"))
        return Signal(TimeDomain.DISCRETE, rows[:, 0], rows[:, 1])
    rows, _ = _read_rows(path, ("knot_time", "value"))
    return Signal(TimeDomain.CONTINUOUS, rows[:, 0], rows[:, 1])


def write_dataset_csv(path, times, outputs):
    _write_rows(path, ("time", "output"), zip(times, outputs))


def read_dataset_csv(path):
    rows, _ = _read_rows(path, ("time", "output"))
    return rows[:, 0], rows[:, 1]


def write_impulse_csv(path, t, g):
    _write_rows(path, ("t", "g_hat"), zip(np.atleast_1d(t), np.atleast_1d(g)))


def write_true_impulse_csv(path, t, g):
    _write_rows(path, ("t", "g"), zip(np.atleast_1d(t), np.atleast_1d(g)))


def read_impulse_csv(path, column="g_hat"):
    rows, _ = _read_rows(path, ("t", column))
    return rows[:, 0], rows[:, 1]


# -- estimates ------------------------------------------------------------------

def estimate_to_dict(est) -> dict:
    return {
        "kernel": est.kernel.to_dict(),
        "lambda": est.lam,
        "sample_times": [float(t) for t in est.sample_times],
        "coefficients": [float(c) for c in est.coefficients],
        "jitter": est.jitter,
        "condition_number": est.condition_number,
        "residual": est.residual,
        "tail_tol": est.tail_tol,
    }


def dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")
