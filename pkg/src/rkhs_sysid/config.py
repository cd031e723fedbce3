"""Experiment configuration: a YAML file of named blocks.

Unknown keys are rejected with the line they appear on. Precedence of
values is command-line flag > config file > built-in default.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidArgument

BLOCKS = {
    "kernel": {"family", "domain", "beta", "decay", "rho", "value", "grid", "table",
               "table_csv"},
    "input": {"kind", "length", "amplitude", "seed", "domain", "dt", "frequency", "phase",
              "hold"},
    "system": {"type", "a", "num", "den", "table", "rate", "constant", "gains", "rates"},
    "times": None,  # a list, or a mapping with start / stop / step
    "noise": {"sigma", "seed"},
    "estimator": {"lambda", "lambda_grid", "holdout_every", "impulse_grid", "tail_tol"},
    "verify": {"checks", "seed", "trials", "tail_tol", "integrability_tol", "max_horizon",
               "horizon", "level", "interval", "box2"},
    "data": {"dataset", "input"},
    "output_dir": None,
}
RANGE_KEYS = {"start", "stop", "step"}

DEFAULTS = {
    "input": {"kind": "prbs", "length": 200, "amplitude": 1.0, "seed": 0},
    "noise": {"sigma": 0.0, "seed": 0},
    "estimator": {"tail_tol": 1e-8, "holdout_every": 5},
    "verify": {"seed": 0, "trials": 1000, "tail_tol": 1e-8, "integrability_tol": 1e-12},
    "output_dir": "out",
}


class ConfigError(InvalidArgument):
    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    path: str | None = None

    def block(self, name) -> dict:
        merged = copy.deepcopy(DEFAULTS.get(name, {}))
        got = self.values.get(name)
        if isinstance(got, dict):
            merged.update(got)
        elif got is not None:
            return got
        return merged

    def has(self, name):
        return name in self.values

    def error(self, message, *keys):
        return ConfigError(message, self.path, self.lines.get(tuple(keys)))

    def set(self, block, key, value):
        if key is None:
            self.values[block] = value
        else:
            self.values.setdefault(block, {})[key] = value

    @property
    def output_dir(self):
        return Path(self.block("output_dir"))

    def canonical(self) -> dict:
        return json.loads(json.dumps(self.values, sort_keys=True, default=_jsonable))

    def sha256(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not JSON serializable: {type(x)}")


def _record_lines(node, prefix, lines):
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = (*prefix, key_node.value)
            lines[key] = key_node.start_mark.line + 1
            _record_lines(value_node, key, lines)


def load_config(path) -> ExperimentConfig:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from None
    return parse_config(text, path)


def parse_config(text, path="<config>") -> ExperimentConfig:
    try:
        node = yaml.compose(text)
        values = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ConfigError(f"invalid YAML: {exc}", path, None if line is None else line + 1) from None
    if values is None:
        values, node = {}, None
    if not isinstance(values, dict):
        raise ConfigError("top level must be a mapping of named blocks", path, 1)
    lines = {}
    if node is not None:
        _record_lines(node, (), lines)
    cfg = ExperimentConfig(values, lines, path)
    for name, body in values.items():
        if name not in BLOCKS:
            raise cfg.error(f"unknown block {name!r}; expected one of {sorted(BLOCKS)}", name)
        allowed = BLOCKS[name]
        if name == "times" and isinstance(body, dict):
            allowed = RANGE_KEYS
        if allowed is None:
            continue
        if not isinstance(body, dict):
            raise cfg.error(f"block {name!r} must be a mapping", name)
        for key in body:
            if key not in allowed:
                raise cfg.error(f"unknown key {key!r} in block {name!r}; "
                                f"expected one of {sorted(allowed)}", name, key)
    return cfg


def expand_range(spec, what="times"):
    """A list of times, or ``{start, stop, step}`` with ``stop`` inclusive."""
    if isinstance(spec, dict):
        missing = {"start", "stop"} - set(spec)
        if missing:
            raise InvalidArgument(f"{what} range needs {sorted(missing)}")
        start, stop = float(spec["start"]), float(spec["stop"])
        step = float(spec.get("step", 1))
        if step <= 0:
            raise InvalidArgument(f"{what} step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(max(n, 0))
    arr = np.asarray(spec, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidArgument(f"{what} list is empty")
    return arr


def parse_lambda(value):
    """``0.01``, ``"0.01,0.1,1"``, ``"logspace:-4:0:9"`` or a mapping ``{min, max, num}``."""
    if isinstance(value, dict):
        return list(np.logspace(np.log10(float(value["min"])), np.log10(float(value["max"])),
                                int(value.get("num", 10))))
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    text = str(value).strip()
    try:
        if text.startswith("logspace:"):
            lo, hi, num = text.split(":")[1:]
            return list(np.logspace(float(lo), float(hi), int(num)))
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidArgument(f"cannot parse lambda specification {value!r}") from None
