"""Command-line entry point: ``rkhs-sysid {simulate,identify,verify,kernels}``.

Exit status: 0 success, 1 check failure, 2 usage/config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io as rio
from .checks import CHECK_NAMES, reports_csv, run_checks
from .config import ConfigError, ExperimentConfig, expand_range, load_config, parse_lambda
from .errors import DivergenceSuspected, InvalidArgument, NumericalFailure
from .estimator import predict_impulse, select_lambda
from .kernels import FAMILIES, FAMILY_PARAMS, TimeDomain, make_kernel
from .simulation import (Dataset, ExponentialSystem, ImpulseTableSystem, NoiseSpec,
                         TransferFunctionSystem, make_dataset, make_input, one_pole)

log = logging.getLogger("rkhs_sysid")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

HYPER_FLAGS = ("beta", "decay", "rho", "value")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# -- building objects from config ----------------------------------------------------

def _apply_overrides(cfg: ExperimentConfig, args):
    if getattr(args, "out", None):
        cfg.set("output_dir", None, args.out)
    if getattr(args, "seed", None) is not None:
        cfg.set("input", "seed", args.seed)
        cfg.set("noise", "seed", args.seed + 1)
        cfg.set("verify", "seed", args.seed)
    if getattr(args, "lambda_", None) is not None:
        cfg.set("estimator", "lambda", args.lambda_)
        cfg.values.get("estimator", {}).pop("lambda_grid", None)
    if getattr(args, "kernel", None):
        # a new family invalidates hyperparameters of the old one
        old = cfg.values.get("kernel") or {}
        cfg.values["kernel"] = {"family": args.kernel, "domain": old.get("domain", "discrete")}
        if args.kernel == "Constant":
            cfg.set("kernel", "value", 1.0)
    for name in HYPER_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            cfg.set("kernel", name, value)
    if getattr(args, "domain", None):
        cfg.set("kernel", "domain", args.domain)


def _kernel(cfg):
    if not cfg.has("kernel"):
        raise cfg.error("a 'kernel' block (or --kernel flag) is required")
    spec = dict(cfg.block("kernel"))
    if "table_csv" in spec:
        path = spec.pop("table_csv")
        return rio.read_tabulated_csv(path, spec.get("domain", "discrete"))
    try:
        return make_kernel(spec)
    except InvalidArgument as exc:
        raise cfg.error(f"kernel: {exc}", "kernel") from None


def _system(cfg):
    if not cfg.has("system"):
        raise cfg.error("simulate needs a 'system' block")
    s = cfg.block("system")
    kind = s.get("type", "one_pole")
    try:
        if kind == "one_pole":
            return one_pole(float(s["a"]))
        if kind == "transfer_function":
            return TransferFunctionSystem(tuple(s["num"]), tuple(s["den"]))
        if kind == "table":
            return ImpulseTableSystem(tuple(s["table"]), float(s["rate"]), float(s["constant"]))
        if kind == "exponential":
            return ExponentialSystem(tuple(s["gains"]), tuple(s["rates"]))
    except KeyError as exc:
        raise cfg.error(f"system type {kind!r} needs key {exc}", "system") from None
    except InvalidArgument as exc:
        raise cfg.error(f"system: {exc}", "system") from None
    raise cfg.error(f"unknown system type {kind!r}", "system", "type")


def _input(cfg, domain):
    p = dict(cfg.block("input"))
    kind = p.pop("kind")
    p.setdefault("domain", domain.value)
    try:
        return make_input(kind, **p)
    except (InvalidArgument, TypeError) as exc:
        raise cfg.error(f"input: {exc}", "input") from None


def _times(cfg, u, domain):
    if cfg.has("times"):
        try:
            return expand_range(cfg.block("times"))
        except (InvalidArgument, ValueError, TypeError) as exc:
            raise cfg.error(f"times: {exc}", "times") from None
    if domain is TimeDomain.DISCRETE:
        return u.times.copy()
    return u.times[:-1].copy() if u.times.size > 1 else u.times.copy()


def _impulse_grid(cfg, domain, default_len):
    est = cfg.block("estimator")
    if "impulse_grid" in est:
        return expand_range(est["impulse_grid"], "impulse_grid")
    if domain is TimeDomain.DISCRETE:
        return np.arange(default_len, dtype=float)
    return np.linspace(0.0, float(default_len), 101)


def _manifest(cfg, command, extra=None):
    m = {
        "command": command,
        "version": _version(),
        "config_sha256": cfg.sha256(),
        "config": cfg.canonical(),
        "seeds": {
            "input": cfg.block("input").get("seed"),
            "noise": cfg.block("noise").get("seed"),
            "verify": cfg.block("verify").get("seed"),
        },
        "tolerances": {
            "tail_tol": cfg.block("estimator").get("tail_tol"),
            "verify": {k: v for k, v in cfg.block("verify").items()
                       if k in ("tail_tol", "integrability_tol")},
        },
    }
    if extra:
        m.update(extra)
    return m


# -- commands ----------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig) -> int:
    sys_ = _system(cfg)
    domain = sys_.domain
    u = _input(cfg, domain)
    times = _times(cfg, u, domain)
    noise_block = cfg.block("noise")
    noise = NoiseSpec(float(noise_block.get("sigma", 0.0)), int(noise_block.get("seed", 0)))
    data = make_dataset(sys_, u, times, noise)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    rio.write_signal_csv(out / "input.csv", u)
    rio.write_dataset_csv(out / "dataset.csv", data.sample_times, data.outputs)
    grid = _impulse_grid(cfg, domain, min(len(times), 100))
    rio.write_true_impulse_csv(out / "true_impulse.csv", grid, sys_.true_response(grid))
    rio.dump_json(out / "manifest_simulate.json", _manifest(cfg, "simulate"))
    log.info("wrote %d samples to %s", len(data), out)
    return EXIT_OK


def _data_paths(cfg):
    d = cfg.block("data") if cfg.has("data") else {}
    out = cfg.output_dir
    return Path(d.get("dataset", out / "dataset.csv")), Path(d.get("input", out / "input.csv"))


def cmd_identify(cfg: ExperimentConfig) -> int:
    k = _kernel(cfg)
    ds_path, in_path = _data_paths(cfg)
    try:
        u = rio.read_signal_csv(in_path)
        times, y = rio.read_dataset_csv(ds_path)
    except OSError as exc:
        raise ConfigError(f"cannot read data file: {exc}") from None
    if u.domain is not k.domain:
        raise ConfigError(f"input file is {u.domain.value}-time but kernel is {k.domain.value}-time")
    data = Dataset(u, times, y)
    est_block = cfg.block("estimator")
    if "lambda_grid" in est_block:
        grid = parse_lambda(est_block["lambda_grid"])
    elif "lambda" in est_block:
        grid = parse_lambda(est_block["lambda"])
    else:
        raise cfg.error("identify needs estimator.lambda, estimator.lambda_grid or --lambda",
                        "estimator")
    tail_tol = float(est_block.get("tail_tol", 1e-8))
    est, lam, scores = select_lambda(k, data, grid, int(est_block.get("holdout_every", 5)),
                                     tail_tol)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    rio.dump_json(out / "estimate.json", rio.estimate_to_dict(est))
    grid_t = _impulse_grid(cfg, k.domain, min(len(data), 100))
    rio.write_impulse_csv(out / "impulse.csv", grid_t, predict_impulse(est, grid_t))
    fitted = est.O @ est.coefficients
    diagnostics = {
        "lambda": lam,
        "lambda_scores": {repr(key): v for key, v in scores.items()},
        "solve_residual": est.residual,
        "condition_number": est.condition_number,
        "jitter": est.jitter,
        "output_rmse": float(np.sqrt(np.mean((fitted - data.outputs) ** 2))),
        "min_eigenvalue_O": float(np.linalg.eigvalsh(est.O)[0]),
        "n_samples": len(data),
    }
    rio.dump_json(out / "diagnostics.json", diagnostics)
    rio.dump_json(out / "manifest_identify.json", _manifest(cfg, "identify", {
        "inputs": {"dataset": str(ds_path), "input": str(in_path)}}))
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig) -> int:
    k = _kernel(cfg)
    v = cfg.block("verify")
    names = v.get("checks")
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    opts = {key: v[key] for key in ("trials", "tail_tol", "integrability_tol", "max_horizon",
                                    "horizon", "level") if key in v}
    for key in ("interval", "box2"):
        if key in v:
            opts[key] = tuple(float(x) for x in v[key])
    reports = run_checks(k, names, seed=int(v.get("seed", 0)), **opts)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "checks.csv").write_text(reports_csv(reports))
    (out / "checks_report.txt").write_text("\n".join(r.summary() for r in reports) + "\n")
    rio.dump_json(out / "manifest_verify.json", _manifest(cfg, "verify"))
    for r in reports:
        print(f"{'PASS' if r.verdict else 'FAIL'} {r.check_name} margin={r.worst_margin!r}")
    return EXIT_OK if all(r.verdict for r in reports) else EXIT_CHECK_FAILED


def cmd_kernels(_cfg=None) -> int:
    notes = {
        "TC": "beta in (0,1) discrete, beta > 0 continuous; k = beta^max(s,t) / exp(-beta max(s,t))",
        "DC": "decay in (0,1), rho in [-1,1] (continuous: (0,1]); k = decay^((s+t)/2) rho^|s-t|",
        "SS": "beta > 0; k = exp(-beta(s+t+max))/2 - exp(-3 beta max)/6",
        "Constant": "value >= 0; k = value (not integrable, for divergence checks)",
        "Tabulated": "grid + symmetric table (or table_csv with header s,t,value)",
    }
    for fam in FAMILIES:
        params = ", ".join(FAMILY_PARAMS[fam]) or "-"
        print(f"{fam:10s} params: {params:12s} {notes[fam]}")
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="rkhs-sysid",
                                     description="Kernel-based impulse response identification.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "simulate a system and write a dataset"),
                           ("identify", "fit an impulse response to a dataset"),
                           ("verify", "run numerical checks on a kernel"),
                           ("kernels", "list kernel families")):
        p = sub.add_parser(name, help=helptext)
        if name == "kernels":
            continue
        p.add_argument("--config", type=Path, help="YAML experiment config")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="base seed (input = seed, noise = seed + 1)")
        p.add_argument("--lambda", dest="lambda_", help="float, comma list or logspace:lo:hi:num")
        p.add_argument("--kernel", choices=FAMILIES)
        p.add_argument("--domain", choices=[d.value for d in TimeDomain])
        for hp in HYPER_FLAGS:
            p.add_argument(f"--{hp}", type=float)
        if name == "verify":
            p.add_argument("--checks", help=f"comma list from {','.join(CHECK_NAMES)}")
        if name == "identify":
            p.add_argument("--dataset", type=Path)
            p.add_argument("--input", type=Path)
    return parser


COMMANDS = {"simulate": cmd_simulate, "identify": cmd_identify, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "kernels":
        return cmd_kernels()
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        _apply_overrides(cfg, args)
        if args.command == "verify" and args.checks:
            cfg.set("verify", "checks", args.checks)
        if args.command == "identify":
            if args.dataset:
                cfg.set("data", "dataset", str(args.dataset))
            if args.input:
                cfg.set("data", "input", str(args.input))
        return COMMANDS[args.command](cfg)
    except (ConfigError, InvalidArgument) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, DivergenceSuspected) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
