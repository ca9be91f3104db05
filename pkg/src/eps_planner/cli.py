"""Command-line interface.

Subcommands: train, estimate, choose-eps, sweep-measuring, sweep-samples,
oracle-compare, gen-data. A flat key=value config file (--config) may
supply any flag; explicit command-line flags win. Tables are written as
CSV with a fixed column order plus a JSON run summary holding the
resolved inputs, the seed scheme and library versions, so any emitted row
can be regenerated.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
`EPS_PLANNER_SEED` provides the default base seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import metadata

import numpy as np
import scipy

from . import experiments
from .chooser import plan
from .data import gen_synthetic, write_csv_dataset
from .errors import DataError, EpsPlannerError, NumericalError, UsageError
from .model import NoiseDraw, PrivacyBudget
from .trainer import classification_error_rate, train, utility

SEED_ENV_VAR = "EPS_PLANNER_SEED"


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{text!r} is not a positive number")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} is not a positive integer")
    return value


def eps_list(text: str) -> tuple:
    """Comma list of positive budgets: "0.1,0.25,0.75"."""
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma list of numbers") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError(f"{text!r} must list positive numbers")
    return values


def targets_spec(text: str) -> tuple:
    """Comma list "0.05,0.1,..." or inclusive range "start:stop:step"."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"{text!r} is not start:stop:step")
        try:
            start, stop, step = (float(v) for v in parts)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not start:stop:step") from None
        if step <= 0 or start <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        out = []
        k = 0
        while True:
            v = round(start + k * step, 10)
            if v > stop + 1e-12:
                break
            out.append(v)
            k += 1
        return tuple(out)
    return eps_list(text)


def synthetic_spec(text: str) -> experiments.SyntheticSpec:
    """"n,p,separation" triple for the built-in generator."""
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"{text!r} is not n,p,separation")
    try:
        return experiments.SyntheticSpec(int(parts[0]), int(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main controls exit codes."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


_OPTION_TYPES = {
    "data": str,
    "format": str,
    "label-col": str,
    "synthetic": synthetic_spec,
    "loss": str,
    "bounds": str,
    "reg-lambda": float,
    "delta": positive_float,
    "eps": positive_float,
    "measure-eps": eps_list,
    "targets": targets_spec,
    "repeats": positive_int,
    "seed": int,
    "solver": str,
    "out": str,
    "target-utility": float,
    "samples": targets_spec,
    "n": positive_int,
    "p": positive_int,
    "separation": float,
    "huber-h": positive_float,
    "smooth-t": positive_float,
}


def _load_config(path: str) -> dict:
    """Flat key=value text; keys match flag names without the leading dashes."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _OPTION_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
        try:
            values[key.replace("-", "_")] = _OPTION_TYPES[key](raw)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return values


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV_VAR}={raw!r} is not an integer") from None


def build_parser(config: dict | None = None) -> _Parser:
    config = config or {}
    parser = _Parser(prog="eps-planner", description=__doc__)
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, data=False):
        if data:
            p.add_argument("--data", help="dataset file path")
            p.add_argument("--format", choices=("csv", "sparse_text"), default="csv")
            p.add_argument("--label-col", default="label", help="csv label column name")
            p.add_argument(
                "--synthetic", type=synthetic_spec,
                help="use generated data: n,p,separation",
            )
        p.add_argument("--loss", choices=("logistic", "huber_svm", "quadratic", "smooth_hinge"),
                       default="logistic")
        p.add_argument("--bounds", choices=("paper", "tight"), default="tight")
        p.add_argument("--reg-lambda", type=float, default=0.01)
        p.add_argument("--delta", type=positive_float, default=1e-3)
        p.add_argument("--repeats", type=positive_int, default=10)
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--solver", choices=("exact", "sgd"), default="sgd")
        p.add_argument("--huber-h", type=positive_float, default=0.1)
        p.add_argument("--smooth-t", type=positive_float, default=0.1)
        p.add_argument("--out", help="output path (CSV table; summary gets .summary.json)")

    p_train = sub.add_parser("train", help="train one private model")
    add_common(p_train, data=True)
    p_train.add_argument("--eps", type=positive_float, required="eps" not in config)

    p_est = sub.add_parser("estimate", help="estimated vs actual loss over a target grid")
    add_common(p_est, data=True)
    p_est.add_argument("--measure-eps", type=eps_list, default=experiments.DEFAULT_MEASURING_LOW)
    p_est.add_argument("--targets", type=targets_spec, default=experiments.DEFAULT_TARGETS_LOW)

    p_choose = sub.add_parser("choose-eps", help="pick the budget for an expected utility")
    add_common(p_choose, data=True)
    p_choose.add_argument("--measure-eps", type=eps_list, default=(0.25,))
    p_choose.add_argument("--target-utility", type=float,
                          required="target_utility" not in config)

    p_sweep = sub.add_parser("sweep-measuring", help="average error per measuring point")
    add_common(p_sweep, data=True)
    p_sweep.add_argument("--targets", type=targets_spec, default=experiments.DEFAULT_TARGETS_LOW)

    p_samp = sub.add_parser("sweep-samples", help="estimation error against sample count")
    add_common(p_samp, data=True)
    p_samp.add_argument("--measure-eps", type=eps_list, default=(0.25,))
    p_samp.add_argument("--targets", type=targets_spec, default=experiments.DEFAULT_TARGETS_LOW)
    p_samp.add_argument("--samples", type=targets_spec, default=experiments.DEFAULT_SAMPLE_GRID)

    p_oracle = sub.add_parser("oracle-compare", help="finite-difference check of the solve")
    add_common(p_oracle, data=True)
    p_oracle.add_argument("--measure-eps", type=eps_list, default=(0.25, 1.0))

    p_gen = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    p_gen.add_argument("--n", type=positive_int, required="n" not in config)
    p_gen.add_argument("--p", type=positive_int, required="p" not in config)
    p_gen.add_argument("--separation", type=float, default=2.0)
    p_gen.add_argument("--seed", type=int, default=_default_seed())
    p_gen.add_argument("--out", required="out" not in config)

    # config values become defaults everywhere they apply; CLI flags win
    if config:
        parser.set_defaults(**config)
        for sp in sub.choices.values():
            known = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in config.items() if k in known})
    return parser


def _peek_config(argv) -> dict:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return _load_config(argv[i + 1])
        if tok.startswith("--config="):
            return _load_config(tok.split("=", 1)[1])
    return {}


def _experiment_config(args) -> experiments.ExperimentConfig:
    if getattr(args, "data", None) is None and getattr(args, "synthetic", None) is None:
        synthetic = experiments.SyntheticSpec()
    else:
        synthetic = args.synthetic or experiments.SyntheticSpec()
    return experiments.ExperimentConfig(
        dataset_path=getattr(args, "data", None),
        data_format=args.format,
        label_col=args.label_col,
        synthetic=synthetic,
        loss_kind=args.loss,
        bounds_mode=args.bounds,
        reg_lambda=args.reg_lambda,
        delta=args.delta,
        measure_eps_list=tuple(getattr(args, "measure_eps", (0.25,))),
        target_grid=tuple(getattr(args, "targets", experiments.DEFAULT_TARGETS_LOW)),
        repeats=args.repeats,
        base_seed=args.seed,
        sample_grid=tuple(int(v) for v in getattr(args, "samples", experiments.DEFAULT_SAMPLE_GRID)),
        solver_mode="sgd_repro" if args.solver == "sgd" else "exact",
        huber_h=args.huber_h,
        smooth_t=args.smooth_t,
    )


def _versions() -> dict:
    try:
        own = metadata.version("eps-planner")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {
        "eps_planner": own,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }


def _seed_scheme(cfg: experiments.ExperimentConfig) -> dict:
    return {
        "base_seed": cfg.base_seed,
        "estimate_seeds": [cfg.base_seed + r for r in range(cfg.repeats)],
        "actual_seed_rule": (
            f"base_seed + {experiments.ACTUAL_SEED_OFFSET} + grid_index * repeats + repeat"
        ),
        "subsample_seed": cfg.base_seed + experiments.SUBSAMPLE_SEED_OFFSET,
    }


def _write_outputs(args, command, rows, columns, extra=None):
    if getattr(args, "out", None):
        _write_csv(args.out, rows, columns)
        summary = {
            "command": command,
            "inputs": _jsonable_args(args),
            "seeds": _seed_scheme(_experiment_config(args)),
            "versions": _versions(),
        }
        if extra:
            summary.update(extra)
        with open(args.out + ".summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def _write_csv(path, rows, columns):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _jsonable_args(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "config"):
            continue
        if isinstance(value, experiments.SyntheticSpec):
            value = {"n": value.n, "p": value.p, "separation": value.separation}
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def cmd_train(args) -> int:
    cfg = _experiment_config(args)
    d = experiments.resolve_dataset(cfg)
    spec = experiments.loss_spec_for(cfg, d.p)
    tcfg = experiments.train_config_for(cfg)
    noise = NoiseDraw.generate(d.p, args.seed)
    model = train(d, spec, tcfg, PrivacyBudget(args.eps, args.delta), noise)
    result = {
        "eps": args.eps,
        "delta": args.delta,
        "loss_kind": spec.kind,
        "utility": utility(model.theta, d, spec),
        "error_rate": classification_error_rate(model.theta, d),
        "theta": [float(v) for v in model.theta],
        "theta_norm": model.theta_norm,
        "grad_norm_at_solution": model.grad_norm_at_solution,
        "iterations_used": model.iterations_used,
        "solver_mode": model.solver_mode,
        "seed": args.seed,
    }
    if args.out:
        summary = {
            "command": "train",
            "inputs": _jsonable_args(args),
            "result": result,
            "versions": _versions(),
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(
        f"trained at eps={args.eps} delta={args.delta}: "
        f"loss={result['utility']:.6f} error_rate={result['error_rate']:.4f} "
        f"grad_norm={result['grad_norm_at_solution']:.3e}"
    )
    return 0


def cmd_estimate(args) -> int:
    cfg = _experiment_config(args)
    rows = experiments.experiment_estimate_vs_actual(cfg)
    _write_outputs(args, "estimate", rows, experiments.ESTIMATE_COLUMNS)
    return 0


def cmd_choose_eps(args) -> int:
    cfg = _experiment_config(args)
    d = experiments.resolve_dataset(cfg)
    spec = experiments.loss_spec_for(cfg, d.p)
    tcfg = experiments.train_config_for(cfg)
    me = args.measure_eps[0]
    damping = (
        experiments.recommended_damping(cfg.reg_lambda, spec.lambda_hess, me, d.n)
        if tcfg.solver_mode == "sgd_repro"
        else 0.0
    )
    result = plan(d, spec, tcfg, me, args.delta, args.target_utility, args.seed, damping=damping)
    print(f"chosen_eps: {result.chosen_eps!r}")
    print(
        f"line: measure_eps={result.line.measure_eps!r} "
        f"base_utility={result.line.base_utility!r} slope={result.line.slope!r}"
    )
    print(f"remainder_scale: {result.scale.scale!r}")
    if result.magnitude_warning:
        print("warning: chosen and measuring eps differ by more than an order of magnitude")
    if args.out:
        summary = {
            "command": "choose-eps",
            "inputs": _jsonable_args(args),
            "result": {
                "chosen_eps": result.chosen_eps,
                "measure_eps": result.line.measure_eps,
                "base_utility": result.line.base_utility,
                "slope": result.line.slope,
                "remainder_scale": result.scale.scale,
                "magnitude_warning": result.magnitude_warning,
            },
            "versions": _versions(),
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_sweep_measuring(args) -> int:
    cfg = _experiment_config(args)
    rows = experiments.experiment_measuring_sweep(cfg)
    _write_outputs(args, "sweep-measuring", rows, experiments.SWEEP_COLUMNS)
    return 0


def cmd_sweep_samples(args) -> int:
    cfg = _experiment_config(args)
    rows = experiments.experiment_sample_sweep(cfg)
    _write_outputs(args, "sweep-samples", rows, experiments.SAMPLE_COLUMNS)
    return 0


def cmd_oracle_compare(args) -> int:
    cfg = _experiment_config(args)
    rows = experiments.oracle_compare(cfg)
    _write_outputs(args, "oracle-compare", rows, experiments.ORACLE_COLUMNS)
    return 0


def cmd_gen_data(args) -> int:
    d = gen_synthetic(args.n, args.p, args.separation, args.seed)
    write_csv_dataset(d, args.out)
    print(f"wrote {d.n} x {d.p} dataset to {args.out}")
    return 0


_HANDLERS = {
    "train": cmd_train,
    "estimate": cmd_estimate,
    "choose-eps": cmd_choose_eps,
    "sweep-measuring": cmd_sweep_measuring,
    "sweep-samples": cmd_sweep_samples,
    "oracle-compare": cmd_oracle_compare,
    "gen-data": cmd_gen_data,
}


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = _peek_config(argv)
        parser = build_parser(config)
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except EpsPlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
