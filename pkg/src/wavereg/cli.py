"""Command-line harness for fitting, prediction and the paper-style
experiment tables.

Configuration comes from a TOML or JSON file, with ``--set key=value``
overrides.  Exit codes: 0 on success, 2 on configuration errors, 3 on
numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .experiments import (
    ConfigError,
    ExperimentConfig,
    fit_from_config,
    rmse,
    run_convergence,
    run_table1,
    run_two_stage,
)
from .regression import RegressionModel
from .sensitivity import gsi

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


def _coerce(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path, overrides=()):
    if path is None:
        doc = {}
    elif str(path).endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
    else:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    doc = dict(doc.get("experiment", doc))
    for item in overrides:
        key, _, value = item.partition("=")
        if not _:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        doc[key.strip()] = _coerce(value.strip())
    return doc


def _config_from_args(args) -> ExperimentConfig:
    doc = load_config(args.config, args.set or ())
    return ExperimentConfig.from_dict(doc)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_converge(args):
    cfg = _config_from_args(args)
    res = run_convergence(cfg, compute_condition=args.condition)
    _write(res.to_csv(), args.out)
    return 0


def cmd_table1(args):
    m_values = [int(v) for v in args.m.split(",")]
    lo, _, hi = args.n.partition("..")
    n_values = range(int(lo), int(hi or lo) + 1)
    res = run_table1(m_values, n_values)
    _write(res.to_csv(), args.out)
    return 0


def cmd_two_stage(args):
    cfg = _config_from_args(args)
    res = run_two_stage(cfg)
    _write(res.to_csv(), args.out)
    if args.gsi_out:
        res.reports[0].to_csv(args.gsi_out)
    return 0


def cmd_fit(args):
    cfg = _config_from_args(args)
    model, Y = fit_from_config(cfg)
    model.save(args.out)
    test_rng_draw = cfg.sampler.sample(
        cfg.test_multiplier * len(Y), np.random.default_rng(cfg.seed + 1)
    )
    err = rmse(model, test_rng_draw, cfg.fn(test_rng_draw))
    sys.stderr.write(
        f"fit: N={len(model.index_set)} M={len(Y)} "
        f"iterations={model.stats.iterations} residual={model.stats.residual:.3e} "
        f"test-rmse={err:.3e}\n"
    )
    for note in model.stats.warnings:
        sys.stderr.write(f"warning: {note}\n")
    return 0


def _read_points(path):
    with open(path) as fh:
        rows = []
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                continue  # header
    return np.asarray(rows)


def cmd_predict(args):
    model = RegressionModel.load(args.model)
    pts = _read_points(args.input)
    if pts.ndim != 2 or pts.shape[1] != model.d:
        raise ConfigError(
            f"input points must have {model.d} columns, got shape {pts.shape}"
        )
    preds = model.predict(pts)
    lines = ["prediction"] + [repr(float(v)) for v in preds]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_gsi(args):
    model = RegressionModel.load(args.model)
    report = gsi(model, threshold=args.threshold)
    if args.format == "json":
        _write(report.to_json() + "\n", args.out)
    else:
        _write(report.to_csv(), args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wavereg",
        description="Transformed hyperbolic wavelet regression experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p):
        p.add_argument("--config", help="TOML or JSON experiment file")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override one configuration entry (JSON-coded value)",
        )
        p.add_argument("--out", default="-", help="output path (default stdout)")

    p = sub.add_parser("converge", help="RMSE decay over a level sweep")
    add_config_opts(p)
    p.add_argument(
        "--condition",
        action="store_true",
        help="also compute the design-matrix condition number",
    )
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("table1", help="extremal Gram eigenvalues table")
    p.add_argument("--m", default="2,3", help="wavelet orders, comma separated")
    p.add_argument("--n", default="2..7", help="level range lo..hi")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("two-stage", help="sensitivity-driven two-stage fit")
    add_config_opts(p)
    p.add_argument("--gsi-out", help="write the first seed's sensitivity CSV here")
    p.set_defaults(func=cmd_two_stage)

    p = sub.add_parser("fit", help="fit one model and save it as JSON")
    add_config_opts(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="evaluate a saved model on CSV points")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="CSV of points, one row each")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gsi", help="sensitivity report of a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=0.03)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gsi)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except (ValueError, KeyError, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
