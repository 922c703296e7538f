"""Experiment harness: configuration, sampling, convergence sweeps, the
eigenvalue table and the two-stage high-dimensional pipeline.

Every runner is deterministic given the master seed: train and test draws
come from disjoint seed streams spawned per (seed, level, purpose), so
identical configurations reproduce bit-identical tables.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .basis import build_index_set
from .gram import gram_restricted
from .kde import EstimatedTransform
from .regression import KdePlan, RegressionModel, design_condition, fit
from .sensitivity import gsi
from .testfunctions import default_densities, test_function
from .transforms import (
    DomainKind,
    ProductTransform,
    Transform1D,
    default_eta_exact,
    density_by_name,
)

__all__ = [
    "ExperimentConfig",
    "rng_stream",
    "sample_count",
    "rmse",
    "run_convergence",
    "run_table1",
    "run_two_stage",
    "fit_from_config",
    "ConfigError",
]


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def rng_stream(master_seed, *tags) -> np.random.Generator:
    """Independent generator for one (seed, purpose, ...) cell."""
    return np.random.default_rng(
        np.random.SeedSequence([int(master_seed) & 0x7FFFFFFF, *map(int, tags)])
    )


def sample_count(N: int, c: float = 1.0) -> int:
    """Oversampling rule M = ceil(c * N * log2 N)."""
    return max(int(math.ceil(c * N * math.log2(max(N, 2)))), N)


def rmse(model, Y_test, f_true) -> float:
    """Root mean square prediction error over a test set."""
    f_true = np.asarray(f_true, dtype=float).ravel()
    if f_true.size == 0:
        raise ValueError("empty test set")
    pred = model.predict(Y_test) if hasattr(model, "predict") else model(Y_test)
    return float(np.sqrt(np.mean((np.asarray(pred).ravel() - f_true) ** 2)))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _parse_density(spec) -> Transform1D:
    if isinstance(spec, Transform1D):
        return spec
    if isinstance(spec, dict):
        spec = dict(spec)
        return density_by_name(spec.pop("name"), **spec)
    name, _, tail = str(spec).partition(":")
    params = {}
    if tail:
        for item in tail.split(","):
            key, _, val = item.partition("=")
            params[key.strip()] = float(val)
    return density_by_name(name.strip(), **params)


def _parse_transform_plan(spec, density: Transform1D):
    """Resolve a per-dimension transform request against the true density."""
    if spec in (None, "known"):
        return density
    if isinstance(spec, (Transform1D, EstimatedTransform, KdePlan)):
        return spec
    text = str(spec)
    if not text.startswith("kde"):
        raise ConfigError(f"unknown transform request {spec!r}")
    _, _, method = text.partition(":")
    domain = density.domain
    if domain is DomainKind.TORUS:
        raise ConfigError("kernel density transforms cover R and [0,1] only")
    if not method:
        method = "rot" if domain is DomainKind.UNIT_INTERVAL else "dpi"
    bandwidth = method if method in ("rot", "dpi") else float(method)
    return KdePlan(domain=domain, bandwidth=bandwidth)


def _broadcast(value, d, what):
    if isinstance(value, (list, tuple)):
        if len(value) == 1:
            return list(value) * d
        if len(value) != d:
            raise ConfigError(f"need 1 or {d} entries for {what}, got {len(value)}")
        return list(value)
    return [value] * d


@dataclass
class ExperimentConfig:
    """Validated experiment description (see `from_dict` for the schema)."""

    function: str
    d: int
    m: int
    densities: list
    transform_plan: list
    levels: list
    subsets: object = "full"
    seed: int = 0
    seeds: int = 1
    oversampling: float = 1.0
    test_multiplier: int = 3
    eta: object = "auto"
    tol: float = 1e-10
    samples: int = None  # fixed M; overrides the oversampling rule
    slope_window: object = "upper-half"
    threshold: float = 0.03
    nu: int = 2
    stage2_levels: dict = field(default_factory=lambda: {1: 5, 2: 3})
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        try:
            function = doc["function"]
            test_function(function)  # validate the name
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        from .testfunctions import TEST_FUNCTIONS

        required_d = TEST_FUNCTIONS[function]["d"]
        d = int(doc.get("d", required_d or 1))
        if required_d is not None and d != required_d:
            raise ConfigError(
                f"function {function!r} requires dimension {required_d}"
            )
        densities = doc.get("densities")
        if densities is None:
            densities = default_densities(function, d)
        densities = [_parse_density(s) for s in _broadcast(densities, d, "densities")]
        plan = _broadcast(doc.get("transform", "known"), d, "transform")
        plan = [
            _parse_transform_plan(s, rho) for s, rho in zip(plan, densities)
        ]
        levels = doc.get("levels", doc.get("n", 4))
        if isinstance(levels, dict):
            raise ConfigError("per-order levels belong to stage2_levels")
        if isinstance(levels, (int, np.integer)):
            levels = [int(levels)]
        else:
            levels = [int(v) for v in levels]
        subsets = doc.get("subsets", "full")
        if isinstance(subsets, list):
            subsets = [tuple(int(i) for i in u) for u in subsets]
        stage2 = {
            int(k): int(v)
            for k, v in doc.get("stage2_levels", {1: 5, 2: 3}).items()
        }
        try:
            cfg = cls(
                function=function,
                d=d,
                m=int(doc.get("m", 2)),
                densities=densities,
                transform_plan=plan,
                levels=levels,
                subsets=subsets,
                seed=int(doc.get("seed", 0)),
                seeds=int(doc.get("seeds", 1)),
                oversampling=float(doc.get("oversampling", 1.0)),
                test_multiplier=int(doc.get("test_multiplier", 3)),
                eta=doc.get("eta", "auto"),
                tol=float(doc.get("tol", 1e-10)),
                samples=None if doc.get("samples") is None else int(doc["samples"]),
                slope_window=doc.get("slope_window", "upper-half"),
                threshold=float(doc.get("threshold", 0.03)),
                nu=int(doc.get("nu", 2)),
                stage2_levels=stage2,
                raw=doc,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad configuration value: {exc}") from exc
        return cfg

    @property
    def fn(self):
        return test_function(self.function)

    @property
    def sampler(self) -> ProductTransform:
        return ProductTransform(self.densities)

    def config_hash(self) -> str:
        doc = dict(self.raw)
        doc.setdefault("function", self.function)
        blob = json.dumps(doc, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _csv_table(header, rows, cfg_hash=None, comments=()):
    buf = io.StringIO()
    buf.write(f"# wavereg {__version__}\n")
    if cfg_hash:
        buf.write(f"# config {cfg_hash}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
        buf.write("\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def _draw(config: ExperimentConfig, seed_tag, count):
    rng = rng_stream(config.seed, *seed_tag)
    return config.sampler.sample(count, rng)


def _fit_once(config: ExperimentConfig, n, Y, fvals, subsets=None):
    return fit(
        Y,
        fvals,
        config.transform_plan,
        m=config.m,
        n=n,
        subsets=config.subsets if subsets is None else subsets,
        eta=config.eta,
        tol=config.tol,
    )


def fit_from_config(config: ExperimentConfig, n=None, seed_index=0):
    """One model fit at one level, drawing fresh training data."""
    n = config.levels[-1] if n is None else n
    N = len(build_index_set(config.d, n, config.subsets))
    M = config.samples or sample_count(N, config.oversampling)
    Y = _draw(config, (seed_index, n, 0), M)
    model = _fit_once(config, n, Y, config.fn(Y))
    return model, Y


def _slope(ns, errors, window):
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if window == "upper-half":
        lo = len(ns) // 2
        sel = slice(lo, None)
    else:
        lo, hi = window
        sel = (ns >= lo) & (ns <= hi)
    ns, errors = ns[sel], errors[sel]
    if len(ns) < 2:
        raise ValueError("slope window needs at least two levels")
    return float(np.polyfit(ns, np.log2(errors), 1)[0])


@dataclass
class ConvergenceResult:
    rows: list  # (seed_index, n, N, M, rmse, condition)
    slopes: list
    median_slope: float
    config_hash: str

    def to_csv(self, path=None):
        text = _csv_table(
            ["seed", "n", "N", "M", "rmse", "cond"],
            self.rows,
            self.config_hash,
            comments=[
                f"median_slope {self.median_slope!r}",
                "slopes " + " ".join(repr(s) for s in self.slopes),
            ],
        )
        if path:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def run_convergence(config: ExperimentConfig, compute_condition=False):
    """Level sweep: fit per (seed, n), report RMSE decay and fitted slopes."""
    rows = []
    slopes = []
    fn = config.fn
    for s in range(config.seeds):
        errors = []
        for n in config.levels:
            N = len(build_index_set(config.d, n, config.subsets))
            M = config.samples or sample_count(N, config.oversampling)
            Y = _draw(config, (s, n, 0), M)
            Y_test = _draw(config, (s, n, 1), config.test_multiplier * M)
            model = _fit_once(config, n, Y, fn(Y))
            err = rmse(model, Y_test, fn(Y_test))
            cond = (
                design_condition(model.design(Y)) if compute_condition else ""
            )
            rows.append((s, n, N, M, err, cond))
            errors.append(err)
        slopes.append(_slope(config.levels, errors, config.slope_window))
    rows.sort(key=lambda r: (r[0], r[1]))
    return ConvergenceResult(
        rows=rows,
        slopes=slopes,
        median_slope=float(np.median(slopes)),
        config_hash=config.config_hash(),
    )


@dataclass
class Table1Result:
    rows: list  # (m, n or "torus", eta, eig_min, eig_max)

    def to_csv(self, path=None):
        text = _csv_table(["m", "n", "eta", "mu_min", "mu_max"], self.rows)
        if path:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def run_table1(m_values=(2, 3), n_values=range(2, 8)) -> Table1Result:
    """Extremal eigenvalues of the boundary-restricted Gram matrix, plus the
    full-torus reference column."""
    rows = []
    for m in m_values:
        for n in n_values:
            idx = build_index_set(1, n, "full")
            eta = default_eta_exact(m, n, 1)
            res = gram_restricted(idx, m, eta)
            rows.append((m, n, float(eta), res.eig_min, res.eig_max))
        idx = build_index_set(1, max(n_values), "full")
        res = gram_restricted(idx, m, 0)
        rows.append((m, "torus", 0.0, res.eig_min, res.eig_max))
    return Table1Result(rows)


@dataclass
class TwoStageResult:
    reports: list  # per-seed stage-1 sensitivity reports
    active_sets: list
    rmse_stage1: list
    rmse_stage2: list
    config_hash: str

    @property
    def median_improvement(self):
        ratio = [
            1.0 - b / a for a, b in zip(self.rmse_stage1, self.rmse_stage2)
        ]
        return float(np.median(ratio))

    def to_csv(self, path=None):
        rows = []
        for s, (r1, r2, act) in enumerate(
            zip(self.rmse_stage1, self.rmse_stage2, self.active_sets)
        ):
            rows.append(
                (s, r1, r2, ";".join("+".join(map(str, u)) for u in act if u))
            )
        text = _csv_table(
            ["seed", "rmse_stage1", "rmse_stage2", "active"],
            rows,
            self.config_hash,
            comments=[f"median_improvement {self.median_improvement!r}"],
        )
        if path:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def run_two_stage(config: ExperimentConfig) -> TwoStageResult:
    """Sensitivity-driven two-stage pipeline.

    Stage 1 fits all interactions up to order nu at a coarse level, reads the
    global sensitivity indices and keeps the terms above the threshold.
    Stage 2 refits only those terms with per-order levels and compares test
    errors on a common test set.
    """
    fn = config.fn
    n1 = config.levels[0]
    reports, active_sets, err1, err2 = [], [], [], []
    for s in range(config.seeds):
        M = config.samples or sample_count(
            len(build_index_set(config.d, n1, config.nu)), config.oversampling
        )
        Y = _draw(config, (s, n1, 0), M)
        Y_test = _draw(config, (s, n1, 1), config.test_multiplier * M)
        fvals, ftest = fn(Y), fn(Y_test)

        stage1 = _fit_once(config, n1, Y, fvals, subsets=config.nu)
        report = gsi(stage1, threshold=config.threshold)
        active = report.active
        reports.append(report)
        active_sets.append(active)
        err1.append(rmse(stage1, Y_test, ftest))

        budgets = {
            r: config.stage2_levels.get(r, max(config.stage2_levels.values()))
            for r in sorted({len(u) for u in active if u})
        } or {1: config.stage2_levels.get(1, n1)}
        stage2 = fit(
            Y,
            fvals,
            stage1.transforms,  # reuse the estimated transforms
            m=config.m,
            n=budgets,
            subsets=active,
            eta=config.eta,
            tol=config.tol,
        )
        err2.append(rmse(stage2, Y_test, ftest))
    return TwoStageResult(
        reports=reports,
        active_sets=active_sets,
        rmse_stage1=err1,
        rmse_stage2=err2,
        config_hash=config.config_hash(),
    )
