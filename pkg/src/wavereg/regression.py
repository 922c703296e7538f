"""Sparse design-matrix assembly, iterative least squares and the fitted
regression model.

The design matrix has one row per transformed sample and one column per
wavelet index; compact supports keep a handful of nonzeros per row and
level.  The same block generator backs the explicit compressed storage, the
matrix-free products and prediction at new points.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import IndexSet, build_index_set, level_values
from .gram import gram_restricted  # noqa: F401  (re-exported: engine surface)
from .kde import EstimatedTransform, estimate_transform
from .transforms import (
    DomainKind,
    ProductTransform,
    Transform1D,
    default_eta,
    density_by_name,
)

__all__ = [
    "SparseDesignMatrix",
    "KdePlan",
    "RegressionModel",
    "SolveStats",
    "OversamplingWarning",
    "assemble",
    "lsqr",
    "fit",
    "design_condition",
    "gram_restricted",
]

_ROW_CHUNK = 1 << 14


class OversamplingWarning(UserWarning):
    """The sample budget is below the M >= N log2 N guidance."""


def _wrap_half_open(X):
    """Fold torus coordinates into [-1/2, 1/2)."""
    X = np.asarray(X, dtype=float)
    return X - np.floor(X + 0.5)


class SparseDesignMatrix:
    """Design matrix of periodized wavelet values at transformed samples.

    ``coords`` maps an interaction order to the (M, d) array of torus
    coordinates used by blocks of that order (a single array may be shared by
    every order).  Entries are generated block by block; `tocsr` materializes
    them once, while `matvec`/`rmatvec` can stream without storing.
    """

    def __init__(self, index_set: IndexSet, m: int, coords):
        self.index_set = index_set
        self.m = int(m)
        if isinstance(coords, dict):
            self._coords = {int(k): np.atleast_2d(np.asarray(v, float)) for k, v in coords.items()}
        else:
            self._coords = {0: np.atleast_2d(np.asarray(coords, float))}
        some = next(iter(self._coords.values()))
        self.shape = (some.shape[0], len(index_set))
        for X in self._coords.values():
            if X.shape != some.shape:
                raise ValueError("coordinate arrays must share one shape")
            if np.any(X < -0.5) or np.any(X >= 0.5):
                raise ValueError("sample coordinates must lie in [-1/2, 1/2)")
        self._level_cache = {}
        self._csr = None

    def _coord(self, order):
        return self._coords.get(order, self._coords.get(0))

    def _dim_level(self, order, dim, j, rows):
        """(k, v) matrices of one wavelet level along one dimension."""
        key = (order if order in self._coords else 0, dim, j)
        if key not in self._level_cache:
            x = self._coord(order)[:, dim - 1]
            self._level_cache[key] = level_values(self.m, j, x)
        K, V = self._level_cache[key]
        if rows is None:
            return K, V
        return K[rows], V[rows]

    def iter_blocks(self, rows=None):
        """Yield (cols, vals) per index block, restricted to `rows`."""
        M = self.shape[0] if rows is None else len(rows)
        for blk in self.index_set.blocks:
            if not blk.u:
                yield (
                    np.full((M, 1), blk.start, dtype=np.int64),
                    np.ones((M, 1)),
                )
                continue
            cols = None
            vals = None
            order = len(blk.u)
            for dim, j, size in zip(blk.u, blk.j_active, blk.shape):
                K, V = self._dim_level(order, dim, j, rows)
                if cols is None:
                    cols, vals = K, V
                else:
                    cols = (cols[:, :, None] * size + K[:, None, :]).reshape(M, -1)
                    vals = (vals[:, :, None] * V[:, None, :]).reshape(M, -1)
            yield blk.start + cols, vals

    def tocsr(self):
        if self._csr is None:
            M, N = self.shape
            rows_acc, cols_acc, vals_acc = [], [], []
            for cols, vals in self.iter_blocks():
                keep = vals != 0.0
                r = np.broadcast_to(
                    np.arange(M, dtype=np.int64)[:, None], cols.shape
                )
                rows_acc.append(r[keep])
                cols_acc.append(cols[keep])
                vals_acc.append(vals[keep])
            self._csr = sp.csr_matrix(
                (
                    np.concatenate(vals_acc),
                    (np.concatenate(rows_acc), np.concatenate(cols_acc)),
                ),
                shape=(M, N),
            )
        return self._csr

    # -- matrix-free products --------------------------------------------

    def matvec(self, a):
        a = np.asarray(a, dtype=float)
        out = np.zeros(self.shape[0])
        for cols, vals in self.iter_blocks():
            out += np.einsum("ij,ij->i", vals, a[cols])
        return out

    def rmatvec(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(self.shape[1])
        for cols, vals in self.iter_blocks():
            out += np.bincount(
                cols.ravel(),
                weights=(vals * y[:, None]).ravel(),
                minlength=self.shape[1],
            )
        return out

    def aslinearoperator(self):
        return spla.LinearOperator(
            self.shape, matvec=self.matvec, rmatvec=self.rmatvec
        )

    def toarray(self):
        return self.tocsr().toarray()


def assemble(X, index_set: IndexSet, m: int) -> SparseDesignMatrix:
    """Design matrix from transformed samples X in [-1/2, 1/2)^d."""
    return SparseDesignMatrix(index_set, m, X)


# ---------------------------------------------------------------------------
# Least squares
# ---------------------------------------------------------------------------


@dataclass
class SolveStats:
    iterations: int
    residual: float
    normal_residual: float
    istop: int
    condition_estimate: float
    warnings: list = field(default_factory=list)
    residual_history: list = None

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "normal_residual": self.normal_residual,
            "istop": self.istop,
            "condition_estimate": self.condition_estimate,
            "warnings": list(self.warnings),
        }


def lsqr(A, f, tol: float = 1e-10, max_iter=None, track_residuals: bool = False):
    """Iterative least squares min ||A a - f||_2 (Golub-Kahan bidiagonalization).

    Needs only products with the matrix and its transpose.  Stops on the
    relative residual-gradient criterion ||A' r|| <= tol ||A|| ||r|| (istop 2)
    or after max_iter (default 50 N) iterations (istop 7); both the final
    residual and the iteration count are reported.
    """
    f = np.asarray(f, dtype=float).ravel()
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite values in the right-hand side")
    if isinstance(A, SparseDesignMatrix):
        M, N = A.shape
        op = spla.aslinearoperator(A.tocsr())
    else:
        data = A.data if sp.issparse(A) else np.asarray(A)
        if not np.all(np.isfinite(data)):
            raise ValueError("non-finite values in the design matrix")
        op = spla.aslinearoperator(sp.csr_matrix(A) if sp.issparse(A) else np.asarray(A, dtype=float))
        M, N = op.shape
    if f.size != M:
        raise ValueError("value vector length does not match the matrix")
    notes = []
    if M < N:
        notes.append(f"underdetermined system: M={M} < N={N}")
        warnings.warn(notes[-1], OversamplingWarning)
    if max_iter is None:
        max_iter = 50 * N

    x = np.zeros(N)
    history = [] if track_residuals else None
    u = f.copy()
    beta = float(np.linalg.norm(u))
    if beta == 0.0:
        return x, SolveStats(0, 0.0, 0.0, 0, 0.0, notes, history)
    u /= beta
    v = op.rmatvec(u)
    alpha = float(np.linalg.norm(v))
    if alpha == 0.0:
        return x, SolveStats(0, beta, 0.0, 0, 0.0, notes, history)
    v /= alpha
    w = v.copy()
    phibar, rhobar = beta, alpha
    anorm2 = alpha * alpha
    rnorm, arnorm = beta, alpha * beta
    ddnorm = 0.0
    istop, itn = 7, 0
    for itn in range(1, max_iter + 1):
        u = op.matvec(v) - alpha * u
        beta = float(np.linalg.norm(u))
        anorm2 += alpha * alpha + beta * beta
        if beta > 0.0:
            u /= beta
            v = op.rmatvec(u) - beta * v
            alpha = float(np.linalg.norm(v))
            if alpha > 0.0:
                v /= alpha
        rho = math.hypot(rhobar, beta)
        c, s = rhobar / rho, beta / rho
        theta = s * alpha
        rhobar = -c * alpha
        phi = c * phibar
        phibar = s * phibar
        x += (phi / rho) * w
        ddnorm += float(np.linalg.norm(w / rho)) ** 2
        w = v - (theta / rho) * w
        rnorm = phibar
        arnorm = alpha * abs(s * phi)
        if history is not None:
            history.append(rnorm)
        anorm = math.sqrt(anorm2)
        if arnorm <= tol * anorm * rnorm or rnorm == 0.0:
            istop = 2
            break
    acond = math.sqrt(anorm2) * math.sqrt(ddnorm)
    return x, SolveStats(
        iterations=itn,
        residual=float(rnorm),
        normal_residual=float(arnorm),
        istop=istop,
        condition_estimate=float(acond),
        warnings=notes,
        residual_history=history,
    )


def design_condition(A) -> float:
    """2-norm condition number of the design matrix via its Gram spectrum."""
    csr = A.tocsr() if isinstance(A, SparseDesignMatrix) else sp.csr_matrix(A)
    G = (csr.T @ csr).toarray()
    eigs = np.linalg.eigvalsh(G)
    lo, hi = max(eigs[0], 0.0), eigs[-1]
    if lo == 0.0:
        return math.inf
    return math.sqrt(hi / lo)


# ---------------------------------------------------------------------------
# Model fitting
# ---------------------------------------------------------------------------


@dataclass
class KdePlan:
    """Request to estimate the transform of one variable from the data."""

    domain: DomainKind = DomainKind.REAL_LINE
    bandwidth: object = "dpi"  # "dpi" | "rot" | positive float


def _transform_forward(t, y, eta_override=None):
    if isinstance(t, Transform1D) and eta_override is not None:
        return t.with_eta(eta_override).transform(y)
    return t.transform(y)


@dataclass
class RegressionModel:
    """Fitted wavelet expansion with its transforms and solver diagnostics."""

    index_set: IndexSet
    m: int
    coefficients: np.ndarray
    transforms: list
    eta_by_order: dict
    stats: SolveStats

    @property
    def d(self):
        return self.index_set.d

    def coords(self, Y):
        """Per-order torus coordinates of raw sample points."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.d:
            raise ValueError(f"expected {self.d}-dimensional points")
        orders = sorted({len(u) for u in self.index_set.subsets if u})
        base = np.empty_like(Y)
        ui_dims = []
        for i, t in enumerate(self.transforms, start=1):
            if isinstance(t, Transform1D) and t.domain is DomainKind.UNIT_INTERVAL:
                ui_dims.append(i)
                continue
            base[:, i - 1] = t.transform(Y[:, i - 1])
        out = {}
        for order in orders:
            if ui_dims and self.eta_by_order:
                X = base.copy()
                eta = self.eta_by_order.get(order, 0.0)
                for i in ui_dims:
                    X[:, i - 1] = _transform_forward(
                        self.transforms[i - 1], Y[:, i - 1], eta
                    )
            elif ui_dims:
                X = base.copy()
                for i in ui_dims:
                    X[:, i - 1] = self.transforms[i - 1].transform(Y[:, i - 1])
            else:
                X = base
            out[order] = _wrap_half_open(X)
        if not out:
            out[0] = _wrap_half_open(base)
        return out

    def design(self, Y) -> SparseDesignMatrix:
        return SparseDesignMatrix(self.index_set, self.m, self.coords(Y))

    def predict(self, Y):
        """Evaluate the fitted expansion at raw points (batched)."""
        Y = np.asarray(Y, dtype=float)
        single = Y.ndim == 1 and self.d > 1 or (Y.ndim == 0 and self.d == 1)
        Y = np.atleast_2d(Y)
        if Y.shape[1] != self.d and Y.shape[0] == self.d:
            Y = Y.T
        out = np.empty(Y.shape[0])
        for i0 in range(0, Y.shape[0], _ROW_CHUNK):
            block = Y[i0 : i0 + _ROW_CHUNK]
            out[i0 : i0 + len(block)] = self.design(block).matvec(self.coefficients)
        return float(out[0]) if single else out

    def __call__(self, Y):
        return self.predict(Y)

    # -- persistence -------------------------------------------------------

    def _transform_descriptors(self):
        descs = []
        for t in self.transforms:
            if isinstance(t, EstimatedTransform):
                descs.append(t.descriptor())
            elif isinstance(t, Transform1D):
                if t.name == "custom":
                    raise ValueError("custom transforms cannot be serialized")
                descs.append(
                    {
                        "kind": "density",
                        "name": t.name,
                        "params": t.params,
                        "eta": t.eta,
                    }
                )
            else:
                raise TypeError(f"unknown transform type {type(t)!r}")
        return descs

    def to_json_dict(self):
        return {
            "m": self.m,
            "index_set": self.index_set.to_json_dict(),
            "coefficients": self.coefficients.tolist(),
            "eta_by_order": {str(k): v for k, v in self.eta_by_order.items()},
            "transforms": self._transform_descriptors(),
            "stats": self.stats.to_dict(),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def from_json_dict(cls, doc):
        transforms = []
        for desc in doc["transforms"]:
            if desc["kind"] == "kde":
                transforms.append(EstimatedTransform.from_descriptor(desc))
            else:
                t = density_by_name(desc["name"], **desc.get("params", {}))
                if desc.get("eta"):
                    t = t.with_eta(desc["eta"])
                transforms.append(t)
        stats = SolveStats(**doc["stats"])
        return cls(
            index_set=IndexSet.from_json_dict(doc["index_set"]),
            m=doc["m"],
            coefficients=np.asarray(doc["coefficients"], dtype=float),
            transforms=transforms,
            eta_by_order={int(k): v for k, v in doc["eta_by_order"].items()},
            stats=stats,
        )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _resolve_transform(entry, column):
    if isinstance(entry, (Transform1D, EstimatedTransform)):
        return entry
    if isinstance(entry, KdePlan):
        return estimate_transform(column, entry.domain, entry.bandwidth)
    raise TypeError(f"cannot interpret transform plan entry {entry!r}")


def fit(
    Y,
    f,
    transforms,
    m: int,
    n,
    subsets="full",
    eta="auto",
    tol: float = 1e-10,
    max_iter=None,
) -> RegressionModel:
    """Transformed hyperbolic wavelet regression.

    Transforms each variable to the torus (by its known density or a kernel
    density estimate requested via `KdePlan`), assembles the sparse design
    matrix over the hyperbolic/ANOVA index set and solves the least-squares
    system iteratively.

    ``eta``: extension margin for unit-interval variables with known density;
    "auto" picks (m-1)/2^(ceil(n_u/|u|)+1) per interaction order, a number
    overrides globally.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    f = np.asarray(f, dtype=float).ravel()
    if Y.shape[0] != f.size:
        raise ValueError("need one value per sample point")
    d = Y.shape[1]
    if isinstance(transforms, ProductTransform):
        transforms = transforms.components
    if not isinstance(transforms, (list, tuple)):
        transforms = [transforms] * d
    if len(transforms) != d:
        raise ValueError(f"need {d} transform plan entries, got {len(transforms)}")

    index_set = build_index_set(d, n, subsets)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fitted = [
            _resolve_transform(entry, Y[:, i])
            for i, entry in enumerate(transforms)
        ]

        eta_by_order = {}
        has_ui = any(
            isinstance(t, Transform1D) and t.domain is DomainKind.UNIT_INTERVAL
            for t in fitted
        )
        if has_ui:
            for order in sorted({len(u) for u in index_set.subsets if u}):
                if eta == "auto":
                    eta_by_order[order] = default_eta(
                        m, index_set.level_budget[order], order
                    )
                else:
                    eta_by_order[order] = float(eta)

        model = RegressionModel(
            index_set=index_set,
            m=m,
            coefficients=np.zeros(len(index_set)),
            transforms=fitted,
            eta_by_order=eta_by_order,
            stats=SolveStats(0, 0.0, 0.0, 0, 0.0),
        )
        A = SparseDesignMatrix(index_set, m, model.coords(Y))
        M, N = A.shape
        if N > 1 and M < N * math.log2(N):
            warnings.warn(
                f"sample budget M={M} below N log2 N = {N * math.log2(N):.0f}",
                OversamplingWarning,
            )
        coeffs, stats = lsqr(A, f, tol=tol, max_iter=max_iter)
    for w in caught:
        stats.warnings.append(str(w.message))
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    model.coefficients = coeffs
    model.stats = stats
    return model
