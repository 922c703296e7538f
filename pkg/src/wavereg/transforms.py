"""One-dimensional densities and their CDF transforms onto the torus.

A transform pushes samples drawn from a density on ``T``, ``R`` or ``[0,1]``
to (near-)uniform points in ``[-1/2, 1/2]``.  On the unit interval an
extension margin ``eta`` is reserved at the left torus boundary so that a
non-periodic function can be smoothly continued there.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special

__all__ = [
    "DomainKind",
    "Transform1D",
    "ProductTransform",
    "default_eta",
    "default_eta_exact",
    "standard_normal",
    "cauchy",
    "laplace",
    "exponential",
    "gaussian_mixture",
    "beta_symmetric",
    "uniform_unit",
    "uniform_torus",
    "beta_torus",
    "tabulated_density",
    "density_by_name",
]

_EDGE = 1e-15  # clamp width at the open range ends


class DomainKind(enum.Enum):
    TORUS = "torus"
    REAL_LINE = "real"
    UNIT_INTERVAL = "unit"


def default_eta_exact(m: int, n: int, d: int) -> Fraction:
    """Extension margin (m-1) / 2^(ceil(n/d)+1) as an exact rational."""
    if m < 1 or n < 0 or d < 1:
        raise ValueError("need m >= 1, n >= 0, d >= 1")
    return Fraction(m - 1, 2 ** (-(-n // d) + 1))


def default_eta(m: int, n: int, d: int) -> float:
    return float(default_eta_exact(m, n, d))


@dataclass
class Transform1D:
    """Strictly increasing CDF transform of one variable.

    ``cdf_core`` integrates the density from the domain's left anchor
    (-1/2 on the torus, -inf on the real line, 0 on the unit interval) and
    runs from 0 to 1.  ``cdf_inverse`` is the analytic inverse when known;
    otherwise a bracketed Newton/bisection fallback is used.
    """

    domain: DomainKind
    pdf: callable
    cdf_core: callable
    eta: float = 0.0
    cdf_inverse: callable = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    bracket: tuple = None  # search interval for the root-finding inverse
    root_tol: float = 1e-12

    def __post_init__(self):
        if self.domain is not DomainKind.UNIT_INTERVAL and self.eta != 0.0:
            raise ValueError("eta is only meaningful on the unit interval")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError("eta must lie in [0, 1)")
        if self.bracket is None:
            self.bracket = {
                DomainKind.TORUS: (-0.5, 0.5),
                DomainKind.UNIT_INTERVAL: (0.0, 1.0),
                DomainKind.REAL_LINE: (-1.0, 1.0),  # grown on demand
            }[self.domain]

    def with_eta(self, eta: float) -> "Transform1D":
        return Transform1D(
            self.domain,
            self.pdf,
            self.cdf_core,
            eta=float(eta),
            cdf_inverse=self.cdf_inverse,
            name=self.name,
            params=self.params,
            bracket=self.bracket,
            root_tol=self.root_tol,
        )

    # -- forward ----------------------------------------------------------

    def _check_domain(self, y):
        if self.domain is DomainKind.TORUS:
            bad = (y < -0.5) | (y > 0.5)
        elif self.domain is DomainKind.UNIT_INTERVAL:
            bad = (y < 0.0) | (y > 1.0)
        else:
            bad = ~np.isfinite(y)
        if np.any(bad):
            raise ValueError(
                f"sample outside the {self.domain.value} domain: "
                f"{np.asarray(y)[np.atleast_1d(bad)].ravel()[:3]}"
            )

    def transform(self, y):
        """Map a sample to x in [-1/2, 1/2]."""
        y = np.asarray(y, dtype=float)
        self._check_domain(y)
        core = np.asarray(self.cdf_core(y), dtype=float)
        if self.domain is DomainKind.UNIT_INTERVAL:
            x = self.eta + (1.0 - self.eta) * core - 0.5
            return np.clip(x, self.eta - 0.5, 0.5)
        return core - 0.5

    def __call__(self, y):
        return self.transform(y)

    def derivative(self, y):
        scale = 1.0 - self.eta if self.domain is DomainKind.UNIT_INTERVAL else 1.0
        return scale * np.asarray(self.pdf(np.asarray(y, dtype=float)), dtype=float)

    @property
    def range(self):
        if self.domain is DomainKind.UNIT_INTERVAL:
            return (self.eta - 0.5, 0.5)
        return (-0.5, 0.5)

    # -- inverse ----------------------------------------------------------

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x).copy()
        lo, hi = self.range
        # float fuzz at the open ends collapses onto the nearest interior point
        x[(x > hi) & (x <= hi + _EDGE)] = hi
        x[(x < lo) & (x >= lo - _EDGE)] = lo
        if np.any((x < lo) | (x > hi)):
            raise ValueError("point outside the transform range")
        if self.domain is DomainKind.UNIT_INTERVAL:
            p = (x + 0.5 - self.eta) / (1.0 - self.eta)
            p = np.clip(p, 0.0, 1.0)
        else:
            p = x + 0.5
        if self.domain is DomainKind.REAL_LINE:
            # open range: collapse the endpoints to the nearest interior
            # probability so analytic inverses stay finite
            p = np.clip(p, 2.0**-53, 1.0 - 2.0**-53)
        if self.cdf_inverse is not None:
            y = np.asarray(self.cdf_inverse(p), dtype=float)
        else:
            y = np.array([self._invert_core(v) for v in p.ravel()]).reshape(p.shape)
        return float(y[()]) if scalar else y

    def _invert_core(self, p):
        lo, hi = self.bracket
        if self.domain is DomainKind.REAL_LINE:
            while self.cdf_core(lo) > p:
                lo *= 2.0
            while self.cdf_core(hi) < p:
                hi *= 2.0
        f = lambda y: self.cdf_core(y) - p
        # Newton from the bisection midpoint, guarded by the bracket
        y = 0.5 * (lo + hi)
        for _ in range(100):
            fy = f(y)
            if abs(fy) < self.root_tol:
                return y
            if fy > 0:
                hi = y
            else:
                lo = y
            dy = self.pdf(y)
            step = y - fy / dy if dy > 0 else None
            y = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        return y

    # -- sampling ---------------------------------------------------------

    def sample(self, count, rng):
        """i.i.d. draws via the inverse CDF applied to uniform variates."""
        if count < 1:
            raise ValueError("need at least one draw")
        u = rng.random(count)
        u = np.clip(u, 2.0**-53, 1.0 - 2.0**-53)
        lo, hi = self.range
        # invert the plain CDF: ignore eta so draws follow the density itself
        if self.cdf_inverse is not None:
            return np.asarray(self.cdf_inverse(u), dtype=float)
        return np.array([self._invert_core(p) for p in u])


@dataclass
class ProductTransform:
    """Componentwise transform of a product density."""

    components: list

    def __post_init__(self):
        self.components = list(self.components)

    @property
    def d(self):
        return len(self.components)

    def transform(self, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.shape[1] != self.d:
            raise ValueError("sample dimension mismatch")
        return np.column_stack(
            [t.transform(Y[:, i]) for i, t in enumerate(self.components)]
        )

    def __call__(self, Y):
        return self.transform(Y)

    def inverse(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack(
            [t.inverse(X[:, i]) for i, t in enumerate(self.components)]
        )

    def sample(self, count, rng):
        return np.column_stack([t.sample(count, rng) for t in self.components])


# ---------------------------------------------------------------------------
# Built-in densities
# ---------------------------------------------------------------------------


def standard_normal() -> Transform1D:
    return Transform1D(
        DomainKind.REAL_LINE,
        pdf=lambda y: np.exp(-0.5 * np.asarray(y) ** 2) / math.sqrt(2 * math.pi),
        cdf_core=lambda y: special.ndtr(y),
        cdf_inverse=lambda p: special.ndtri(p),
        name="normal",
    )


def cauchy() -> Transform1D:
    return Transform1D(
        DomainKind.REAL_LINE,
        pdf=lambda y: 1.0 / (math.pi * (1.0 + np.asarray(y) ** 2)),
        cdf_core=lambda y: np.arctan(y) / math.pi + 0.5,
        cdf_inverse=lambda p: np.tan(math.pi * (np.asarray(p) - 0.5)),
        name="cauchy",
    )


def laplace(loc=2.0, scale=4.0) -> Transform1D:
    def cdf(y):
        y = np.asarray(y, dtype=float)
        return 0.5 + 0.5 * np.sign(y - loc) * (-np.expm1(-np.abs(y - loc) / scale))

    def inv(p):
        p = np.asarray(p, dtype=float)
        return loc - scale * np.sign(p - 0.5) * np.log1p(-2.0 * np.abs(p - 0.5))

    return Transform1D(
        DomainKind.REAL_LINE,
        pdf=lambda y: np.exp(-np.abs(np.asarray(y) - loc) / scale) / (2 * scale),
        cdf_core=cdf,
        cdf_inverse=inv,
        name="laplace",
        params={"loc": loc, "scale": scale},
    )


def exponential(rate=0.5) -> Transform1D:
    """Density rate * exp(-rate * y) on y > 0, treated as a real-line density."""

    def pdf(y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, rate * np.exp(-rate * np.clip(y, 0, None)), 0.0)

    return Transform1D(
        DomainKind.REAL_LINE,
        pdf=pdf,
        cdf_core=lambda y: -np.expm1(-rate * np.clip(np.asarray(y, float), 0, None)),
        cdf_inverse=lambda p: -np.log1p(-np.asarray(p, dtype=float)) / rate,
        name="exponential",
        params={"rate": rate},
    )


def gaussian_mixture(means=(-2.0, 3.0), sigmas=(1.2, 2.5), weights=(0.5, 0.5)):
    means = np.asarray(means, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("mixture weights must sum to 1")

    def pdf(y):
        y = np.asarray(y, dtype=float)[..., None]
        comp = np.exp(-0.5 * ((y - means) / sigmas) ** 2) / (
            sigmas * math.sqrt(2 * math.pi)
        )
        return (weights * comp).sum(axis=-1)

    def cdf(y):
        y = np.asarray(y, dtype=float)[..., None]
        return (weights * special.ndtr((y - means) / sigmas)).sum(axis=-1)

    return Transform1D(
        DomainKind.REAL_LINE,
        pdf=pdf,
        cdf_core=cdf,
        name="gaussian-mixture",
        params={
            "means": means.tolist(),
            "sigmas": sigmas.tolist(),
            "weights": weights.tolist(),
        },
        bracket=(float(means.min() - sigmas.max()), float(means.max() + sigmas.max())),
    )


def _beta_const(alpha):
    return math.gamma(2 * alpha) / math.gamma(alpha) ** 2


def beta_symmetric(alpha, eta=0.0) -> Transform1D:
    """Symmetric beta density on [0, 1] with both shape parameters alpha."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c = _beta_const(alpha)

    def pdf(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return c * np.power(y, alpha - 1) * np.power(1 - y, alpha - 1)

    if alpha == 0.5:
        cdf = lambda y: 2.0 / math.pi * np.arcsin(np.sqrt(np.asarray(y, float)))
        inv = lambda p: np.sin(0.5 * math.pi * np.asarray(p, float)) ** 2
    elif alpha == 1.0:
        cdf = lambda y: np.asarray(y, dtype=float)
        inv = lambda p: np.asarray(p, dtype=float)
    elif alpha == 2.0:
        cdf = lambda y: (3.0 - 2.0 * np.asarray(y, float)) * np.asarray(y, float) ** 2
        inv = lambda p: special.betaincinv(2.0, 2.0, p)
    elif alpha == 3.0:
        cdf = lambda y: ((6.0 * np.asarray(y, float) - 15.0) * np.asarray(y, float) + 10.0) * np.asarray(y, float) ** 3
        inv = lambda p: special.betaincinv(3.0, 3.0, p)
    else:
        cdf = lambda y: special.betainc(alpha, alpha, y)
        inv = lambda p: special.betaincinv(alpha, alpha, p)

    return Transform1D(
        DomainKind.UNIT_INTERVAL,
        pdf=pdf,
        cdf_core=cdf,
        eta=eta,
        cdf_inverse=inv,
        name="beta",
        params={"alpha": alpha},
    )


def uniform_unit(eta=0.0) -> Transform1D:
    return Transform1D(
        DomainKind.UNIT_INTERVAL,
        pdf=lambda y: np.ones_like(np.asarray(y, dtype=float)),
        cdf_core=lambda y: np.asarray(y, dtype=float),
        eta=eta,
        cdf_inverse=lambda p: np.asarray(p, dtype=float),
        name="uniform",
    )


def uniform_torus() -> Transform1D:
    return Transform1D(
        DomainKind.TORUS,
        pdf=lambda y: np.ones_like(np.asarray(y, dtype=float)),
        cdf_core=lambda y: np.asarray(y, dtype=float) + 0.5,
        cdf_inverse=lambda p: np.asarray(p, dtype=float) - 0.5,
        name="uniform-torus",
    )


def beta_torus(alpha) -> Transform1D:
    """Symmetric beta density shifted by -1/2 onto the torus."""
    inner = beta_symmetric(alpha)
    return Transform1D(
        DomainKind.TORUS,
        pdf=lambda y: inner.pdf(np.asarray(y, dtype=float) + 0.5),
        cdf_core=lambda y: inner.cdf_core(np.asarray(y, dtype=float) + 0.5),
        cdf_inverse=lambda p: np.asarray(inner.cdf_inverse(p), dtype=float) - 0.5,
        name="beta-torus",
        params={"alpha": alpha},
    )


def tabulated_density(source, domain=DomainKind.UNIT_INTERVAL) -> Transform1D:
    """Density given as tabulated (y, rho(y)) pairs, e.g. from a CSV file.

    The CDF is the monotone (PCHIP) interpolant of the cumulative trapezoid
    integral of the table, rescaled so the total mass is exactly one.
    """
    from scipy.interpolate import PchipInterpolator

    if isinstance(source, (str, bytes)) or hasattr(source, "read"):
        rows = []
        fh = open(source) if isinstance(source, (str, bytes)) else source
        with fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip() or row[0].lstrip()[0] == "#":
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header line
        ys, rho = map(np.asarray, zip(*rows))
    else:
        ys, rho = (np.asarray(a, dtype=float) for a in source)
    order = np.argsort(ys)
    ys, rho = ys[order], rho[order]
    if np.any(rho < 0):
        raise ValueError("density values must be nonnegative")
    from scipy.integrate import cumulative_trapezoid

    cum = np.concatenate([[0.0], cumulative_trapezoid(rho, ys)])
    if cum[-1] <= 0:
        raise ValueError("tabulated density has zero mass")
    rho = rho / cum[-1]
    cum = cum / cum[-1]
    cum = np.maximum.accumulate(cum)
    cdf_interp = PchipInterpolator(ys, cum)
    pdf_interp = PchipInterpolator(ys, rho)

    def cdf(y):
        return np.clip(cdf_interp(np.clip(y, ys[0], ys[-1])), 0.0, 1.0)

    def pdf(y):
        return np.clip(pdf_interp(np.clip(y, ys[0], ys[-1])), 0.0, None)

    return Transform1D(
        domain,
        pdf=pdf,
        cdf_core=cdf,
        name="tabulated",
        bracket=(float(ys[0]), float(ys[-1])),
    )


_BUILTINS = {
    "normal": standard_normal,
    "cauchy": cauchy,
    "laplace": laplace,
    "exponential": exponential,
    "mixture": gaussian_mixture,
    "beta": beta_symmetric,
    "uniform": uniform_unit,
    "uniform-torus": uniform_torus,
    "beta-torus": beta_torus,
}


def density_by_name(name, **params) -> Transform1D:
    """Look up a built-in density constructor by name."""
    if name not in _BUILTINS:
        raise ValueError(
            f"unknown density {name!r}; available: {sorted(_BUILTINS)}"
        )
    return _BUILTINS[name](**params)
