"""Kernel density estimation and the data-driven CDF transforms built from it.

The estimated transform is the empirical mean of kernel antiderivatives,
shifted to [-1/2, 1/2].  Bandwidths come from the normal-reference rule or
from the two-stage direct plug-in selector; on [0, 1] a compactly supported
quadratic B-spline kernel keeps the boundary behavior under control.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .splines import bspline
from .transforms import DomainKind

__all__ = [
    "KernelSpec",
    "EstimatedTransform",
    "gaussian_kernel",
    "bspline_kernel",
    "bandwidth_rot",
    "bandwidth_dpi",
    "psi_r_hat",
    "boundary_kde",
    "estimate_transform",
    "BandwidthFallbackWarning",
]


class BandwidthFallbackWarning(UserWarning):
    """Raised to a record when the plug-in selector hits a sign violation."""


# probabilists' Hermite polynomials He_r, r = 0..6
_HERMITE = {
    0: (1.0,),
    1: (0.0, 1.0),
    2: (-1.0, 0.0, 1.0),
    3: (0.0, -3.0, 0.0, 1.0),
    4: (3.0, 0.0, -6.0, 0.0, 1.0),
    5: (0.0, 15.0, 0.0, -10.0, 0.0, 1.0),
    6: (-15.0, 0.0, 45.0, 0.0, -15.0, 0.0, 1.0),
}


@dataclass
class KernelSpec:
    """Smoothing kernel with the quantities the bandwidth rules need."""

    name: str
    pdf: callable
    cdf: callable  # antiderivative, int_{-inf}^y k
    l2_norm_sq: float
    second_moment: float
    support_halfwidth: float  # inf for the Gaussian
    deriv: callable = None  # (y, r) -> k^(r)(y), r <= 6

    def derivative(self, y, r):
        if r == 0:
            return self.pdf(y)
        if self.deriv is None:
            raise ValueError(f"kernel {self.name!r} has no derivative evaluator")
        return self.deriv(y, r)


def gaussian_kernel() -> KernelSpec:
    def pdf(y):
        return np.exp(-0.5 * np.asarray(y, dtype=float) ** 2) / math.sqrt(2 * math.pi)

    def deriv(y, r):
        if r > 6:
            raise ValueError("derivatives implemented for r <= 6")
        y = np.asarray(y, dtype=float)
        coeffs = _HERMITE[r]
        he = np.full_like(y, coeffs[-1])
        for c in coeffs[-2::-1]:
            he *= y
            he += c
        he *= (-1.0) ** r / math.sqrt(2 * math.pi)
        he *= np.exp(-0.5 * y * y)
        return he

    return KernelSpec(
        name="gaussian",
        pdf=pdf,
        cdf=special.ndtr,
        l2_norm_sq=1.0 / (2.0 * math.sqrt(math.pi)),
        second_moment=1.0,
        support_halfwidth=math.inf,
        deriv=deriv,
    )


def bspline_kernel(order: int = 3) -> KernelSpec:
    """Compactly supported B-spline kernel (default: quadratic, order 3)."""
    b = bspline(order)
    pdf = b.compiled()
    cdf = b.antiderivative().compiled()
    return KernelSpec(
        name=f"bspline{order}",
        pdf=pdf,
        cdf=cdf,
        l2_norm_sq=float((b * b).integrate()),
        second_moment=float(b.moment(2)),
        support_halfwidth=order / 2.0,
    )


_KERNELS = {"gaussian": gaussian_kernel, "bspline3": bspline_kernel}


# ---------------------------------------------------------------------------
# Bandwidth selection
# ---------------------------------------------------------------------------


def _robust_scale(Y):
    Y = np.asarray(Y, dtype=float)
    std = np.std(Y, ddof=1)
    q25, q75 = np.quantile(Y, [0.25, 0.75])  # linear-interpolation quantiles
    iqr = q75 - q25
    candidates = [s for s in (std, iqr / 1.34) if s > 0]
    if not candidates:
        raise ValueError("degenerate sample: all values identical")
    return min(candidates)


def bandwidth_rot(Y) -> float:
    """Normal-reference rule 1.06 * min(std, IQR/1.34) * M^(-1/5)."""
    Y = np.asarray(Y, dtype=float)
    if Y.size < 2:
        raise ValueError("need at least two samples")
    return 1.06 * _robust_scale(Y) * Y.size ** (-0.2)


def psi_r_hat(Y, g, r, kernel: KernelSpec = None) -> float:
    """Double-sum estimate of the integrated density derivative functional.

    (1/(M^2 g^(r+1))) * sum_ij k^(r)((y_i - y_j)/g), diagonal included.
    """
    if g <= 0:
        raise ValueError("pilot bandwidth must be positive")
    kernel = kernel or gaussian_kernel()
    Y = np.asarray(Y, dtype=float).ravel()
    M = Y.size
    total = float(M) * float(kernel.derivative(0.0, r))  # diagonal
    chunk = 1024  # ~1M-element blocks stay cache/RAM friendly
    for i0 in range(0, M, chunk):
        i1 = min(i0 + chunk, M)
        diag = kernel.derivative((Y[i0:i1, None] - Y[None, i0:i1]) / g, r)
        total += 2.0 * float(np.triu(diag, 1).sum())
        for j0 in range(i1, M, chunk):
            j1 = min(j0 + chunk, M)
            rect = kernel.derivative((Y[i0:i1, None] - Y[None, j0:j1]) / g, r)
            total += 2.0 * float(rect.sum())
    return total / (M * M * g ** (r + 1))


def bandwidth_dpi(Y, kernel: KernelSpec = None) -> float:
    """Two-stage direct plug-in bandwidth for real-line data.

    Falls back to the normal-reference rule (with a warning record) when a
    finite-sample sign violation makes an intermediate root undefined.
    """
    kernel = kernel or gaussian_kernel()
    Y = np.asarray(Y, dtype=float)
    M = Y.size
    if M < 4:
        raise ValueError("need at least four samples")
    s = _robust_scale(Y)
    mu2 = kernel.second_moment

    psi8 = 105.0 / (32.0 * math.sqrt(math.pi) * s**9)
    g1 = (-2.0 * float(kernel.derivative(0.0, 6)) / (mu2 * psi8 * M)) ** (1.0 / 9.0)
    psi6 = psi_r_hat(Y, g1, 6, kernel)
    if psi6 >= 0:
        warnings.warn(
            "plug-in stage 2 sign violation; using the normal-reference rule",
            BandwidthFallbackWarning,
        )
        return bandwidth_rot(Y)
    g2 = (-2.0 * float(kernel.derivative(0.0, 4)) / (mu2 * psi6 * M)) ** (1.0 / 7.0)
    psi4 = psi_r_hat(Y, g2, 4, kernel)
    if psi4 <= 0:
        warnings.warn(
            "plug-in stage 3 sign violation; using the normal-reference rule",
            BandwidthFallbackWarning,
        )
        return bandwidth_rot(Y)
    return (kernel.l2_norm_sq / (mu2**2 * psi4 * M)) ** 0.2


# ---------------------------------------------------------------------------
# Estimated transform
# ---------------------------------------------------------------------------


@dataclass
class EstimatedTransform:
    """CDF transform built from a kernel density estimate of the samples."""

    samples: np.ndarray
    sigma: float
    kernel: KernelSpec = field(default_factory=gaussian_kernel)
    domain: DomainKind = DomainKind.REAL_LINE
    omega: tuple = None  # effective support for the unit-interval case
    bandwidth_method: str = "fixed"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("bandwidth must be positive")
        self.samples = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if self.samples.size < 1:
            raise ValueError("need at least one sample")
        if self.domain is DomainKind.UNIT_INTERVAL and self.omega is None:
            w = self.kernel.support_halfwidth * self.sigma
            self.omega = (
                min(0.0, float(self.samples[0]) - w),
                max(1.0, float(self.samples[-1]) + w),
            )

    def _chunks(self, y, func):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y).ravel()
        out = np.zeros_like(y)
        M = self.samples.size
        chunk = max(1, int(2**22 // M))
        for i0 in range(0, y.size, chunk):
            blk = (y[i0 : i0 + chunk, None] - self.samples[None, :]) / self.sigma
            out[i0 : i0 + chunk] = func(blk).mean(axis=1)
        return out[0] if scalar else out

    def pdf(self, y):
        """Kernel density estimate at y."""
        return self._chunks(y, self.kernel.pdf) / self.sigma

    def transform(self, y):
        """Estimated CDF transform: mean kernel antiderivative minus 1/2."""
        return self._chunks(y, self.kernel.cdf) - 0.5

    def __call__(self, y):
        return self.transform(y)

    @property
    def range(self):
        return (-0.5, 0.5)

    def inverse(self, x):
        """Monotone root-finding inverse of the estimated transform."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if np.any((x < -0.5 - 1e-15) | (x > 0.5 + 1e-15)):
            raise ValueError("point outside the transform range")
        x = np.clip(x, -0.5, 0.5)
        if self.domain is DomainKind.UNIT_INTERVAL:
            lo, hi = self.omega
        else:
            w = 10.0 * self.sigma
            lo, hi = float(self.samples[0]) - w, float(self.samples[-1]) + w
            while self.transform(lo) > x.min() - 0.5e-15 and self.transform(lo) > -0.5 + 1e-16:
                lo -= 10.0 * self.sigma
            while self.transform(hi) < x.max() and self.transform(hi) < 0.5 - 1e-16:
                hi += 10.0 * self.sigma
        out = np.empty_like(x, dtype=float)
        for i, xi in np.ndenumerate(x):
            f = lambda y: float(self.transform(y)) - xi
            flo, fhi = f(lo), f(hi)
            if flo >= 0:
                out[i] = lo
            elif fhi <= 0:
                out[i] = hi
            else:
                out[i] = optimize.brentq(f, lo, hi, xtol=1e-13)
        return float(out[()]) if scalar else out

    def descriptor(self):
        return {
            "kind": "kde",
            "domain": self.domain.value,
            "kernel": self.kernel.name,
            "sigma": self.sigma,
            "bandwidth_method": self.bandwidth_method,
            "omega": list(self.omega) if self.omega else None,
            "samples": self.samples.tolist(),
        }

    @classmethod
    def from_descriptor(cls, doc):
        return cls(
            samples=np.asarray(doc["samples"], dtype=float),
            sigma=doc["sigma"],
            kernel=_KERNELS[doc["kernel"]](),
            domain=DomainKind(doc["domain"]),
            omega=tuple(doc["omega"]) if doc.get("omega") else None,
            bandwidth_method=doc.get("bandwidth_method", "fixed"),
        )


def boundary_kde(Y, sigma=None) -> EstimatedTransform:
    """Boundary-aware estimate for samples on [0, 1].

    Uses the compactly supported quadratic B-spline kernel; the estimated
    density may spill onto [omega_1, 0] and [1, omega_2], which periodizes a
    non-periodic function without an explicit extension margin.
    """
    Y = np.asarray(Y, dtype=float)
    if np.any((Y < 0.0) | (Y > 1.0)):
        raise ValueError("samples must lie in [0, 1]")
    if sigma is None:
        sigma = bandwidth_rot(Y)
        method = "rot"
    else:
        method = "fixed"
    return EstimatedTransform(
        samples=Y,
        sigma=float(sigma),
        kernel=bspline_kernel(3),
        domain=DomainKind.UNIT_INTERVAL,
        bandwidth_method=method,
    )


def estimate_transform(Y, domain: DomainKind, bandwidth="dpi") -> EstimatedTransform:
    """Fit a data-driven transform for one variable.

    ``bandwidth`` is "dpi", "rot" or a fixed positive number.  On the unit
    interval only "rot" and fixed values are available and the B-spline
    kernel is used.
    """
    Y = np.asarray(Y, dtype=float)
    if domain is DomainKind.UNIT_INTERVAL:
        if bandwidth == "dpi":
            raise ValueError("the plug-in selector is only defined on the real line")
        sigma = None if bandwidth == "rot" else float(bandwidth)
        est = boundary_kde(Y, sigma)
        est.bandwidth_method = bandwidth if isinstance(bandwidth, str) else "fixed"
        return est
    if domain is DomainKind.REAL_LINE:
        if bandwidth == "dpi":
            sigma = bandwidth_dpi(Y)
        elif bandwidth == "rot":
            sigma = bandwidth_rot(Y)
        else:
            sigma = float(bandwidth)
        return EstimatedTransform(
            samples=Y,
            sigma=sigma,
            kernel=gaussian_kernel(),
            domain=domain,
            bandwidth_method=bandwidth if isinstance(bandwidth, str) else "fixed",
        )
    raise ValueError(f"no kernel density estimator for domain {domain}")
