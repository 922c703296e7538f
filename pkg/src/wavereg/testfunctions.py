"""Analytic test functions used by the experiment harness."""

from __future__ import annotations

import numpy as np

__all__ = ["TEST_FUNCTIONS", "test_function", "default_densities"]


def _as2d(Y):
    Y = np.asarray(Y, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def gauss_bump(Y):
    """exp(-||y||^2), any dimension."""
    return np.exp(-np.sum(_as2d(Y) ** 2, axis=1))


def torus_poly(Y):
    """Product of (y_i - 1/2)^3 (y_i + 1/2)^3 on the torus."""
    Y = _as2d(Y)
    return np.prod((Y - 0.5) ** 3 * (Y + 0.5) ** 3, axis=1)


def cube_poly(Y):
    """y^3 on the unit interval (one-dimensional)."""
    Y = _as2d(Y)
    if Y.shape[1] != 1:
        raise ValueError("the cubic test function is one-dimensional")
    return Y[:, 0] ** 3


def exp_1d(Y):
    """exp(y) on the unit interval (one-dimensional)."""
    Y = _as2d(Y)
    if Y.shape[1] != 1:
        raise ValueError("the exponential test function is one-dimensional")
    return np.exp(Y[:, 0])


def mixed_8d(Y):
    """8-dimensional mix of smooth, kink and interaction terms; y_5 > 0.

    Sensitivity shares of the nonzero terms (exact, via one-dimensional
    quadrature): S({1})=0.1065, S({3})=0.0893, S({4})=0.0588, S({5})=0.2872,
    S({6})=0.0998, S({7})=0.0677, S({1,5})=0.2908; y_2 and y_8 are inert.
    """
    Y = _as2d(Y)
    if Y.shape[1] != 8:
        raise ValueError("this test function is eight-dimensional")
    y1, y3, y4, y5, y6, y7 = (Y[:, i] for i in (0, 2, 3, 4, 5, 6))
    return (
        0.2 * y1**2
        + 0.5 * np.cos(2 * np.pi * y3)
        + np.exp(-(y4**2))
        + np.sqrt(y5)
        + 30.0 * y6**3 * (1.0 - y6) ** 2
        + 0.5 * np.abs(4.0 * y7 - 2.0)
        + 5.0 * np.exp(-(y1**2) - y5**2)
    )


TEST_FUNCTIONS = {
    "gauss": {"fn": gauss_bump, "d": None},
    "torus-poly": {"fn": torus_poly, "d": None},
    "cube": {"fn": cube_poly, "d": 1},
    "exp": {"fn": exp_1d, "d": 1},
    "mixed8": {"fn": mixed_8d, "d": 8},
}

# density specs matching how each test function is sampled in the experiments
_DEFAULT_DENSITIES = {
    "gauss": ["normal"],
    "torus-poly": ["uniform-torus"],
    "cube": ["uniform"],
    "exp": ["uniform"],
    "mixed8": [
        "normal",
        "laplace",
        "cauchy",
        "mixture",
        "exponential",
        "uniform",
        "beta:alpha=0.5",
        "uniform",
    ],
}


def test_function(name):
    if name not in TEST_FUNCTIONS:
        raise KeyError(
            f"unknown test function {name!r}; available: {sorted(TEST_FUNCTIONS)}"
        )
    return TEST_FUNCTIONS[name]["fn"]


def default_densities(name, d):
    spec = _DEFAULT_DENSITIES[name]
    if len(spec) == 1:
        return spec * d
    if len(spec) != d:
        raise ValueError(f"{name} requires dimension {len(spec)}")
    return list(spec)
