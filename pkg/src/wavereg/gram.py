"""Gram matrices of the periodized wavelet system.

On the full torus the system is semi-orthogonal across levels, so the Gram
matrix is block diagonal with one circulant block per level; the blocks come
from exact rational correlations of the mother wavelet.  Restricting the
inner products to [-1/2 + eta, 1/2] (the extension setting on the unit
interval) only subtracts exactly computable integrals over the boundary
strip [-1/2, -1/2 + eta].
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import ceil, floor
from typing import NamedTuple

import numpy as np

from .basis import IndexSet
from .splines import PiecewisePolynomial, chui_wang_wavelet

__all__ = [
    "wavelet_correlations",
    "level_gram",
    "gram_torus",
    "gram_restricted",
    "GramResult",
]


@lru_cache(maxsize=None)
def wavelet_correlations(m: int):
    """Exact correlations c_tau = int psi(x) psi(x - tau) dx, |tau| <= 2m-2."""
    psi = chui_wang_wavelet(m)
    out = {}
    for tau in range(2 * m - 1):
        val = (psi * psi.affine_arg(1, -tau)).integrate()
        out[tau] = val
        out[-tau] = val
    return out


@lru_cache(maxsize=None)
def _level_row(m: int, j: int):
    """First row of the level-j periodized Gram circulant, exact rationals."""
    size = 2**j
    row = [Fraction(0)] * size
    for tau, val in wavelet_correlations(m).items():
        row[tau % size] += val
    return tuple(row)


def level_gram(m: int, j: int) -> np.ndarray:
    """Same-level Gram of the periodized wavelets (the constant for j = -1).

    The 2^{j/2} normalization makes the matrix scale-free: entries depend
    only on k - k' mod 2^j.
    """
    if j == -1:
        return np.ones((1, 1))
    row = np.array([float(v) for v in _level_row(m, j)])
    idx = np.arange(2**j)
    return row[(idx[:, None] - idx[None, :]) % 2**j]


def gram_torus(index_set: IndexSet, m: int) -> np.ndarray:
    """Full-torus Gram of a one-dimensional index set (block diagonal)."""
    if index_set.d != 1:
        raise ValueError("torus Gram assembly is one-dimensional")
    N = len(index_set)
    G = np.zeros((N, N))
    for blk in index_set.blocks:
        j = blk.j_active[0] if blk.u else -1
        sl = slice(blk.start, blk.start + blk.size)
        G[sl, sl] = level_gram(m, j)
    return G


# ---------------------------------------------------------------------------
# Boundary-strip corrections
# ---------------------------------------------------------------------------


def _strip_restriction(m, j, k, a: Fraction, b: Fraction):
    """Unnormalized periodized wavelet sum_l psi(2^j (x+l) - k) on [a, b].

    Returns None when the support does not meet the strip.
    """
    psi = chui_wang_wavelet(m)
    supp = 2 * m - 1
    lo = Fraction(k, 2**j) - b
    hi = Fraction(k + supp, 2**j) - a
    total = None
    for l in range(floor(lo) + 1, ceil(hi)):
        piece = psi.affine_arg(2**j, 2**j * l - k)
        lo_p = max(a, piece.knots[0])
        hi_p = min(b, piece.knots[-1])
        if hi_p <= lo_p:
            continue
        piece = piece.restrict(a, b)
        total = piece if total is None else total + piece
    return total


class GramResult(NamedTuple):
    matrix: np.ndarray
    eig_min: float
    eig_max: float


def gram_restricted(index_set: IndexSet, m: int, eta) -> GramResult:
    """Gram matrix of the basis restricted to [-1/2 + eta, 1/2].

    Entries are exact piecewise-polynomial integrals (times the float
    2^{(j+j')/2} normalization); the extremal eigenvalues come from a dense
    symmetric eigensolver.
    """
    if index_set.d != 1:
        raise ValueError("the restricted Gram study is one-dimensional")
    eta = Fraction(eta)
    if not 0 <= eta < 1:
        raise ValueError("eta must lie in [0, 1)")
    G = gram_torus(index_set, m)
    if eta > 0:
        a = Fraction(-1, 2)
        b = a + eta
        levels = []  # (column, level j, strip restriction)
        for blk in index_set.blocks:
            j = blk.j_active[0] if blk.u else -1
            for k in range(blk.size):
                if j == -1:
                    rep = PiecewisePolynomial([a, b], [[Fraction(1)]])
                else:
                    rep = _strip_restriction(m, j, k, a, b)
                if rep is not None:
                    levels.append((blk.start + k, j, rep))
        for idx_p, (p, jp, rp) in enumerate(levels):
            for q, jq, rq in levels[idx_p:]:
                corr = (rp * rq).integrate(a, b)
                if corr == 0:
                    continue
                scale = 2.0 ** ((max(jp, 0) + max(jq, 0)) / 2.0)
                val = scale * float(corr)
                G[p, q] -= val
                if p != q:
                    G[q, p] -= val
    eigs = np.linalg.eigvalsh(G)
    return GramResult(G, float(eigs[0]), float(eigs[-1]))
