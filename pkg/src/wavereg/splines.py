"""Exact cardinal B-splines, Chui-Wang spline wavelets and their iterated
antiderivatives.

Everything here is computed in rational arithmetic on a dyadic knot grid, so
that normalization, vanishing moments and the integer zeros of the iterated
antiderivative hold exactly.  Floating point only enters when a piecewise
polynomial is compiled for fast vectorized evaluation.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

__all__ = [
    "PiecewisePolynomial",
    "CompiledPiecewise",
    "bspline",
    "chui_wang_coefficients",
    "chui_wang_wavelet",
    "psi_m",
]


def _poly_eval(coeffs, t):
    """Horner evaluation of sum_c coeffs[c] * t**c."""
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * t + c
    return acc


def _poly_shift(coeffs, h):
    """Recenter p(t) = sum coeffs[c] t^c as a polynomial in (t - (-h))...

    Returns coefficients of q with q(s) = p(s + h).
    """
    # Synthetic Taylor shift: repeatedly divide by (s) after substituting.
    out = list(coeffs)
    n = len(out)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] = out[j] + h * out[j + 1]
    return tuple(out)


class PiecewisePolynomial:
    """Piecewise polynomial with rational knots and coefficients.

    On the piece [knots[i], knots[i+1]) the value is
    ``sum_c pieces[i][c] * (x - knots[i])**c``.  The value is 0 left of the
    first knot and ``tail`` (usually 0) right of the last knot.  An interior
    knot belongs to its right piece; the two support endpoints evaluate to
    the outside values (0 and ``tail``), matching the open-support reading
    of the box spline.
    """

    __slots__ = ("knots", "pieces", "tail", "_compiled")

    def __init__(self, knots, pieces, tail=Fraction(0)):
        knots = tuple(Fraction(k) for k in knots)
        if len(knots) != len(pieces) + 1:
            raise ValueError("need len(knots) == len(pieces) + 1")
        if any(a >= b for a, b in zip(knots, knots[1:])):
            raise ValueError("knots must be strictly increasing")
        self.knots = knots
        self.pieces = tuple(tuple(Fraction(c) for c in p) for p in pieces)
        self.tail = Fraction(tail)
        self._compiled = None

    # -- basic queries ---------------------------------------------------

    @property
    def support(self):
        return (self.knots[0], self.knots[-1])

    @property
    def degree(self):
        return max(len(p) for p in self.pieces) - 1

    def __call__(self, x):
        if isinstance(x, (np.ndarray, list)):
            return self.compiled()(np.asarray(x, dtype=float))
        xf = Fraction(x) if isinstance(x, (Fraction, int)) else x
        exact = isinstance(xf, Fraction)
        if xf <= self.knots[0]:
            return Fraction(0) if exact else 0.0
        if xf >= self.knots[-1]:
            return self.tail if exact else float(self.tail)
        i = bisect_right(self.knots, xf) - 1
        return _poly_eval(self.pieces[i], xf - self.knots[i])

    # -- algebra ---------------------------------------------------------

    def scale(self, c):
        c = Fraction(c)
        return PiecewisePolynomial(
            self.knots,
            [[c * a for a in p] for p in self.pieces],
            tail=c * self.tail,
        )

    def __neg__(self):
        return self.scale(-1)

    def affine_arg(self, a, b):
        """The function x -> self(a*x + b) for rational a > 0, b."""
        a, b = Fraction(a), Fraction(b)
        if a <= 0:
            raise ValueError("only positive argument scalings supported")
        new_knots = [(k - b) / a for k in self.knots]
        new_pieces = []
        for coeffs in self.pieces:
            # t - k_i = a * (x - (k_i - b)/a), so multiply c_j by a**j
            new_pieces.append([c * a**j for j, c in enumerate(coeffs)])
        return PiecewisePolynomial(new_knots, new_pieces, tail=self.tail)

    def _piece_at(self, x):
        """Coefficients about x for the piece containing [x, next knot)."""
        if x < self.knots[0] or x >= self.knots[-1]:
            return (self.tail,) if x >= self.knots[-1] else (Fraction(0),)
        i = bisect_right(self.knots, x) - 1
        return _poly_shift(self.pieces[i], x - self.knots[i])

    def __add__(self, other):
        if not isinstance(other, PiecewisePolynomial):
            return NotImplemented
        cut = sorted(set(self.knots) | set(other.knots))
        pieces = []
        for a in cut[:-1]:
            pa = self._piece_at(a)
            pb = other._piece_at(a)
            n = max(len(pa), len(pb))
            pa = pa + (Fraction(0),) * (n - len(pa))
            pb = pb + (Fraction(0),) * (n - len(pb))
            pieces.append([x + y for x, y in zip(pa, pb)])
        return PiecewisePolynomial(
            cut, pieces, tail=self.tail + other.tail
        ).trimmed()

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, PiecewisePolynomial):
            return NotImplemented
        cut = sorted(set(self.knots) | set(other.knots))
        pieces = []
        for a in cut[:-1]:
            pa = self._piece_at(a)
            pb = other._piece_at(a)
            prod = [Fraction(0)] * (len(pa) + len(pb) - 1)
            for i, x in enumerate(pa):
                if x == 0:
                    continue
                for j, y in enumerate(pb):
                    prod[i + j] += x * y
            pieces.append(prod)
        return PiecewisePolynomial(
            cut, pieces, tail=self.tail * other.tail
        ).trimmed()

    def mul_monomial(self, beta):
        """Multiply by x**beta exactly."""
        mono = PiecewisePolynomial(
            [self.knots[0], self.knots[-1]],
            [_poly_shift((Fraction(0),) * beta + (Fraction(1),), self.knots[0])],
        )
        return self * mono

    def trimmed(self):
        """Drop leading/trailing identically-zero pieces."""
        pieces = list(self.pieces)
        knots = list(self.knots)
        while len(pieces) > 1 and all(c == 0 for c in pieces[0]):
            pieces.pop(0)
            knots.pop(0)
        while (
            len(pieces) > 1
            and all(c == 0 for c in pieces[-1])
            and self.tail == 0
        ):
            pieces.pop()
            knots.pop()
        if knots == list(self.knots):
            return self
        return PiecewisePolynomial(knots, pieces, tail=self.tail)

    # -- calculus --------------------------------------------------------

    def derivative(self):
        pieces = []
        for coeffs in self.pieces:
            d = [j * c for j, c in enumerate(coeffs)][1:]
            pieces.append(d or [Fraction(0)])
        return PiecewisePolynomial(self.knots, pieces)

    def antiderivative(self):
        """The function x -> integral_{-inf}^x self(t) dt.

        Requires value 0 left of the support.  The accumulated value past the
        last knot becomes the new tail constant.
        """
        pieces = []
        acc = Fraction(0)
        for i, coeffs in enumerate(self.pieces):
            anti = [acc] + [c / (j + 1) for j, c in enumerate(coeffs)]
            pieces.append(anti)
            acc = _poly_eval(anti, self.knots[i + 1] - self.knots[i])
        return PiecewisePolynomial(self.knots, pieces, tail=acc)

    def integrate(self, a=None, b=None):
        """Exact definite integral over [a, b] (defaults: full support)."""
        a = self.knots[0] if a is None else Fraction(a)
        b = self.knots[-1] if b is None else Fraction(b)
        if b < a:
            return -self.integrate(b, a)
        if self.tail != 0 and b > self.knots[-1]:
            raise ValueError("unbounded integral: nonzero tail")
        total = Fraction(0)
        for i, coeffs in enumerate(self.pieces):
            lo = max(a, self.knots[i])
            hi = min(b, self.knots[i + 1])
            if hi <= lo:
                continue
            anti = [Fraction(0)] + [c / (j + 1) for j, c in enumerate(coeffs)]
            total += _poly_eval(anti, hi - self.knots[i]) - _poly_eval(
                anti, lo - self.knots[i]
            )
        return total

    def moment(self, beta):
        """Exact integral of x**beta * self(x) over the support."""
        return self.mul_monomial(beta).integrate()

    def restrict(self, a, b):
        """The same function on [a, b], zero elsewhere (a < b rational)."""
        a, b = Fraction(a), Fraction(b)
        a = max(a, self.knots[0])
        b = min(b, self.knots[-1])
        if b <= a:
            return PiecewisePolynomial([a, a + 1], [[Fraction(0)]])
        cut = [a] + [k for k in self.knots if a < k < b] + [b]
        pieces = [self._piece_at(lo) for lo in cut[:-1]]
        return PiecewisePolynomial(cut, pieces)

    # -- float machinery ---------------------------------------------------

    def compiled(self):
        if self._compiled is None:
            self._compiled = CompiledPiecewise(self)
        return self._compiled

    def extremum(self):
        """Maximum of |self| over the support, from the exact pieces.

        Critical points are found as real roots of the per-piece derivative
        (in floating point); values are evaluated exactly at knots and to
        float accuracy at interior critical points.
        """
        best = max(abs(float(self(k))) for k in self.knots)
        for i, coeffs in enumerate(self.pieces):
            dcoef = [float(j * c) for j, c in enumerate(coeffs)][1:]
            if len(dcoef) <= 1:
                continue
            roots = np.roots(dcoef[::-1])
            width = float(self.knots[i + 1] - self.knots[i])
            for r in roots:
                if abs(r.imag) < 1e-12 and 0.0 < r.real < width:
                    val = abs(_poly_eval([float(c) for c in coeffs], r.real))
                    best = max(best, val)
        return best

    def to_json_dict(self):
        """Debug dump: knots and coefficients as exact strings."""
        return {
            "knots": [str(k) for k in self.knots],
            "pieces": [[str(c) for c in p] for p in self.pieces],
            "tail": str(self.tail),
        }


class CompiledPiecewise:
    """Float snapshot of a PiecewisePolynomial for vectorized evaluation."""

    def __init__(self, pp: PiecewisePolynomial):
        self.knots = np.array([float(k) for k in pp.knots])
        deg = pp.degree
        self.coeffs = np.zeros((len(pp.pieces), deg + 1))
        for i, p in enumerate(pp.pieces):
            for j, c in enumerate(p):
                self.coeffs[i, j] = float(c)
        self.tail = float(pp.tail)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        out[x >= self.knots[-1]] = self.tail
        inside = (x > self.knots[0]) & (x < self.knots[-1])
        ii = np.searchsorted(self.knots, x[inside], side="right") - 1
        t = x[inside] - self.knots[ii]
        acc = np.zeros_like(t)
        for j in range(self.coeffs.shape[1] - 1, -1, -1):
            acc = acc * t + self.coeffs[ii, j]
        out[inside] = acc
        return out[0] if scalar else out


# ---------------------------------------------------------------------------
# Cardinal B-splines and Chui-Wang wavelets
# ---------------------------------------------------------------------------


def _check_order(m):
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError(f"wavelet order must be a positive integer, got {m!r}")


@lru_cache(maxsize=None)
def bspline(m: int) -> PiecewisePolynomial:
    """Cardinal B-spline of order m, centered at 0 with support (-m/2, m/2).

    Built by exact repeated integration of the order-1 box, so the
    normalization ``integral B_m = 1`` is exact.
    """
    _check_order(m)
    if m == 1:
        return PiecewisePolynomial(
            [Fraction(-1, 2), Fraction(1, 2)], [[Fraction(1)]]
        )
    prev = bspline(m - 1)
    anti = prev.antiderivative()
    # B_m(x) = G(x + 1/2) - G(x - 1/2) with G the antiderivative of B_{m-1}
    return (
        anti.affine_arg(1, Fraction(1, 2)) - anti.affine_arg(1, Fraction(-1, 2))
    ).trimmed()


@lru_cache(maxsize=None)
def chui_wang_coefficients(m: int) -> tuple:
    """Rational wavelet mask (q_0, ..., q_{3m-2}) of the order-m wavelet."""
    _check_order(m)
    b2m = bspline(2 * m)
    qs = []
    for n in range(3 * m - 1):
        s = Fraction(0)
        for k in range(m + 1):
            s += comb(m, k) * b2m(Fraction(n + 1 - k - m))
        qs.append(Fraction((-1) ** n, 2 ** (m - 1)) * s)
    return tuple(qs)


@lru_cache(maxsize=None)
def chui_wang_wavelet(m: int) -> PiecewisePolynomial:
    """Chui-Wang wavelet of order m: piecewise degree m-1, support in
    [0, 2m-1], knots on the half-integer grid, m vanishing moments."""
    _check_order(m)
    q = chui_wang_coefficients(m)
    bm = bspline(m)
    half_m = Fraction(m, 2)
    acc = None
    for n, qn in enumerate(q):
        term = bm.affine_arg(2, -(n + half_m)).scale(qn)
        acc = term if acc is None else acc + term
    return acc.trimmed()


@lru_cache(maxsize=None)
def psi_m(m: int) -> PiecewisePolynomial:
    """m-fold antiderivative of the order-m wavelet.

    Equals integral_{-inf}^x psi(t) (x-t)^(m-1)/(m-1)! dt; supported on
    [0, 2m-1] and exactly zero at every integer.
    """
    _check_order(m)
    f = chui_wang_wavelet(m)
    for step in range(m):
        f = f.antiderivative()
        # each vanishing moment kills the constant past the support
        assert f.tail == 0, "antiderivative tail must vanish"
        f = f.trimmed()
    return f
