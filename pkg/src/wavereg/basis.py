"""Periodized tensor-product Chui-Wang basis on the torus and the
hyperbolic / ANOVA-truncated index sets that label its columns.

Dimensions are 1-based; a variable subset ``u`` is a sorted tuple of ints.
A level vector entry of -1 denotes the constant function in that direction,
and the level budget ``|j|_1 <= n`` counts only the nonnegative entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from math import floor

import numpy as np

from .splines import chui_wang_wavelet

__all__ = [
    "WaveletIndex",
    "IndexSet",
    "build_index_set",
    "anova_class",
    "eval_basis",
    "active_translates",
    "wavelet_evaluator",
    "level_values",
]


@dataclass(frozen=True)
class WaveletIndex:
    """Level/translation multi-index (j, k) of one tensor basis function."""

    j: tuple
    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "j", tuple(int(v) for v in self.j))
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        for ji, ki in zip(self.j, self.k):
            if ji < -1:
                raise ValueError(f"level entries must be >= -1, got {ji}")
            hi = 2**ji if ji >= 0 else 1
            if not 0 <= ki < hi:
                raise ValueError(f"translation {ki} out of range for level {ji}")


def anova_class(j) -> tuple:
    """Variable subset u = {i : j_i >= 0} of a level vector (1-based)."""
    return tuple(i + 1 for i, ji in enumerate(j) if ji >= 0)


def _level_vectors(order: int, budget: int):
    """All nonnegative level tuples of given length with sum <= budget,
    in lexicographic order."""
    if order == 0:
        yield ()
        return
    for head in range(budget + 1):
        for rest in _level_vectors(order - 1, budget - head):
            yield (head,) + rest


def _normalize_subsets(d, subsets):
    if subsets == "full":
        subsets = [
            u for r in range(d + 1) for u in combinations(range(1, d + 1), r)
        ]
    elif isinstance(subsets, (int, np.integer)):
        nu = int(subsets)
        subsets = [
            u for r in range(min(nu, d) + 1)
            for u in combinations(range(1, d + 1), r)
        ]
    else:
        seen = []
        for u in subsets:
            tu = tuple(sorted(int(i) for i in u))
            if len(set(tu)) != len(tu):
                raise ValueError(f"subset {u} has repeated entries")
            if any(i < 1 or i > d for i in tu):
                raise ValueError(f"subset {u} is not contained in 1..{d}")
            if tu not in seen:
                seen.append(tu)
        if () not in seen:
            raise ValueError("the subset collection must contain the empty set")
        subsets = seen
    return sorted(subsets, key=lambda u: (len(u), u))


@dataclass(frozen=True)
class _Block:
    """Columns of one level vector: a contiguous slab of translations."""

    u: tuple
    j_active: tuple
    start: int
    shape: tuple

    @property
    def size(self):
        out = 1
        for s in self.shape:
            out *= s
        return out


class IndexSet:
    """Ordered hyperbolic index set with its ANOVA partition.

    Ordering: subsets by (cardinality, lexicographic), levels lexicographic
    within a subset, translations lexicographic (row-major) within a level.
    """

    def __init__(self, d, level_budget, subsets="full"):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.d = int(d)
        self.subsets = _normalize_subsets(self.d, subsets)
        if isinstance(level_budget, (int, np.integer)):
            if level_budget < 0:
                raise ValueError("maximal level must be >= 0")
            self.level_budget = {
                r: int(level_budget)
                for r in sorted({len(u) for u in self.subsets})
            }
        else:
            self.level_budget = {int(r): int(n) for r, n in level_budget.items()}
        for u in self.subsets:
            if len(u) > 0 and len(u) not in self.level_budget:
                raise ValueError(f"no level budget for order {len(u)}")

        self.blocks = []
        self.partition = {}
        pos = 0
        for u in self.subsets:
            u_start = pos
            budget = self.level_budget.get(len(u), 0)
            for j_active in _level_vectors(len(u), budget):
                shape = tuple(2**ji for ji in j_active)
                blk = _Block(u, j_active, pos, shape)
                self.blocks.append(blk)
                pos += blk.size
            self.partition[u] = (u_start, pos)
        self.size = pos

    def __len__(self):
        return self.size

    def order_of(self, u):
        return self.level_budget.get(len(u), 0)

    def full_level(self, blk: _Block) -> tuple:
        j = [-1] * self.d
        for i, ji in zip(blk.u, blk.j_active):
            j[i - 1] = ji
        return tuple(j)

    def entries(self):
        """All wavelet indices in column order."""
        out = []
        for blk in self.blocks:
            j = self.full_level(blk)
            for flat in range(blk.size):
                k = [0] * self.d
                rem = flat
                for i, s in zip(reversed(blk.u), reversed(blk.shape)):
                    k[i - 1] = rem % s
                    rem //= s
                out.append(WaveletIndex(j, tuple(k)))
        return out

    def column_of(self, idx: WaveletIndex) -> int:
        j = tuple(idx.j)
        u = anova_class(j)
        j_active = tuple(j[i - 1] for i in u)
        for blk in self.blocks:
            if blk.u == u and blk.j_active == j_active:
                flat = 0
                for i, s in zip(blk.u, blk.shape):
                    flat = flat * s + idx.k[i - 1]
                return blk.start + flat
        raise KeyError(f"index {idx} not in the set")

    def partition_counts(self):
        return {u: b - a for u, (a, b) in self.partition.items()}

    # -- serialization ---------------------------------------------------

    def to_json_dict(self):
        return {
            "d": self.d,
            "level_budget": {str(r): n for r, n in self.level_budget.items()},
            "subsets": [list(u) for u in self.subsets],
            "entries": [[list(e.j), list(e.k)] for e in self.entries()],
        }

    def to_json(self, path=None):
        doc = json.dumps(self.to_json_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(doc)
        return doc

    @classmethod
    def from_json_dict(cls, doc):
        budgets = {int(r): int(n) for r, n in doc["level_budget"].items()}
        inst = cls(doc["d"], budgets, [tuple(u) for u in doc["subsets"]])
        if "entries" in doc:
            got = [[list(e.j), list(e.k)] for e in inst.entries()]
            if got != doc["entries"]:
                raise ValueError("entry list does not match the declared set")
        return inst


def build_index_set(d, n, subsets="full") -> IndexSet:
    """Hyperbolic index set of dimension d with level budget n.

    ``subsets`` is "full", a maximal interaction order, or an explicit
    collection of variable subsets containing the empty set.  ``n`` may be a
    single budget or a mapping from interaction order to budget.
    """
    return IndexSet(d, n, subsets)


# ---------------------------------------------------------------------------
# Evaluation of the periodized basis
# ---------------------------------------------------------------------------

_SQRT2_POW = {}


def _pow_sqrt2(j):
    if j not in _SQRT2_POW:
        _SQRT2_POW[j] = float(2.0 ** (j / 2.0))
    return _SQRT2_POW[j]


def wavelet_evaluator(m: int):
    """Compiled float evaluator of the order-m mother wavelet."""
    return chui_wang_wavelet(m).compiled()


def _wrap_torus(x):
    """Reduce to the fundamental domain [-1/2, 1/2)."""
    return x - np.floor(x + 0.5)


def psi_per_1d(m, j, k, x):
    """Periodized scalar wavelet value psi^per_{j,k}(x); j = -1 is the
    constant one."""
    if j == -1:
        return 1.0
    x = _wrap_torus(float(x))
    supp = 2 * m - 1
    psi = wavelet_evaluator(m)
    lo = k / 2**j - x
    hi = (k + supp) / 2**j - x
    total = 0.0
    for l in range(int(np.ceil(lo)), int(floor(hi)) + 1):
        total += psi(2**j * (x + l) - k)
    return _pow_sqrt2(j) * total


def eval_basis(m, idx: WaveletIndex, x) -> float:
    """Tensor-product periodized wavelet at a point of the torus."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[-1] != len(idx.j):
        raise ValueError("point dimension does not match the index")
    out = 1.0
    for ji, ki, xi in zip(idx.j, idx.k, x):
        out *= psi_per_1d(m, ji, ki, xi)
        if out == 0.0:
            break
    return out


def active_translates(m, j, x):
    """Translations k with psi^per_{j,k}(x) != 0, as a sorted list."""
    if j < 0:
        raise ValueError("active translates are defined for levels j >= 0")
    x = _wrap_torus(float(x))
    pos = 2.0**j * x
    psi = wavelet_evaluator(m)
    acc = {}
    for r in range(2 * m - 1):
        kk = int(floor(pos)) - r
        val = psi(pos - kk)
        k = kk % 2**j
        acc[k] = acc.get(k, 0.0) + val
    return sorted(k for k, v in acc.items() if v != 0.0)


def level_values(m, j, x):
    """Per-sample active translates and values of one wavelet level.

    For an array ``x`` of torus points returns integer matrix ``k`` and float
    matrix ``v``, both of shape (len(x), 2m-1), such that the periodized
    wavelet values at x[i] are accumulated over the pairs (k[i, r], v[i, r]).
    When 2^j < 2m-1 the same k may appear several times in a row; the
    contributions add.
    """
    x = _wrap_torus(np.asarray(x, dtype=float))
    if j == -1:
        return (
            np.zeros((len(x), 1), dtype=np.int64),
            np.ones((len(x), 1)),
        )
    psi = wavelet_evaluator(m)
    pos = (2.0**j) * x
    base = np.floor(pos).astype(np.int64)
    r = np.arange(2 * m - 1, dtype=np.int64)
    kk = base[:, None] - r[None, :]
    arg = pos[:, None] - kk
    vals = psi(arg.ravel()).reshape(arg.shape) * _pow_sqrt2(j)
    k = np.mod(kk, 2**j)
    return k, vals
