"""Index-set enumeration and periodized basis evaluation."""

import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from wavereg.basis import (
    IndexSet,
    WaveletIndex,
    active_translates,
    anova_class,
    build_index_set,
    eval_basis,
    level_values,
    psi_per_1d,
)
from wavereg.gram import _strip_restriction, level_gram
from wavereg.splines import chui_wang_wavelet


def brute_force_count(d, n):
    """Independent enumeration of the hyperbolic index set."""
    counts = {}
    for j in itertools.product(range(-1, n + 1), repeat=d):
        if sum(v for v in j if v >= 0) > n:
            continue
        u = tuple(i + 1 for i, v in enumerate(j) if v >= 0)
        ksize = 1
        for v in j:
            ksize *= 2**v if v >= 0 else 1
        counts[u] = counts.get(u, 0) + ksize
    return counts


def test_one_dimensional_count():
    assert len(build_index_set(1, 3, "full")) == 16


def test_three_dimensional_partition():
    s = build_index_set(3, 3, "full")
    counts = s.partition_counts()
    assert len(s) == 304
    assert counts[()] == 1
    assert all(counts[(i,)] == 15 for i in (1, 2, 3))
    assert all(counts[u] == 49 for u in ((1, 2), (1, 3), (2, 3)))
    assert counts[(1, 2, 3)] == 111


def test_constant_only():
    assert len(build_index_set(7, 5, [()])) == 1


@pytest.mark.parametrize("d,n", [(1, 5), (2, 4), (3, 3), (3, 5)])
def test_counts_match_brute_force(d, n):
    s = build_index_set(d, n, "full")
    assert s.partition_counts() == brute_force_count(d, n)


def test_anova_class_examples():
    assert anova_class((-1, -1, -1)) == ()
    assert anova_class((2, -1, 0)) == (1, 3)
    assert anova_class((0, 0)) == (1, 2)


def test_invalid_subsets_rejected():
    with pytest.raises(ValueError):
        build_index_set(2, 3, [(), (3,)])  # dimension out of range
    with pytest.raises(ValueError):
        build_index_set(2, 3, [(1,)])  # empty set missing
    with pytest.raises(ValueError):
        WaveletIndex((1,), (5,))  # translation out of range


def test_entry_order_is_column_order():
    s = build_index_set(2, 3, "full")
    entries = s.entries()
    assert [s.column_of(e) for e in entries] == list(range(len(s)))
    # partition slices are contiguous and ordered by (order, subset)
    subsets = list(s.partition)
    assert subsets == sorted(subsets, key=lambda u: (len(u), u))


def test_json_roundtrip():
    s = build_index_set(3, 2, 2)
    doc = json.loads(s.to_json())
    t = IndexSet.from_json_dict(doc)
    assert len(t) == len(s)
    assert t.entries() == s.entries()


def test_constant_level_is_one_everywhere():
    idx = WaveletIndex((-1, -1), (0, 0))
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.uniform(-0.5, 0.5, 2)
        assert eval_basis(3, idx, x) == 1.0


def test_periodicity_and_shift_covariance():
    rng = np.random.default_rng(1)
    for m in (1, 2, 3):
        for _ in range(20):
            x = float(rng.uniform(-0.5, 0.5))
            j = int(rng.integers(0, 5))
            k = int(rng.integers(0, 2**j))
            v = psi_per_1d(m, j, k, x)
            assert abs(v - psi_per_1d(m, j, k, x + 1.0)) < 1e-12
            shifted = (x - k / 2**j + 0.5) % 1.0 - 0.5
            assert abs(v - psi_per_1d(m, j, 0, shifted)) < 1e-9


def test_eval_against_summed_shift_oracle():
    # independent path: exact-spline evaluation of every integer shift
    rng = np.random.default_rng(7)
    for m in (2, 3):
        w = chui_wang_wavelet(m)
        worst = 0.0
        for _ in range(500):
            x = float(rng.uniform(-0.5, 0.5))
            j = int(rng.integers(0, 6))
            k = int(rng.integers(0, 2**j))
            direct = 2.0 ** (j / 2) * sum(
                float(w(2.0**j * (x + l) - k)) for l in range(-8, 9)
            )
            worst = max(worst, abs(direct - psi_per_1d(m, j, k, x)))
        assert worst < 1e-14 * 2.0**3  # scaled by the 2^{j/2} magnitudes


def test_active_translates():
    rng = np.random.default_rng(3)
    for j in range(0, 6):
        x = float(rng.uniform(-0.5, 0.5))
        act = active_translates(1, j, x)
        assert len(act) == 1  # Haar supports are disjoint
    for j in range(2, 7):
        x = float(rng.uniform(-0.5, 0.5))
        act = active_translates(2, j, x)
        assert 1 <= len(act) <= 3
        # membership agrees with direct evaluation
        for k in range(2**j):
            v = psi_per_1d(2, j, k, x)
            assert (k in act) == (v != 0.0)
    assert active_translates(2, 0, 0.3) == [0]
    with pytest.raises(ValueError):
        active_translates(2, -1, 0.0)


def test_level_values_accumulate_to_periodization():
    rng = np.random.default_rng(5)
    for m, j in ((2, 0), (2, 1), (3, 2), (3, 5)):
        xs = rng.uniform(-0.5, 0.5, 64)
        K, V = level_values(m, j, xs)
        for i, x in enumerate(xs):
            for k in range(2**j):
                acc = V[i][K[i] == k].sum()
                assert abs(acc - psi_per_1d(m, j, k, x)) < 1e-13 * 2.0**3


def exact_torus_product(m, j, k, jp, kp):
    """Exact inner product of two periodized wavelets via rational pieces."""
    a, b = Fraction(-1, 2), Fraction(1, 2)
    f = _strip_restriction(m, j, k, a, b)
    g = _strip_restriction(m, jp, kp, a, b)
    raw = (f * g).integrate(a, b)
    return raw  # unnormalized: exact zero is what matters across levels


@pytest.mark.parametrize("m", (2, 3))
def test_cross_level_semi_orthogonality_exact(m):
    pairs = [(0, 0, 1, 0), (0, 0, 1, 1), (1, 0, 2, 3), (2, 1, 3, 5), (3, 2, 5, 17)]
    for j, k, jp, kp in pairs:
        assert exact_torus_product(m, j, k, jp, kp) == 0
    # same level, nonzero for touching supports
    assert exact_torus_product(m, 3, 0, 3, 0) != 0


@pytest.mark.parametrize("m", (2, 3))
def test_riesz_bounds_per_level(m):
    lows = []
    for j in range(0, 7):
        eigs = np.linalg.eigvalsh(level_gram(m, j))
        assert eigs[0] > 0.0
        assert eigs[-1] <= 1.0 + 1e-12
        lows.append(eigs[0])
    # the lower frame bound is approached from above as j grows
    assert min(lows) == pytest.approx({2: 4 / 27, 3: 0.0379}[m], abs=5e-4)
