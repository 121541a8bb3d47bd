import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capvar._reduce import tree_sum

RNG = np.random.default_rng(7)


def test_matches_fsum_on_benign_data():
    v = RNG.standard_normal(10_000)
    assert tree_sum(v) == pytest.approx(math.fsum(v.tolist()), rel=1e-15, abs=1e-15)


def test_exact_on_dyadic_data():
    # dyadic weights sum without rounding, so the tree must reproduce fsum
    v = np.ldexp(1.0, RNG.integers(-30, 0, size=5_000))
    assert tree_sum(v) == math.fsum(v.tolist())


def test_beats_naive_summation_on_adversarial_data():
    # alternating large/small cancellation where left-to-right loses digits
    big = np.full(2_000, 1e16)
    small = np.full(2_000, 1.0)
    v = np.empty(4_000)
    v[0::2], v[1::2] = big, -big + small
    exact = math.fsum(v.tolist())
    assert abs(tree_sum(v) - exact) <= abs(np.add.reduce(v) - exact)
    assert tree_sum(v) == pytest.approx(exact, rel=1e-10)

def test_empty_and_singleton():
    assert tree_sum(np.array([])) == 0.0
    assert tree_sum(np.array([3.5])) == 3.5


def test_axis_zero_reduction_of_matrices():
    A = RNG.standard_normal((317, 4))
    out = tree_sum(A)
    assert out.shape == (4,)
    for j in range(4):
        assert out[j] == tree_sum(A[:, j])


@pytest.mark.parametrize("n", [1, 2, 4095, 4096, 4097, 12_289])
def test_worker_count_never_changes_bits(n):
    v = RNG.standard_normal(n) * np.ldexp(1.0, RNG.integers(-20, 20, size=n))
    base = tree_sum(v, workers=1)
    for workers in (2, 3, 8):
        assert tree_sum(v, workers=workers) == base


def test_worker_count_invariance_for_vector_values():
    A = RNG.standard_normal((9_001, 3))
    base = tree_sum(A, workers=1)
    assert np.array_equal(tree_sum(A, workers=8), base)


@given(st.lists(st.floats(-1e12, 1e12, allow_nan=False), max_size=300))
@settings(max_examples=60, deadline=None)
def test_tree_is_permutation_of_fsum_within_roundoff(xs):
    v = np.asarray(xs, dtype=float)
    got = tree_sum(v)
    want = math.fsum(xs)
    scale = max(1.0, math.fsum([abs(x) for x in xs]))
    assert abs(got - want) <= 1e-12 * scale
