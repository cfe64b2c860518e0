import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefmono.errors import InputError, SingularMatrixError
from prefmono.spectral import (
    is_max_diag_dominant,
    is_strictly_diag_dominant_M,
    lemma_inverse_difference_check,
    random_dominant_matrix,
)


def test_max_diag_dominance_examples():
    assert is_max_diag_dominant(np.eye(4)).holds
    v = is_max_diag_dominant([[1, 2], [2, 1]])
    assert not v.holds and v.witness == (0, 1)
    assert is_max_diag_dominant(np.array([[2, 1], [1, 2]]) / 3).holds


def test_max_diag_dominance_witness_is_worst_row():
    m = np.array([[5.0, 1.0, 0.0], [1.0, 1.0, 3.0], [0.0, 3.0, 4.0]])
    v = is_max_diag_dominant(m)
    assert not v.holds and v.witness == (1, 2) and v.margin == -2.0


def test_strict_dominance_examples():
    assert is_strictly_diag_dominant_M([[2, -1], [-1, 2]]).holds
    assert not is_strictly_diag_dominant_M([[1, -1], [-1, 1]]).holds
    assert not is_strictly_diag_dominant_M([[2, 1], [1, 2]]).holds


def test_lemma_examples():
    v = lemma_inverse_difference_check(np.eye(3))
    assert v.holds and v.min_margin == 0.0 and v.min_pair_gap == 1.0
    v = lemma_inverse_difference_check([[2, -1], [-1, 2]])
    assert v.holds and abs(v.min_margin) < 1e-15
    assert v.min_pair_gap == pytest.approx(1 / 3, abs=1e-15)


def test_lemma_can_fail_without_sign_pattern():
    # positive off-diagonals break the hypothesis; the check must notice
    m = np.array([[1.3, 0.1, 0.3], [0.1, 0.8, 0.4], [0.3, 0.4, 0.4]])
    assert not is_strictly_diag_dominant_M(m).holds
    v = lemma_inverse_difference_check(m)
    assert not v.holds and v.min_margin < -1
    y, z, w = v.argmin
    n = np.linalg.inv(m)
    assert (n[y, y] - n[y, z]) - (n[w, y] - n[w, z]) == pytest.approx(v.min_margin, rel=1e-12)


def test_input_validation():
    with pytest.raises(InputError):
        is_max_diag_dominant([[1, 2], [0, 1]])
    with pytest.raises(InputError):
        is_max_diag_dominant(np.ones((2, 3)))
    with pytest.raises(InputError):
        is_max_diag_dominant([[np.nan, 0], [0, 1]])
    with pytest.raises(SingularMatrixError):
        lemma_inverse_difference_check([[1, 1], [1, 1]])


def test_random_generator_meets_hypotheses(rng):
    for _ in range(200):
        assert is_strictly_diag_dominant_M(random_dominant_matrix(6, rng)).holds


def test_lemma_on_random_dominant_matrices(rng):
    for _ in range(300):
        v = lemma_inverse_difference_check(random_dominant_matrix(8, rng))
        assert v.holds and v.min_margin >= -1e-9
        assert v.min_pair_gap > 0


@settings(max_examples=50, deadline=None)
@given(diag=st.lists(st.floats(0, 100), min_size=1, max_size=8))
def test_identity_plus_nonnegative_diagonal_is_dominant(diag):
    assert is_max_diag_dominant(np.eye(len(diag)) + np.diag(diag)).holds


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 7))
def test_lemma_property(seed, dim):
    m = random_dominant_matrix(dim, np.random.default_rng(seed))
    v = lemma_inverse_difference_check(m)
    assert v.holds and v.min_pair_gap > 0
