import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prefmono import DPOSoftmaxModel, LinearModel, OneHotModel, ProblemSpace
from prefmono.errors import InputError
from prefmono.scores import center_per_background, model_from_dict, probability, score, score_difference, score_gradient

SPACE = ProblemSpace(("p", "q"), ("a", "b", "c", "d"))


def random_models(rng):
    emb = rng.normal(size=(2, 4, 3))
    ref = rng.normal(size=(2, 4))
    return [OneHotModel(SPACE), LinearModel(SPACE, emb), DPOSoftmaxModel(SPACE, ref, beta=rng.uniform(0.2, 3))]


def test_space_rejects_duplicates_and_empty():
    with pytest.raises(InputError):
        ProblemSpace(("x", "x"), ("a", "b"))
    with pytest.raises(InputError):
        ProblemSpace(("x",), ())


def test_one_hot_indicator_score():
    m = OneHotModel(SPACE)
    theta = np.zeros(m.dim)
    theta[SPACE.node("q", "c")] = 1.0
    assert score(m, theta, "q", "c") == 1.0
    assert score(m, theta, "p", "c") == 0.0
    np.testing.assert_array_equal(score_gradient(m, theta, "q", "c"), theta)


def test_linear_dot_product():
    space = ProblemSpace(("x",), ("y", "z"))
    m = LinearModel.from_mapping(space, {"x": {"y": [1, 2], "z": [0, 1]}})
    assert score(m, [3, -1], "x", "y") == 1.0
    np.testing.assert_array_equal(score_gradient(m, [7.0, 9.0], "x", "y"), [1.0, 2.0])


def test_dpo_score_zero_at_reference(rng):
    ref = rng.normal(size=(2, 4))
    m = DPOSoftmaxModel(SPACE, ref, beta=1.7)
    assert np.max(np.abs(m.scores(ref.ravel()))) < 1e-14


def test_score_difference_examples():
    m = OneHotModel(ProblemSpace(("x",), ("y", "z")))
    assert score_difference(m, [2.0, -1.0], "x", "y", "z") == 3.0
    assert score_difference(m, [2.0, -1.0], "x", "y", "y") == 0.0
    dpo = DPOSoftmaxModel(ProblemSpace(("x",), ("y", "z")), [[0.0, 0.0]], beta=2.0)
    assert score_difference(dpo, [1.0, 0.0], "x", "y", "z") == pytest.approx(2.0, abs=1e-14)


def test_probability_examples():
    m = OneHotModel(ProblemSpace(("x",), ("a", "b", "c", "d")))
    for y in "abcd":
        assert probability(m, np.zeros(4), "x", y) == 0.25
    m2 = OneHotModel(ProblemSpace(("x",), ("y", "z")))
    assert probability(m2, [math.log(3), 0.0], "x", "y") == pytest.approx(0.75, abs=1e-15)
    assert probability(m2, [math.log(3), 0.0], "x", "z") == pytest.approx(0.25, abs=1e-15)


def test_unknown_identifier():
    m = OneHotModel(SPACE)
    with pytest.raises(KeyError):
        score(m, np.zeros(m.dim), "nope", "a")
    with pytest.raises(KeyError):
        score(m, np.zeros(m.dim), "p", "nope")


def test_theta_shape_checked():
    with pytest.raises(InputError):
        score(OneHotModel(SPACE), np.zeros(3), "p", "a")
    with pytest.raises(InputError):
        score(OneHotModel(SPACE), np.full(8, np.nan), "p", "a")


def test_gradients_match_finite_differences(rng):
    h = 1e-5
    for _ in range(100):
        m = random_models(rng)[rng.integers(3)]
        theta = rng.normal(size=m.dim)
        x, y = SPACE.backgrounds[rng.integers(2)], SPACE.alternatives[rng.integers(4)]
        g = score_gradient(m, theta, x, y)
        fd = np.array([(score(m, theta + h * e, x, y) - score(m, theta - h * e, x, y)) / (2 * h)
                       for e in np.eye(m.dim)])
        assert np.max(np.abs(g - fd)) <= 1e-6 * max(np.max(np.abs(g)), 1e-3)


def test_dpo_score_hessian_matches_finite_differences(rng):
    m = DPOSoftmaxModel(SPACE, rng.normal(size=(2, 4)), beta=1.3)
    theta = rng.normal(size=m.dim)
    h = 1e-5
    H = m.score_hessian(theta, "p", "b")
    fd = np.array([(score_gradient(m, theta + h * e, "p", "b") - score_gradient(m, theta - h * e, "p", "b")) / (2 * h)
                   for e in np.eye(m.dim)])
    np.testing.assert_allclose(H, fd, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_score_difference_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    for m in random_models(rng):
        theta = rng.normal(size=m.dim)
        assert score_difference(m, theta, "p", "a", "c") == -score_difference(m, theta, "p", "c", "a")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-50, 50))
def test_dpo_shift_invariance(seed, shift):
    rng = np.random.default_rng(seed)
    m = DPOSoftmaxModel(SPACE, rng.normal(size=(2, 4)), beta=0.7)
    theta = rng.normal(size=m.dim)
    moved = theta.copy()
    moved[:4] += shift
    for y in SPACE.alternatives:
        for z in SPACE.alternatives:
            assert abs(score_difference(m, moved, "p", y, z) - score_difference(m, theta, "p", y, z)) < 1e-10
        assert abs(probability(m, moved, "p", y) - probability(m, theta, "p", y)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_probability_from_score_differences(seed):
    rng = np.random.default_rng(seed)
    m = OneHotModel(SPACE)
    theta = rng.normal(scale=3, size=m.dim)
    total = 0.0
    for y in SPACE.alternatives:
        others = sum(math.exp(-score_difference(m, theta, "q", y, w)) for w in SPACE.alternatives if w != y)
        p = probability(m, theta, "q", y)
        assert abs(p - 1 / (1 + others)) < 1e-12
        total += p
    assert abs(total - 1) < 1e-12


def test_probability_increasing_in_each_difference(rng):
    m = OneHotModel(SPACE)
    theta = rng.normal(size=m.dim)
    # lowering s_w raises s_yw alone, for each w != y
    for w in ("b", "c", "d"):
        moved = theta.copy()
        moved[SPACE.node("p", w)] -= 1e-3
        assert probability(m, moved, "p", "a") > probability(m, theta, "p", "a")


def test_probabilities_stable_for_huge_logits():
    m = OneHotModel(ProblemSpace(("x",), ("y", "z")))
    assert probability(m, [1000.0, 0.0], "x", "y") == 1.0
    assert probability(m, [1000.0, 0.0], "x", "z") == pytest.approx(0.0, abs=1e-300)


def test_gauge_centers_each_background(rng):
    m = OneHotModel(SPACE)
    theta = center_per_background(m, rng.normal(size=m.dim))
    np.testing.assert_allclose(theta.reshape(2, 4).sum(axis=1), 0, atol=1e-14)


def test_model_dict_roundtrip(rng):
    for m in random_models(rng):
        again = model_from_dict(m.to_dict())
        theta = rng.normal(size=m.dim)
        np.testing.assert_allclose(again.scores(theta), m.scores(theta), rtol=0, atol=0)


def test_model_construction_errors():
    with pytest.raises(InputError):
        DPOSoftmaxModel(SPACE, np.zeros((2, 4)), beta=0)
    with pytest.raises(InputError):
        LinearModel.from_mapping(ProblemSpace(("x",), ("y", "z")), {"x": {"y": [1.0]}})
    with pytest.raises(InputError):
        model_from_dict({"kind": "quadratic", "backgrounds": ["x"], "alternatives": ["y", "z"]})
