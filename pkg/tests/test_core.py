import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqsim import core
from eqsim.errors import (
    AlreadyNormalizedError,
    BadTemperatureError,
    DegenerateVectorError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    SamePairIndexError,
)

finite_floats = st.floats(min_value=-100, max_value=100, allow_nan=False)


def test_cosine_identical_unit_vectors():
    assert core.cosine_similarity([1.0, 0.0], [1.0, 0.0]) == pytest.approx(1.0)


def test_cosine_orthogonal():
    assert core.cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0, abs=1e-15)


def test_cosine_hand_arithmetic():
    # 32 / (sqrt(14) * sqrt(77)), cross-checked with mpmath at 50 digits
    import mpmath

    expected = float(mpmath.mpf(32) / (mpmath.sqrt(14) * mpmath.sqrt(77)))
    got = core.cosine_similarity([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(0.9746318461970762, abs=1e-12)


def test_cosine_errors():
    with pytest.raises(DimensionMismatchError):
        core.cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(DegenerateVectorError):
        core.cosine_similarity([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(DegenerateVectorError):
        core.cosine_similarity([np.nan, 1.0], [1.0, 0.0])


@given(
    st.lists(finite_floats, min_size=2, max_size=8),
    st.lists(finite_floats, min_size=2, max_size=8),
)
@settings(max_examples=200)
def test_cosine_symmetric_and_bounded(u, v):
    n = min(len(u), len(v))
    u, v = np.array(u[:n]), np.array(v[:n])
    if np.linalg.norm(u) < 1e-6 or np.linalg.norm(v) < 1e-6:
        return
    assert core.cosine_similarity(u, v) == core.cosine_similarity(v, u)
    assert abs(core.cosine_similarity(u, v)) <= 1 + 1e-9


def test_batch_similarity_identity_pattern():
    vecs = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    m = core.batch_similarity(vecs, vecs, temperature=1.0)
    np.testing.assert_allclose(m.scores, np.eye(2), atol=1e-15)
    assert not m.normalized


def test_batch_similarity_temperature_scaling():
    rng = np.random.default_rng(0)
    imgs, txts = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    m1 = core.batch_similarity(imgs, txts, temperature=1.0)
    m2 = core.batch_similarity(imgs, txts, temperature=0.5)
    np.testing.assert_allclose(m2.scores, 2.0 * m1.scores, rtol=1e-12)


def test_batch_similarity_matches_per_entry_oracle():
    rng = np.random.default_rng(42)
    imgs, txts = rng.normal(size=(3, 5)), rng.normal(size=(3, 5))
    m = core.batch_similarity(imgs, txts, temperature=0.7)
    for i in range(3):
        for j in range(3):
            expected = core.cosine_similarity(imgs[i], txts[j]) / 0.7
            assert m.scores[i, j] == pytest.approx(expected, abs=1e-9)


def test_batch_similarity_errors():
    good = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    with pytest.raises(BadTemperatureError):
        core.batch_similarity(good, good, temperature=0.0)
    with pytest.raises(DimensionMismatchError):
        core.batch_similarity(good, good[:1] + [np.array([1.0, 0.0, 0.0])])
    with pytest.raises(DegenerateVectorError):
        core.batch_similarity(good, [np.array([1.0, 0.0]), np.zeros(2)])
    with pytest.raises(DimensionMismatchError):
        core.batch_similarity(good[:1], good[:1])  # n < 2


def test_softmax_rows_uniform_and_shift_invariance():
    m = core.BatchSimilarities(np.zeros((2, 2)))
    out = core.softmax_rows(m)
    np.testing.assert_allclose(out.scores, np.full((2, 2), 0.5))
    big = core.softmax_rows(core.BatchSimilarities(np.full((2, 2), 1000.0)))
    np.testing.assert_allclose(big.scores, np.full((2, 2), 0.5))
    assert np.all(np.isfinite(big.scores))


def test_softmax_rows_reference_values():
    import mpmath

    row = [1.0, 2.0, 3.0]
    exps = [mpmath.exp(x) for x in row]
    total = sum(exps)
    expected = [float(e / total) for e in exps]
    m = core.BatchSimilarities(np.array([row, row, row]))
    out = core.softmax_rows(m)
    np.testing.assert_allclose(out.scores[0], expected, atol=1e-12)
    np.testing.assert_allclose(
        out.scores[0], [0.09003057, 0.24472847, 0.66524096], atol=1e-8
    )
    assert out.normalized
    np.testing.assert_allclose(out.scores.sum(axis=1), 1.0, atol=1e-9)


def test_softmax_rows_rejects_double_application():
    m = core.softmax_rows(core.BatchSimilarities(np.zeros((2, 2))))
    with pytest.raises(AlreadyNormalizedError):
        core.softmax_rows(m)


def test_softmax_rows_preserves_row_ordering():
    rng = np.random.default_rng(7)
    scores = rng.normal(size=(6, 6))
    out = core.softmax_rows(core.BatchSimilarities(scores))
    for i in range(6):
        assert np.array_equal(np.argsort(scores[i]), np.argsort(out.scores[i]))


def test_grid_from_matrix_identity():
    m = core.BatchSimilarities(np.eye(2))
    g = core.grid_from_matrix(m, 0, 1)
    assert (g.s11, g.s12, g.s21, g.s22) == (1.0, 0.0, 0.0, 1.0)
    assert not g.normalized


def test_grid_from_matrix_swap_is_relabel():
    rng = np.random.default_rng(1)
    m = core.BatchSimilarities(rng.normal(size=(4, 4)))
    g = core.grid_from_matrix(m, 0, 1)
    h = core.grid_from_matrix(m, 1, 0)
    assert (h.s11, h.s12, h.s21, h.s22) == (g.s22, g.s21, g.s12, g.s11)
    assert h == g.relabeled()


def test_grid_from_matrix_direct_indexing():
    rng = np.random.default_rng(2)
    s = rng.normal(size=(4, 4))
    g = core.grid_from_matrix(core.BatchSimilarities(s), 2, 3)
    assert (g.s11, g.s12, g.s21, g.s22) == (s[2, 2], s[2, 3], s[3, 2], s[3, 3])


def test_grid_from_matrix_errors():
    m = core.BatchSimilarities(np.eye(3))
    with pytest.raises(IndexOutOfRangeError):
        core.grid_from_matrix(m, 0, 3)
    with pytest.raises(SamePairIndexError):
        core.grid_from_matrix(m, 1, 1)


def test_batch_similarities_invariants():
    with pytest.raises(DimensionMismatchError):
        core.BatchSimilarities(np.zeros((2, 3)))
    with pytest.raises(DegenerateVectorError):
        core.BatchSimilarities(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        core.BatchSimilarities(np.full((2, 2), 0.4), normalized=True)  # rows sum to 0.8
