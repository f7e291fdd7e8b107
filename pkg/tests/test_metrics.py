import numpy as np
import pytest

from eqsim import metrics
from eqsim.core import BatchSimilarities, SimilarityGrid
from eqsim.errors import BadKError, EmptyEvalSetError, EmptyValuesError, LengthMismatchError


def random_grids(rng, n):
    vals = rng.normal(size=(n, 4))
    return [SimilarityGrid(*row) for row in vals]


def test_group_metrics_ideal_grid():
    rep = metrics.group_metrics([SimilarityGrid(1, 0, 0, 1)])
    assert (rep.text_score, rep.image_score, rep.group_score) == (1.0, 1.0, 1.0)


def test_group_metrics_tie_loses():
    rep = metrics.group_metrics([SimilarityGrid(0.5, 0.5, 0.1, 0.9)])
    assert rep.text_score == 0.0  # s11 == s12


def test_group_metrics_matches_naive_loop():
    rng = np.random.default_rng(0)
    grids = random_grids(rng, 50)
    rep = metrics.group_metrics(grids)
    text = image = group = 0
    for g in grids:
        t = 1 if (g.s11 > g.s12 and g.s22 > g.s21) else 0
        i = 1 if (g.s11 > g.s21 and g.s22 > g.s12) else 0
        text += t
        image += i
        group += t * i
    assert rep.text_score == text / 50
    assert rep.image_score == image / 50
    assert rep.group_score == group / 50
    assert rep.per_sample == [
        (t, i, t & i)
        for t, i in (
            (
                int(g.s11 > g.s12 and g.s22 > g.s21),
                int(g.s11 > g.s21 and g.s22 > g.s12),
            )
            for g in grids
        )
    ]


def test_group_metrics_invariants():
    rng = np.random.default_rng(1)
    grids = random_grids(rng, 200)
    rep = metrics.group_metrics(grids)
    assert rep.group_score <= min(rep.text_score, rep.image_score)
    relabeled = metrics.group_metrics([g.relabeled() for g in grids])
    assert relabeled.per_sample == rep.per_sample
    with pytest.raises(EmptyEvalSetError):
        metrics.group_metrics([])


def test_valse_examples():
    rep = metrics.valse_metrics([1.0, 1.0], [0.0, 0.0], 0.5)
    assert (rep.acc, rep.min_pc_pf) == (1.0, 1.0)
    rep = metrics.valse_metrics([0.0, 0.0], [1.0, 1.0], 0.5)
    assert (rep.acc, rep.min_pc_pf) == (0.0, 0.0)
    rep = metrics.valse_metrics([0.9, 0.4], [0.3, 0.6], 0.5)
    assert (rep.p_c, rep.p_f, rep.acc, rep.min_pc_pf) == (0.5, 0.5, 0.5, 0.5)


def test_valse_acc_is_mean_of_precisions_for_equal_sizes():
    rng = np.random.default_rng(2)
    correct, foil = rng.random(40), rng.random(40)
    rep = metrics.valse_metrics(correct, foil, 0.4)
    assert rep.acc == pytest.approx((rep.p_c + rep.p_f) / 2, abs=1e-12)
    assert rep.min_pc_pf == min(rep.p_c, rep.p_f)


def test_valse_length_mismatch():
    with pytest.raises(LengthMismatchError):
        metrics.valse_metrics([1.0], [0.0, 0.5], 0.5)


def test_recall_identity_matrix():
    r = metrics.recall_at_k(BatchSimilarities(np.eye(4)), {1})
    assert r["text_to_image"][1] == 1.0
    assert r["image_to_text"][1] == 1.0


def test_recall_anti_diagonal():
    m = BatchSimilarities(np.array([[0.0, 1.0], [1.0, 0.0]]))
    r = metrics.recall_at_k(m, {1, 2})
    assert r["text_to_image"][1] == 0.0
    assert r["text_to_image"][2] == 1.0
    assert r["image_to_text"][1] == 0.0
    assert r["image_to_text"][2] == 1.0


def naive_recall(scores, k, axis):
    """Sort-based oracle with the (score desc, index asc) tie rule."""
    n = scores.shape[0]
    hits = 0
    for d in range(n):
        entries = scores[d, :] if axis == 1 else scores[:, d]
        order = sorted(range(n), key=lambda j: (-entries[j], j))
        if d in order[:k]:
            hits += 1
    return hits / n


def test_recall_matches_sort_oracle():
    rng = np.random.default_rng(3)
    scores = rng.normal(size=(10, 10))
    scores[3, 5] = scores[3, 3]  # plant a tie
    scores[7, 7] = scores[2, 7]
    m = BatchSimilarities(scores)
    r = metrics.recall_at_k(m, {1, 5, 10})
    for k in (1, 5, 10):
        assert r["text_to_image"][k] == naive_recall(scores, k, axis=1)
        assert r["image_to_text"][k] == naive_recall(scores, k, axis=0)


def test_recall_bad_k():
    with pytest.raises(BadKError):
        metrics.recall_at_k(BatchSimilarities(np.eye(3)), {4})


def test_equivariance_score_directions():
    g = SimilarityGrid(1, 0, 0, 1)
    s = metrics.equivariance_score(g)
    assert (s.text_direction, s.image_direction, s.combined) == (0.0, 0.0, 0.0)
    g = SimilarityGrid(0.9, 0.4, 0.1, 0.7)
    s = metrics.equivariance_score(g)
    assert s.text_direction == pytest.approx(abs((0.9 - 0.4) - (0.7 - 0.1)), abs=1e-12)
    assert s.image_direction == pytest.approx(abs((0.9 - 0.1) - (0.7 - 0.4)), abs=1e-12)
    assert s.combined == pytest.approx(s.text_direction + s.image_direction, abs=1e-12)


def grid_from_deltas(text_delta_1, text_delta_2):
    """Build a grid whose published-style deltas are s12-s11 and s21-s22."""
    return SimilarityGrid(s11=0.0, s12=text_delta_1, s21=text_delta_2, s22=0.0)


def test_equivariance_score_published_deltas():
    s = metrics.equivariance_score(grid_from_deltas(+0.04, -1.81))
    assert s.text_direction == pytest.approx(1.85, abs=1e-9)
    s = metrics.equivariance_score(grid_from_deltas(-0.22, -0.17))
    assert s.text_direction == pytest.approx(0.05, abs=1e-9)


def test_monotone_transform_preserves_decisions():
    rng = np.random.default_rng(4)
    grids = random_grids(rng, 100)
    transformed = [
        SimilarityGrid(*(np.exp(0.7 * np.array([g.s11, g.s12, g.s21, g.s22]) + 1.3)))
        for g in grids
    ]
    assert (
        metrics.group_metrics(grids).per_sample
        == metrics.group_metrics(transformed).per_sample
    )
    scores = rng.normal(size=(8, 8))
    r1 = metrics.recall_at_k(BatchSimilarities(scores), {1, 3, 8})
    r2 = metrics.recall_at_k(BatchSimilarities(np.exp(scores)), {1, 3, 8})
    assert r1 == r2


def test_histogram_single_value():
    h = metrics.histogram([2.5], 1)
    assert h.counts.tolist() == [1]
    assert h.std == 0.0


def test_histogram_hand_count():
    h = metrics.histogram([0.0, 1.0, 2.0, 3.0], 2, value_range=(0, 4))
    assert h.counts.tolist() == [2, 2]
    assert h.edges.tolist() == [0.0, 2.0, 4.0]
    assert h.mean == 1.5


def test_histogram_matches_naive_binning():
    rng = np.random.default_rng(5)
    values = rng.random(1000)
    h = metrics.histogram(values, 10, value_range=(0.0, 1.0))
    naive = [0] * 10
    for v in values:
        idx = min(int(v * 10), 9)
        naive[idx] += 1
    assert h.counts.tolist() == naive
    assert h.counts.sum() == 1000
    with pytest.raises(EmptyValuesError):
        metrics.histogram([], 3)
