"""Evaluation metrics: pairwise text/image/group scores, correct-vs-foil
precision metrics, retrieval recall@K, the equivariance score diagnostic,
and histogram summaries of its distribution.

All win conditions use strict inequality: a tie scores zero, so a
constant scorer earns nothing.
"""

from dataclasses import dataclass

import numpy as np

from .core import BatchSimilarities, SimilarityGrid
from .errors import BadKError, EmptyEvalSetError, EmptyValuesError, LengthMismatchError


@dataclass
class GroupMetricsReport:
    text_score: float
    image_score: float
    group_score: float
    n_samples: int
    per_sample: list  # (text, image, group) 0/1 triples


@dataclass
class ValseReport:
    acc: float
    p_c: float
    p_f: float
    min_pc_pf: float
    threshold: float


@dataclass
class EquivarianceScore:
    """Absolute deviation from the two score-change identities.

    text_direction  = |(s11 - s12) - (s22 - s21)|
    image_direction = |(s11 - s21) - (s22 - s12)|
    combined        = their sum
    """

    text_direction: float
    image_direction: float
    combined: float


@dataclass
class HistogramSummary:
    edges: np.ndarray  # n_bins + 1 edges
    counts: np.ndarray  # n_bins integer counts (in-range values only)
    mean: float
    std: float  # population std over all input values


def grid_points(g: SimilarityGrid) -> tuple[int, int, int]:
    """Per-grid (text, image, group) win points under strict inequality."""
    text = int(g.s11 > g.s12 and g.s22 > g.s21)
    image = int(g.s11 > g.s21 and g.s22 > g.s12)
    return text, image, text & image


def group_metrics(grids) -> GroupMetricsReport:
    """Fraction of grids where the right text / right image / both win."""
    grids = list(grids)
    if not grids:
        raise EmptyEvalSetError("group metrics need at least one grid")
    per_sample = [grid_points(g) for g in grids]
    n = len(per_sample)
    text, image, group = (sum(p[k] for p in per_sample) / n for k in range(3))
    return GroupMetricsReport(
        text_score=text,
        image_score=image,
        group_score=group,
        n_samples=n,
        per_sample=per_sample,
    )


def valse_metrics(correct_scores, foil_scores, threshold: float) -> ValseReport:
    """Thresholded correct/foil precision; acc counts all 2N decisions."""
    correct = np.asarray(correct_scores, dtype=np.float64)
    foil = np.asarray(foil_scores, dtype=np.float64)
    if correct.size != foil.size:
        raise LengthMismatchError(f"lengths differ: {correct.size} vs {foil.size}")
    if correct.size == 0:
        raise EmptyEvalSetError("valse metrics need at least one pair")
    p_c = float(np.mean(correct > threshold))
    p_f = float(np.mean(foil < threshold))
    acc = float((np.sum(correct > threshold) + np.sum(foil < threshold)) / (2 * correct.size))
    return ValseReport(acc=acc, p_c=p_c, p_f=p_f, min_pc_pf=min(p_c, p_f), threshold=threshold)


def recall_at_k(m: BatchSimilarities, ks) -> dict:
    """Recall@K in both retrieval directions.

    Rows rank texts for each image, columns rank images for each text. Equal
    scores rank by ascending index, so the diagonal survives a tie only when
    its index places it inside the top k.
    """
    n = m.n
    ks = sorted(set(int(k) for k in ks))
    if any(k < 1 or k > n for k in ks):
        raise BadKError(f"every k must be in [1, {n}], got {ks}")
    s = m.scores
    diag = np.diag(s)

    # rank of the diagonal within its row/column under (score desc, index asc)
    def ranks(axis):
        if axis == 1:
            greater = (s > diag[:, None]).sum(axis=1)
            tied_before = np.array(
                [np.sum(s[i, :i] == diag[i]) for i in range(n)]
            )
        else:
            greater = (s > diag[None, :]).sum(axis=0)
            tied_before = np.array(
                [np.sum(s[:j, j] == diag[j]) for j in range(n)]
            )
        return greater + tied_before

    row_rank = ranks(axis=1)
    col_rank = ranks(axis=0)
    return {
        "text_to_image": {k: float(np.mean(row_rank < k)) for k in ks},
        "image_to_text": {k: float(np.mean(col_rank < k)) for k in ks},
    }


def equivariance_score(g: SimilarityGrid) -> EquivarianceScore:
    """Deviation of a grid from the score-change identities; 0 is ideal."""
    text = abs((g.s11 - g.s12) - (g.s22 - g.s21))
    image = abs((g.s11 - g.s21) - (g.s22 - g.s12))
    return EquivarianceScore(
        text_direction=text, image_direction=image, combined=text + image
    )


def histogram(values, n_bins: int, value_range=None) -> HistogramSummary:
    """Equal-width histogram plus population mean/std of the values."""
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise EmptyValuesError("histogram needs at least one value")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    counts, edges = np.histogram(values, bins=n_bins, range=value_range)
    return HistogramSummary(
        edges=edges,
        counts=counts,
        mean=float(values.mean()),
        std=float(values.std()),
    )
