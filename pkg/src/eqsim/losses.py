"""Training objectives: the contrastive retrieval loss, both equivariance
regularizers with hinge margins, the hybrid close/distant composition, and
the ratio diagnostic.

Regularizer forms (per unordered pair of batch samples):
    v1:  [ (s12 - s21)^2 - alpha ]+
    v2:  [ ((s11 - s12) - (s22 - s21))^2 - alpha ]+
       + [ ((s11 - s21) - (s22 - s12))^2 - alpha ]+

Each deviation is hinged independently, so a term inside its alpha dead
zone contributes nothing. Aggregation is the mean over contributing pairs,
which keeps beta's meaning independent of batch size.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import BatchSimilarities, SimilarityGrid, softmax_rows
from .errors import BadKError, NormalizationMismatchError

MODES = ("hybrid", "v1_all", "v2_all", "v2_close_only", "off")

RATIO_EPS_DEFAULT = 1e-6


@dataclass(frozen=True)
class EqSimConfig:
    """Regularizer settings: hinge margin, loss weight, close-set size,
    normalization choice, and variant selection."""

    alpha: float = 0.04
    beta: float = 0.5
    k_close: int = 8
    use_softmax: bool = True
    mode: str = "hybrid"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.k_close < 0:
            raise BadKError(f"k_close must be >= 0, got {self.k_close}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class LossBreakdown:
    retrieval: float
    equivariance: float
    total: float
    n_close_pairs: int
    n_distant_pairs: int


@dataclass(frozen=True)
class PairPartition:
    """Disjoint close/distant split of all unordered index pairs {i, j}."""

    close: frozenset = field(default_factory=frozenset)
    distant: frozenset = field(default_factory=frozenset)

    def close_mask(self, n: int) -> np.ndarray:
        mask = np.zeros((n, n), dtype=np.bool_)
        for i, j in self.close:
            mask[i, j] = True
            mask[j, i] = True
        return mask


def itc_loss(m: BatchSimilarities) -> float:
    """Symmetric cross-entropy pushing diagonal scores above the off-diagonals."""
    if m.normalized:
        raise NormalizationMismatchError("retrieval loss expects raw (unnormalized) scores")
    return float(kernels.itc_loss(np.ascontiguousarray(m.scores)))


def eqsim_v1(g: SimilarityGrid, alpha: float) -> float:
    """Cross-score symmetry penalty: hinged squared s12 - s21 deviation."""
    d = g.s12 - g.s21
    return max(d * d - alpha, 0.0)


def eqsim_v2(g: SimilarityGrid, alpha: float) -> float:
    """Score-change consistency penalty, hinged per direction and summed."""
    a = (g.s11 - g.s12) - (g.s22 - g.s21)
    b = (g.s11 - g.s21) - (g.s22 - g.s12)
    return max(a * a - alpha, 0.0) + max(b * b - alpha, 0.0)


def classify_pairs(m: BatchSimilarities, k_close: int) -> PairPartition:
    """Split unordered pairs into close/distant by per-row top-k membership.

    Pair {i, j} is close when j is among the k highest off-diagonal entries
    of row i, or i among those of row j. Boundary ties go to the lower index.
    """
    n = m.n
    if not 0 <= k_close <= n - 1:
        raise BadKError(f"k_close must be in [0, {n - 1}], got {k_close}")
    close = set()
    if k_close > 0:
        for i in range(n):
            # stable sort on negated scores ranks equal values by ascending index
            order = np.argsort(-m.scores[i], kind="stable")
            picked = [int(j) for j in order if j != i][:k_close]
            for j in picked:
                close.add((min(i, j), max(i, j)))
    distant = {
        (i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in close
    }
    return PairPartition(close=frozenset(close), distant=frozenset(distant))


def eq_loss(m: BatchSimilarities, cfg: EqSimConfig) -> tuple[float, PairPartition]:
    """Equivariance regularizer over the batch under the configured mode.

    The matrix must already match cfg.use_softmax (raw vs row-normalized).
    Every unordered pair contributes once; hybrid takes the mean of v2 over
    close pairs plus the mean of v1 over distant pairs. mode=off skips the
    close-set selection entirely (all pairs count as distant, value 0).
    """
    if m.normalized != cfg.use_softmax:
        state = "normalized" if m.normalized else "raw"
        raise NormalizationMismatchError(
            f"matrix is {state} but config use_softmax={cfg.use_softmax}"
        )
    if cfg.mode == "off":
        partition = classify_pairs(m, 0)
    else:
        partition = classify_pairs(m, cfg.k_close)
    value, _, _ = kernels.eq_value(
        np.ascontiguousarray(m.scores),
        partition.close_mask(m.n),
        float(cfg.alpha),
        kernels.MODE_CODES[cfg.mode],
    )
    return float(value), partition


def total_loss(m: BatchSimilarities, cfg: EqSimConfig) -> LossBreakdown:
    """Retrieval loss on the raw matrix plus beta times the equivariance term
    (computed on the softmax-normalized matrix when cfg.use_softmax)."""
    retrieval = itc_loss(m)
    eq_input = softmax_rows(m) if cfg.use_softmax else m
    equivariance, partition = eq_loss(eq_input, cfg)
    return LossBreakdown(
        retrieval=retrieval,
        equivariance=equivariance,
        total=retrieval + cfg.beta * equivariance,
        n_close_pairs=len(partition.close),
        n_distant_pairs=len(partition.distant),
    )


def equivariance_ratio(g: SimilarityGrid, eps: float = RATIO_EPS_DEFAULT):
    """Both score-change ratios, ideally (1, 1); None near singular denominators."""
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    d1 = g.s11 - g.s21
    d2 = g.s22 - g.s12
    if abs(d1) <= eps or abs(d2) <= eps:
        return None
    return ((g.s11 - g.s12) / d1, (g.s22 - g.s21) / d2)
