"""Similarity primitives: embedding vectors, the 2x2 score grid for a pair
of matched pairs, and the in-batch score matrix.

Scores are float64 throughout. Comparison tolerance is 1e-9 and vectors
with norm below 1e-12 are rejected as degenerate rather than clamped.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import (
    AlreadyNormalizedError,
    BadTemperatureError,
    DegenerateVectorError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    SamePairIndexError,
)

EQUALITY_TOL = 1e-9
DEGENERACY_TOL = 1e-12


def as_vector(values) -> np.ndarray:
    """Validate an embedding vector: 1-D, finite, float64."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatchError(f"expected a nonempty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DegenerateVectorError("vector contains NaN or Inf")
    return v


def _as_vector_batch(vectors) -> np.ndarray:
    """Stack a sequence of embedding vectors into a validated (n, d) array."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        batch = vectors.astype(np.float64, copy=False)
    else:
        rows = [as_vector(v) for v in vectors]
        dims = {r.size for r in rows}
        if len(dims) > 1:
            raise DimensionMismatchError(f"vectors have mixed dims {sorted(dims)}")
        batch = np.stack(rows) if rows else np.empty((0, 0))
    if not np.all(np.isfinite(batch)):
        raise DegenerateVectorError("batch contains NaN or Inf")
    norms = np.linalg.norm(batch, axis=1)
    if batch.shape[0] and norms.min() < DEGENERACY_TOL:
        bad = int(np.argmin(norms))
        raise DegenerateVectorError(f"vector {bad} has near-zero norm {norms[bad]:.3e}")
    return batch


@dataclass(frozen=True)
class SimilarityGrid:
    """The four cross scores between two matched (image, text) pairs.

    s11/s22 score the matched combinations, s12/s21 the crossed ones.
    ``normalized`` records whether the scores came from a softmax-normalized
    matrix (then each lies in [0, 1]).
    """

    s11: float
    s12: float
    s21: float
    s22: float
    normalized: bool = False

    def __post_init__(self):
        vals = (self.s11, self.s12, self.s21, self.s22)
        if not all(np.isfinite(vals)):
            raise DegenerateVectorError(f"grid scores must be finite, got {vals}")
        if self.normalized and not all(-EQUALITY_TOL <= v <= 1 + EQUALITY_TOL for v in vals):
            raise ValueError(f"normalized grid scores must lie in [0, 1], got {vals}")

    def relabeled(self) -> "SimilarityGrid":
        """Swap which matched pair is called pair 1."""
        return SimilarityGrid(self.s22, self.s21, self.s12, self.s11, self.normalized)


@dataclass
class BatchSimilarities:
    """N x N score matrix over a training batch.

    scores[i][j] pairs image i with text j. ``normalized`` marks rows as
    softmax-normalized (each row then sums to 1 within 1e-9).
    """

    scores: np.ndarray
    temperature: float = 1.0
    normalized: bool = False

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2 or self.scores.shape[0] != self.scores.shape[1]:
            raise DimensionMismatchError(f"score matrix must be square, got {self.scores.shape}")
        if self.scores.shape[0] < 2:
            raise DimensionMismatchError("batch similarity needs n >= 2")
        if not np.all(np.isfinite(self.scores)):
            raise DegenerateVectorError("score matrix contains NaN or Inf")
        if self.temperature <= 0:
            raise BadTemperatureError(f"temperature must be > 0, got {self.temperature}")
        if self.normalized:
            row_sums = self.scores.sum(axis=1)
            if np.abs(row_sums - 1.0).max() > EQUALITY_TOL:
                raise ValueError("normalized rows must sum to 1 within 1e-9")

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def cosine_similarity(u, v) -> float:
    """Cosine similarity of two vectors; raises on dim mismatch or near-zero norm."""
    u = as_vector(u)
    v = as_vector(v)
    if u.size != v.size:
        raise DimensionMismatchError(f"dims differ: {u.size} vs {v.size}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < DEGENERACY_TOL or nv < DEGENERACY_TOL:
        raise DegenerateVectorError(f"norms too small for cosine: {nu:.3e}, {nv:.3e}")
    return float(np.dot(u, v) / (nu * nv))


def batch_similarity(images, texts, temperature: float = 1.0) -> BatchSimilarities:
    """Raw cosine score matrix scaled by 1/temperature: scores[i][j] = cos(img_i, txt_j) / T."""
    if temperature <= 0:
        raise BadTemperatureError(f"temperature must be > 0, got {temperature}")
    imgs = _as_vector_batch(images)
    txts = _as_vector_batch(texts)
    if imgs.shape[0] != txts.shape[0]:
        raise DimensionMismatchError(f"batch counts differ: {imgs.shape[0]} vs {txts.shape[0]}")
    if imgs.shape[0] < 2:
        raise DimensionMismatchError("batch similarity needs n >= 2")
    if imgs.shape[1] != txts.shape[1]:
        raise DimensionMismatchError(f"vector dims differ: {imgs.shape[1]} vs {txts.shape[1]}")
    cos, _, _ = kernels.pairwise_cosine(np.ascontiguousarray(imgs), np.ascontiguousarray(txts))
    return BatchSimilarities(scores=cos / temperature, temperature=temperature, normalized=False)


def softmax_rows(m: BatchSimilarities) -> BatchSimilarities:
    """Softmax-normalize each row; rejects a second application."""
    if m.normalized:
        raise AlreadyNormalizedError("matrix is already softmax-normalized")
    probs = kernels.softmax_rows(np.ascontiguousarray(m.scores))
    return replace(m, scores=probs, normalized=True)


def grid_from_matrix(m: BatchSimilarities, i: int, j: int) -> SimilarityGrid:
    """Extract the 2x2 sub-block pairing batch samples i and j."""
    n = m.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRangeError(f"indices ({i}, {j}) out of range for n={n}")
    if i == j:
        raise SamePairIndexError(f"grid needs two distinct samples, got i == j == {i}")
    s = m.scores
    return SimilarityGrid(
        s11=float(s[i, i]),
        s12=float(s[i, j]),
        s21=float(s[j, i]),
        s22=float(s[j, j]),
        normalized=m.normalized,
    )
