"""Equivariant image-text similarity lab.

Core pieces: similarity grids and batch matrices (core), the retrieval +
equivariance training objectives (losses), a toy dual encoder with exact
gradients (model), pairwise evaluation metrics (metrics), a synthetic
minimal-change world (synthgen), benchmark-construction pipelines
(benchbuild), and a deterministic CLI (cli).
"""

from .core import BatchSimilarities, SimilarityGrid, batch_similarity, cosine_similarity
from .kernels import BACKEND
from .losses import EqSimConfig, LossBreakdown, PairPartition
from .model import EncoderParams, GradientSet, TrainConfig

__all__ = [
    "BACKEND",
    "BatchSimilarities",
    "EncoderParams",
    "EqSimConfig",
    "GradientSet",
    "LossBreakdown",
    "PairPartition",
    "SimilarityGrid",
    "TrainConfig",
    "batch_similarity",
    "cosine_similarity",
]

__version__ = "0.1.0"
