"""Vectorized numpy implementations of the numeric hot kernels.

This is the fallback backend (EQSIM_BACKEND=numpy) and the reference the
numba backend is tested against. All functions take and return float64
arrays and never mutate their inputs.
"""

import numpy as np

from .modes import MODE_HYBRID, MODE_V1_ALL, MODE_V2_ALL, MODE_V2_CLOSE


def softmax_rows(scores):
    """Row-wise softmax with max-subtraction for overflow safety."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_vjp(probs, grad_out):
    """Backward pass of softmax_rows: probs = softmax_rows(s), returns dL/ds."""
    inner = (grad_out * probs).sum(axis=1, keepdims=True)
    return probs * (grad_out - inner)


def itc_loss(scores):
    """Symmetric cross-entropy over a raw score matrix (diagonal = positives)."""
    return itc_loss_grad(scores)[0]


def itc_loss_grad(scores):
    """Symmetric cross-entropy and its gradient w.r.t. every score entry."""
    n = scores.shape[0]
    diag = np.diag(scores)

    row_max = scores.max(axis=1, keepdims=True)
    re = np.exp(scores - row_max)
    rsum = re.sum(axis=1, keepdims=True)
    row_lse = np.log(rsum).ravel() + row_max.ravel()

    col_max = scores.max(axis=0, keepdims=True)
    ce = np.exp(scores - col_max)
    csum = ce.sum(axis=0, keepdims=True)
    col_lse = np.log(csum).ravel() + col_max.ravel()

    loss = 0.5 * ((row_lse - diag).sum() + (col_lse - diag).sum()) / n

    grad = (0.5 / n) * (re / rsum + ce / csum)
    idx = np.arange(n)
    grad[idx, idx] -= 1.0 / n
    return loss, grad


def _pair_weights(close_u, n_pairs, mode):
    """Per-unordered-pair weights for the v1 and v2 terms under each mode."""
    wv1 = np.zeros(n_pairs)
    wv2 = np.zeros(n_pairs)
    n_close = int(close_u.sum())
    n_distant = n_pairs - n_close
    if mode == MODE_HYBRID:
        if n_close > 0:
            wv2[close_u] = 1.0 / n_close
        if n_distant > 0:
            wv1[~close_u] = 1.0 / n_distant
    elif mode == MODE_V1_ALL:
        wv1[:] = 1.0 / n_pairs
    elif mode == MODE_V2_ALL:
        wv2[:] = 1.0 / n_pairs
    elif mode == MODE_V2_CLOSE:
        if n_close > 0:
            wv2[close_u] = 1.0 / n_close
    return wv1, wv2, n_close, n_distant


def eq_value(mat, close_mask, alpha, mode):
    """Equivariance regularizer value over all unordered batch pairs.

    Returns (value, n_close, n_distant). Each hinged squared deviation
    contributes max(dev^2 - alpha, 0); pairs are weighted so every
    contributing side is a mean over its own pair set.
    """
    n = mat.shape[0]
    iu, ju = np.triu_indices(n, 1)
    close_u = close_mask[iu, ju]
    wv1, wv2, n_close, n_distant = _pair_weights(close_u, iu.size, mode)

    diag = np.diag(mat)
    t = mat[iu, ju] - mat[ju, iu]
    a = diag[iu] - mat[iu, ju] - diag[ju] + mat[ju, iu]
    b = diag[iu] - mat[ju, iu] - diag[ju] + mat[iu, ju]

    value = (
        (wv1 * np.maximum(t * t - alpha, 0.0)).sum()
        + (wv2 * (np.maximum(a * a - alpha, 0.0) + np.maximum(b * b - alpha, 0.0))).sum()
    )
    return value, n_close, n_distant


def eq_value_grad(mat, close_mask, alpha, mode):
    """eq_value plus its gradient w.r.t. every matrix entry."""
    n = mat.shape[0]
    iu, ju = np.triu_indices(n, 1)
    close_u = close_mask[iu, ju]
    wv1, wv2, n_close, n_distant = _pair_weights(close_u, iu.size, mode)

    diag = np.diag(mat)
    t = mat[iu, ju] - mat[ju, iu]
    a = diag[iu] - mat[iu, ju] - diag[ju] + mat[ju, iu]
    b = diag[iu] - mat[ju, iu] - diag[ju] + mat[iu, ju]

    value = (
        (wv1 * np.maximum(t * t - alpha, 0.0)).sum()
        + (wv2 * (np.maximum(a * a - alpha, 0.0) + np.maximum(b * b - alpha, 0.0))).sum()
    )

    grad = np.zeros((n, n))
    gt = wv1 * (t * t > alpha) * 2.0 * t
    np.add.at(grad, (iu, ju), gt)
    np.add.at(grad, (ju, iu), -gt)

    # dev a = (m_ii - m_ij) - (m_jj - m_ji)
    ga = wv2 * (a * a > alpha) * 2.0 * a
    np.add.at(grad, (iu, iu), ga)
    np.add.at(grad, (ju, ju), -ga)
    np.add.at(grad, (iu, ju), -ga)
    np.add.at(grad, (ju, iu), ga)

    # dev b = (m_ii - m_ji) - (m_jj - m_ij)
    gb = wv2 * (b * b > alpha) * 2.0 * b
    np.add.at(grad, (iu, iu), gb)
    np.add.at(grad, (ju, ju), -gb)
    np.add.at(grad, (iu, ju), gb)
    np.add.at(grad, (ju, iu), -gb)

    return value, grad, n_close, n_distant


def pairwise_cosine(a, b):
    """All-pairs cosine similarity between the rows of a and b.

    Returns (cos matrix, row norms of a, row norms of b). Norm validation
    happens in the calling layer.
    """
    an = np.sqrt((a * a).sum(axis=1))
    bn = np.sqrt((b * b).sum(axis=1))
    cos = (a @ b.T) / np.outer(an, bn)
    return cos, an, bn


def pairwise_cosine_grad(a, b, an, bn, cos, dcos):
    """Backward pass of pairwise_cosine: returns (dL/da, dL/db)."""
    p = dcos / np.outer(an, bn)
    da = p @ b - a * ((dcos * cos).sum(axis=1) / (an * an))[:, None]
    db = p.T @ a - b * ((dcos * cos).sum(axis=0) / (bn * bn))[:, None]
    return da, db
