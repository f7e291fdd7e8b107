"""Numba-compiled loop implementations of the numeric hot kernels.

Same contracts as numpy_impl; selected by default when numba imports.
Results agree with the numpy backend to float64 reduction tolerance
(summation order differs, so expect ~1e-12 discrepancies, not exactness).
"""

import numpy as np
from numba import njit

from .modes import MODE_HYBRID, MODE_V1_ALL, MODE_V2_ALL, MODE_V2_CLOSE


@njit(cache=True)
def softmax_rows(scores):
    n = scores.shape[0]
    m = scores.shape[1]
    out = np.empty((n, m))
    for i in range(n):
        hi = scores[i, 0]
        for j in range(1, m):
            if scores[i, j] > hi:
                hi = scores[i, j]
        total = 0.0
        for j in range(m):
            out[i, j] = np.exp(scores[i, j] - hi)
            total += out[i, j]
        for j in range(m):
            out[i, j] /= total
    return out


@njit(cache=True)
def softmax_rows_vjp(probs, grad_out):
    n = probs.shape[0]
    m = probs.shape[1]
    out = np.empty((n, m))
    for i in range(n):
        inner = 0.0
        for j in range(m):
            inner += grad_out[i, j] * probs[i, j]
        for j in range(m):
            out[i, j] = probs[i, j] * (grad_out[i, j] - inner)
    return out


@njit(cache=True)
def itc_loss_grad(scores):
    n = scores.shape[0]
    grad = np.zeros((n, n))
    loss = 0.0
    # row direction
    for i in range(n):
        hi = scores[i, 0]
        for j in range(1, n):
            if scores[i, j] > hi:
                hi = scores[i, j]
        total = 0.0
        for j in range(n):
            total += np.exp(scores[i, j] - hi)
        loss += 0.5 * (np.log(total) + hi - scores[i, i]) / n
        for j in range(n):
            grad[i, j] += 0.5 / n * np.exp(scores[i, j] - hi) / total
    # column direction
    for j in range(n):
        hi = scores[0, j]
        for i in range(1, n):
            if scores[i, j] > hi:
                hi = scores[i, j]
        total = 0.0
        for i in range(n):
            total += np.exp(scores[i, j] - hi)
        loss += 0.5 * (np.log(total) + hi - scores[j, j]) / n
        for i in range(n):
            grad[i, j] += 0.5 / n * np.exp(scores[i, j] - hi) / total
    for i in range(n):
        grad[i, i] -= 1.0 / n
    return loss, grad


@njit(cache=True)
def itc_loss(scores):
    loss, _ = itc_loss_grad(scores)
    return loss


@njit(cache=True)
def _pair_counts(close_mask):
    n = close_mask.shape[0]
    n_pairs = n * (n - 1) // 2
    n_close = 0
    for i in range(n):
        for j in range(i + 1, n):
            if close_mask[i, j]:
                n_close += 1
    return n_pairs, n_close, n_pairs - n_close


@njit(cache=True)
def _mode_weights(mode, is_close, n_pairs, n_close, n_distant):
    w1 = 0.0
    w2 = 0.0
    if mode == MODE_HYBRID:
        if is_close and n_close > 0:
            w2 = 1.0 / n_close
        elif not is_close and n_distant > 0:
            w1 = 1.0 / n_distant
    elif mode == MODE_V1_ALL:
        w1 = 1.0 / n_pairs
    elif mode == MODE_V2_ALL:
        w2 = 1.0 / n_pairs
    elif mode == MODE_V2_CLOSE:
        if is_close and n_close > 0:
            w2 = 1.0 / n_close
    return w1, w2


@njit(cache=True)
def eq_value(mat, close_mask, alpha, mode):
    n = mat.shape[0]
    n_pairs, n_close, n_distant = _pair_counts(close_mask)
    value = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            w1, w2 = _mode_weights(mode, close_mask[i, j], n_pairs, n_close, n_distant)
            if w1 != 0.0:
                t = mat[i, j] - mat[j, i]
                h = t * t - alpha
                if h > 0.0:
                    value += w1 * h
            if w2 != 0.0:
                a = mat[i, i] - mat[i, j] - mat[j, j] + mat[j, i]
                b = mat[i, i] - mat[j, i] - mat[j, j] + mat[i, j]
                ha = a * a - alpha
                hb = b * b - alpha
                if ha > 0.0:
                    value += w2 * ha
                if hb > 0.0:
                    value += w2 * hb
    return value, n_close, n_distant


@njit(cache=True)
def eq_value_grad(mat, close_mask, alpha, mode):
    n = mat.shape[0]
    n_pairs, n_close, n_distant = _pair_counts(close_mask)
    grad = np.zeros((n, n))
    value = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            w1, w2 = _mode_weights(mode, close_mask[i, j], n_pairs, n_close, n_distant)
            if w1 != 0.0:
                t = mat[i, j] - mat[j, i]
                h = t * t - alpha
                if h > 0.0:
                    value += w1 * h
                    g = w1 * 2.0 * t
                    grad[i, j] += g
                    grad[j, i] -= g
            if w2 != 0.0:
                a = mat[i, i] - mat[i, j] - mat[j, j] + mat[j, i]
                b = mat[i, i] - mat[j, i] - mat[j, j] + mat[i, j]
                ha = a * a - alpha
                hb = b * b - alpha
                if ha > 0.0:
                    value += w2 * ha
                    g = w2 * 2.0 * a
                    grad[i, i] += g
                    grad[j, j] -= g
                    grad[i, j] -= g
                    grad[j, i] += g
                if hb > 0.0:
                    value += w2 * hb
                    g = w2 * 2.0 * b
                    grad[i, i] += g
                    grad[j, j] -= g
                    grad[i, j] += g
                    grad[j, i] -= g
    return value, grad, n_close, n_distant


@njit(cache=True)
def pairwise_cosine(a, b):
    n = a.shape[0]
    m = b.shape[0]
    d = a.shape[1]
    an = np.empty(n)
    bn = np.empty(m)
    for i in range(n):
        s = 0.0
        for k in range(d):
            s += a[i, k] * a[i, k]
        an[i] = np.sqrt(s)
    for j in range(m):
        s = 0.0
        for k in range(d):
            s += b[j, k] * b[j, k]
        bn[j] = np.sqrt(s)
    cos = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            dot = 0.0
            for k in range(d):
                dot += a[i, k] * b[j, k]
            cos[i, j] = dot / (an[i] * bn[j])
    return cos, an, bn


@njit(cache=True)
def pairwise_cosine_grad(a, b, an, bn, cos, dcos):
    n = a.shape[0]
    m = b.shape[0]
    d = a.shape[1]
    da = np.zeros((n, d))
    db = np.zeros((m, d))
    for i in range(n):
        for j in range(m):
            g = dcos[i, j]
            if g == 0.0:
                continue
            inv = 1.0 / (an[i] * bn[j])
            ca = g * cos[i, j] / (an[i] * an[i])
            cb = g * cos[i, j] / (bn[j] * bn[j])
            for k in range(d):
                da[i, k] += g * b[j, k] * inv - ca * a[i, k]
                db[j, k] += g * a[i, k] * inv - cb * b[j, k]
    return da, db
