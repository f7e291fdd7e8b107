"""Backend agreement: the numba kernels must match the numpy reference."""

import numpy as np
import pytest

from eqsim.kernels import MODE_CODES, numpy_impl

numba_impl = pytest.importorskip("eqsim.kernels.numba_impl")


def random_case(rng, n=8):
    scores = np.ascontiguousarray(rng.normal(size=(n, n)))
    mask = rng.random((n, n)) < 0.4
    mask = np.triu(mask, 1)
    mask = np.ascontiguousarray(mask | mask.T)
    return scores, mask


@pytest.mark.parametrize("seed", range(5))
def test_softmax_and_vjp_agree(seed):
    rng = np.random.default_rng(seed)
    scores, _ = random_case(rng)
    p1 = numpy_impl.softmax_rows(scores)
    p2 = numba_impl.softmax_rows(scores)
    np.testing.assert_allclose(p1, p2, atol=1e-12)
    grad_out = rng.normal(size=scores.shape)
    np.testing.assert_allclose(
        numpy_impl.softmax_rows_vjp(p1, grad_out),
        numba_impl.softmax_rows_vjp(p2, grad_out),
        atol=1e-12,
    )


@pytest.mark.parametrize("seed", range(5))
def test_itc_agrees(seed):
    rng = np.random.default_rng(seed)
    scores, _ = random_case(rng)
    l1, g1 = numpy_impl.itc_loss_grad(scores)
    l2, g2 = numba_impl.itc_loss_grad(scores)
    assert l1 == pytest.approx(l2, abs=1e-12)
    np.testing.assert_allclose(g1, g2, atol=1e-12)
    assert numba_impl.itc_loss(scores) == pytest.approx(l1, abs=1e-12)


@pytest.mark.parametrize("mode", sorted(MODE_CODES.values()))
@pytest.mark.parametrize("alpha", [0.0, 0.02])
def test_eq_value_and_grad_agree(mode, alpha):
    rng = np.random.default_rng(mode * 7 + 1)
    scores, mask = random_case(rng)
    v1, c1, d1 = numpy_impl.eq_value(scores, mask, alpha, mode)
    v2, c2, d2 = numba_impl.eq_value(scores, mask, alpha, mode)
    assert v1 == pytest.approx(v2, abs=1e-12)
    assert (c1, d1) == (c2, d2)
    vv1, g1, _, _ = numpy_impl.eq_value_grad(scores, mask, alpha, mode)
    vv2, g2, _, _ = numba_impl.eq_value_grad(scores, mask, alpha, mode)
    assert vv1 == pytest.approx(v1, abs=1e-12)
    assert vv2 == pytest.approx(v2, abs=1e-12)
    np.testing.assert_allclose(g1, g2, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_pairwise_cosine_agrees(seed):
    rng = np.random.default_rng(seed + 20)
    a = np.ascontiguousarray(rng.normal(size=(6, 5)))
    b = np.ascontiguousarray(rng.normal(size=(6, 5)))
    c1, an1, bn1 = numpy_impl.pairwise_cosine(a, b)
    c2, an2, bn2 = numba_impl.pairwise_cosine(a, b)
    np.testing.assert_allclose(c1, c2, atol=1e-12)
    np.testing.assert_allclose(an1, an2, atol=1e-12)
    dcos = rng.normal(size=(6, 6))
    da1, db1 = numpy_impl.pairwise_cosine_grad(a, b, an1, bn1, c1, dcos)
    da2, db2 = numba_impl.pairwise_cosine_grad(a, b, an2, bn2, c2, dcos)
    np.testing.assert_allclose(da1, da2, atol=1e-12)
    np.testing.assert_allclose(db1, db2, atol=1e-12)


def test_softmax_vjp_matches_finite_difference():
    rng = np.random.default_rng(40)
    scores = rng.normal(size=(4, 4))
    grad_out = rng.normal(size=(4, 4))
    analytic = numpy_impl.softmax_rows_vjp(numpy_impl.softmax_rows(scores), grad_out)
    h = 1e-6
    fd = np.zeros_like(scores)
    for i in range(4):
        for j in range(4):
            up, down = scores.copy(), scores.copy()
            up[i, j] += h
            down[i, j] -= h
            fd[i, j] = (
                (numpy_impl.softmax_rows(up) * grad_out).sum()
                - (numpy_impl.softmax_rows(down) * grad_out).sum()
            ) / (2 * h)
    np.testing.assert_allclose(analytic, fd, atol=1e-7)


def test_eq_value_respects_mode_weighting():
    rng = np.random.default_rng(50)
    scores, mask = random_case(rng, n=6)
    n_pairs = 15
    v_off, nc, nd = numpy_impl.eq_value(scores, mask, 0.0, MODE_CODES["off"])
    assert v_off == 0.0 and nc + nd == n_pairs
    v_hyb, _, _ = numpy_impl.eq_value(scores, mask, 0.0, MODE_CODES["hybrid"])
    v_v2c, _, _ = numpy_impl.eq_value(scores, mask, 0.0, MODE_CODES["v2_close_only"])
    # hybrid = (v2 mean over close) + (v1 mean over distant)
    iu, ju = np.triu_indices(6, 1)
    distant = ~mask[iu, ju]
    t = scores[iu, ju] - scores[ju, iu]
    v1_mean = float((t[distant] ** 2).mean()) if distant.any() else 0.0
    assert v_hyb == pytest.approx(v_v2c + v1_mean, abs=1e-12)
