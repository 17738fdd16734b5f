"""Reconstruction objective: worked values, gradients, reductions."""
import numpy as np
import pytest

from vadkit.errors import ConfigError, ShapeError
from vadkit.recon import recon_loss, recon_score

from conftest import assert_grads_close, fd_gradient


def test_loss_worked_examples():
    x = np.array([[1.0, 2.0]])
    assert recon_loss(x, x)[0] == 0.0
    loss, _ = recon_loss(x, np.zeros((1, 2)))
    assert loss == 5.0
    # batch mean of per-clip sums {2, 4} -> 3
    x2 = np.array([[np.sqrt(2.0), 0.0], [2.0, 0.0]])
    loss, _ = recon_loss(x2, np.zeros((2, 2)))
    assert abs(loss - 3.0) < 1e-12


def test_score_worked_examples():
    x = np.zeros((2, 3, 3, 1))
    assert recon_score(x, x) == 0.0
    xhat = x.copy()
    xhat[1, 2, 0, 0] = 0.5
    assert recon_score(x, xhat) == 0.25


def test_batch_of_one_loss_equals_score():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 6, 6, 3))
    xhat = rng.standard_normal((4, 6, 6, 3))
    loss, _ = recon_loss(x[None], xhat[None])
    assert abs(loss - recon_score(x, xhat)) < 1e-12


def test_shape_mismatch_is_an_error():
    with pytest.raises(ShapeError):
        recon_loss(np.zeros((1, 4)), np.zeros((1, 5)))
    with pytest.raises(ShapeError):
        recon_score(np.zeros((2, 2)), np.zeros((3, 2)))


def test_gradient_closed_form_and_fd():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 2, 4, 4, 1))
    xhat = rng.standard_normal((3, 2, 4, 4, 1))
    loss, g = recon_loss(x, xhat)
    assert np.allclose(g, 2.0 * (xhat - x) / 3.0)

    def loss_of(xh):
        return recon_loss(x, xh)[0]

    assert_grads_close(g, fd_gradient(loss_of, xhat.copy()), what="recon grad")


def test_mean_reduction_scales_by_clip_size():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 4, 4, 4, 3))
    xhat = rng.standard_normal((2, 4, 4, 4, 3))
    per_clip_elems = 4 * 4 * 4 * 3
    loss_sum, g_sum = recon_loss(x, xhat, reduction="sum")
    loss_mean, g_mean = recon_loss(x, xhat, reduction="mean")
    assert abs(loss_mean - loss_sum / per_clip_elems) < 1e-12
    assert np.allclose(g_mean, g_sum / per_clip_elems)


def test_unknown_reduction_is_an_error():
    with pytest.raises(ConfigError):
        recon_loss(np.zeros((1, 2)), np.zeros((1, 2)), reduction="median")


def test_scores_order_is_reduction_invariant():
    # both reductions rank clips identically (scale is per-batch constant)
    rng = np.random.default_rng(3)
    x = rng.standard_normal((5, 2, 2, 2, 3))
    xhat = rng.standard_normal((5, 2, 2, 2, 3))
    sums = [recon_score(x[i], xhat[i]) for i in range(5)]
    means = [recon_score(x[i], xhat[i]) / x[i].size for i in range(5)]
    assert np.argsort(sums).tolist() == np.argsort(means).tolist()
