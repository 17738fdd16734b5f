"""Numerics core: convolution oracles, adjoint identities, finite-difference
gradient checks, and optimizer state round trips."""
import numpy as np
import pytest

from vadkit.nn import (
    Adam,
    Conv3d,
    ConvTranspose3d,
    GlobalMeanPool,
    Linear,
    Param,
    ReLU,
    Sequential,
    Tanh,
    conv_out_size,
    he_normal,
)

from conftest import assert_grads_close, fd_gradient


def conv3d_oracle(x, w, stride, pad):
    """Direct nested-loop 3d convolution, channels last.  Deliberately
    naive; the reference the vectorized path is checked against."""
    n, t, h, wd, cin = x.shape
    kt, kh, kw, _, cout = w.shape
    st, sh, sw = stride
    pt, ph, pw = pad
    xp = np.zeros((n, t + 2 * pt, h + 2 * ph, wd + 2 * pw, cin))
    xp[:, pt:pt + t, ph:ph + h, pw:pw + wd] = x
    ot = conv_out_size(t, kt, st, pt)
    oh = conv_out_size(h, kh, sh, ph)
    ow = conv_out_size(wd, kw, sw, pw)
    y = np.zeros((n, ot, oh, ow, cout))
    for b in range(n):
        for i in range(ot):
            for j in range(oh):
                for k in range(ow):
                    patch = xp[b, i * st:i * st + kt, j * sh:j * sh + kh,
                               k * sw:k * sw + kw]
                    for co in range(cout):
                        y[b, i, j, k, co] = np.sum(patch * w[..., co])
    return y


def test_conv_out_size_examples():
    assert conv_out_size(64, 3, 2, 1) == 32
    assert conv_out_size(64, 4, 4, 0) == 16
    assert conv_out_size(7, 3, 1, 1) == 7


def test_conv3d_matches_naive_oracle():
    rng = np.random.default_rng(0)
    for stride, pad, kernel in [((1, 1, 1), (1, 1, 1), (3, 3, 3)),
                                ((2, 2, 2), (1, 1, 1), (3, 3, 3)),
                                ((1, 2, 2), (0, 1, 1), (1, 3, 3)),
                                ((1, 4, 4), (0, 0, 0), (1, 4, 4))]:
        conv = Conv3d(2, 3, kernel=kernel, stride=stride, pad=pad, rng=rng)
        x = rng.standard_normal((2, 4, 8, 8, 2))
        got = conv.forward(x, cache=False)
        want = conv3d_oracle(x, conv.w.value, stride, pad)
        assert got.shape == want.shape
        assert np.max(np.abs(got - want)) < 1e-10


def test_conv_transpose_is_conv_adjoint():
    # <y, C(x)> == <C^T(y), x> for matching geometry; this pins the
    # transposed convolution to the exact adjoint of the forward conv.
    rng = np.random.default_rng(1)
    conv = Conv3d(3, 4, kernel=3, stride=2, pad=1, rng=rng)
    tconv = ConvTranspose3d(4, 3, kernel=3, stride=2, pad=1, output_pad=1,
                            rng=None)
    # same (kt, kh, kw) taps, channel axes reinterpreted (out, in) <- (in, out)
    tconv.w.value = conv.w.value.copy()
    x = rng.standard_normal((2, 4, 8, 8, 3))
    y = rng.standard_normal((2, 2, 4, 4, 4))
    lhs = np.sum(y * conv.forward(x, cache=False))
    rhs = np.sum(tconv.forward(y, cache=False) * x)
    assert abs(lhs - rhs) < 1e-9


@pytest.mark.parametrize("layer_fn,x_shape", [
    (lambda rng: Conv3d(2, 3, kernel=3, stride=(1, 2, 2), pad=1, rng=rng),
     (2, 3, 6, 6, 2)),
    (lambda rng: ConvTranspose3d(3, 2, kernel=3, stride=2, pad=1,
                                 output_pad=1, rng=rng), (2, 2, 3, 3, 3)),
    (lambda rng: ConvTranspose3d(3, 2, kernel=4, stride=4, pad=0,
                                 output_pad=0, rng=rng), (1, 2, 2, 2, 3)),
    (lambda rng: Linear(5, 3, rng=rng), (4, 5)),
    (lambda rng: GlobalMeanPool(), (2, 3, 4, 4, 5)),
    (lambda rng: ReLU(), (2, 3, 4, 4, 2)),
    (lambda rng: Tanh(), (2, 3, 4, 4, 2)),
])
def test_layer_gradients_match_finite_differences(layer_fn, x_shape):
    rng = np.random.default_rng(2)
    layer = layer_fn(rng)
    x = rng.standard_normal(x_shape)
    r = rng.standard_normal(layer.forward(x, cache=False).shape)

    def loss_of_x(xv):
        return float(np.sum(layer.forward(xv, cache=False) * r))

    y = layer.forward(x, cache=True)
    gx = layer.backward(r)
    assert_grads_close(gx, fd_gradient(loss_of_x, x.copy()), what="input grad")

    for p in layer.params():
        def loss_of_p(pv, p=p):
            keep = p.value
            p.value = pv
            out = float(np.sum(layer.forward(x, cache=False) * r))
            p.value = keep
            return out

        fd = fd_gradient(loss_of_p, p.value.copy())
        assert_grads_close(p.grad, fd, what=f"param {p.name}")


def test_sequential_chain_gradient():
    rng = np.random.default_rng(3)
    net = Sequential([
        Conv3d(1, 2, kernel=3, stride=2, pad=1, rng=rng, name="c0"),
        ReLU(),
        Conv3d(2, 2, kernel=3, stride=(1, 2, 2), pad=1, rng=rng, name="c1"),
        Tanh(),
    ])
    x = rng.standard_normal((2, 4, 8, 8, 1))
    r = rng.standard_normal(net.forward(x, cache=False).shape)
    net.forward(x, cache=True)
    gx = net.backward(r)

    def loss_of_x(xv):
        return float(np.sum(net.forward(xv, cache=False) * r))

    assert_grads_close(gx, fd_gradient(loss_of_x, x.copy()), what="chain input")
    for p in net.params():
        def loss_of_p(pv, p=p):
            keep = p.value
            p.value = pv
            out = float(np.sum(net.forward(x, cache=False) * r))
            p.value = keep
            return out

        assert_grads_close(p.grad, fd_gradient(loss_of_p, p.value.copy()),
                           what=f"chain param {p.name}")


def test_gradients_accumulate_across_backward_calls():
    rng = np.random.default_rng(4)
    lin = Linear(3, 2, rng=rng)
    x = rng.standard_normal((5, 3))
    gy = rng.standard_normal((5, 2))
    lin.forward(x, cache=True)
    lin.backward(gy)
    once = lin.w.grad.copy()
    lin.forward(x, cache=True)
    lin.backward(gy)
    assert np.allclose(lin.w.grad, 2 * once)
    lin.w.zero_grad()
    assert np.all(lin.w.grad == 0)


def test_he_normal_is_seeded_and_scaled():
    a = he_normal(np.random.default_rng(7), (50, 40), fan_in=40)
    b = he_normal(np.random.default_rng(7), (50, 40), fan_in=40)
    assert np.array_equal(a, b)
    # std should be near sqrt(2/fan_in)
    assert abs(a.std() - np.sqrt(2.0 / 40)) < 0.02


def test_adam_single_step_matches_hand_computation():
    p = Param(np.array([1.0]), "w")
    opt = Adam([p], lr=0.1)
    p.grad[:] = 2.0
    opt.step()
    # bias-corrected Adam first step moves by lr * g/|g| = lr (eps-small)
    m = 0.1 * 2.0
    v = 0.001 * 4.0
    mhat = m / (1 - 0.9)
    vhat = v / (1 - 0.999)
    want = 1.0 - 0.1 * mhat / (np.sqrt(vhat) + 1e-8)
    assert abs(p.value[0] - want) < 1e-12


def test_adam_state_round_trip_continues_identically():
    rng = np.random.default_rng(5)
    lin_a = Linear(4, 3, rng=np.random.default_rng(9))
    lin_b = Linear(4, 3, rng=np.random.default_rng(9))
    x = rng.standard_normal((6, 4))
    opt_a = Adam(lin_a.params(), lr=1e-2)
    opt_b = Adam(lin_b.params(), lr=1e-2)

    def step(lin, opt):
        opt.zero_grad()
        y = lin.forward(x, cache=True)
        lin.backward(2 * y)
        opt.step()

    for _ in range(3):
        step(lin_a, opt_a)
    state = {k: v.copy() for k, v in opt_a.state_arrays().items()}

    for _ in range(3):
        step(lin_b, opt_b)
    lin_b.w.value = lin_a.w.value.copy()
    opt_b.load_state_arrays(state)

    for _ in range(2):
        step(lin_a, opt_a)
        step(lin_b, opt_b)
    assert np.array_equal(lin_a.w.value, lin_b.w.value)


def test_param_requires_array_and_keeps_name():
    p = Param(np.zeros((2, 2)), "theta")
    assert p.name == "theta"
    assert p.grad.shape == (2, 2)
