"""Minimal neural-network core on numpy arrays.

Layers operate on channels-last tensors: video volumes are
``(N, T, H, W, C)`` and feature matrices are ``(N, D)``.  Every layer
implements an explicit analytic backward pass; there is no tape.  All
computation is deterministic for a fixed BLAS configuration, and float64
is the default dtype so finite-difference checks hold tightly.

Conventions:
  * ``forward(x, cache=True)`` stores what backward needs on the layer;
    ``cache=False`` is for inference and keeps memory flat.
  * ``backward(gy)`` returns the input gradient and accumulates parameter
    gradients in place (call ``zero_grad`` between steps).
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


class Param:
    """A learnable array plus its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, value: np.ndarray, name: str):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    def zero_grad(self):
        self.grad[...] = 0.0


def he_normal(rng: np.random.Generator, shape, fan_in: int, gain: float = 2.0,
              dtype=np.float64) -> np.ndarray:
    """Fan-in scaled normal init; gain 2 for ReLU layers, 1 elsewhere."""
    std = np.sqrt(gain / fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)


def _triple(v) -> tuple[int, int, int]:
    if isinstance(v, int):
        return (v, v, v)
    t = tuple(int(x) for x in v)
    if len(t) != 3:
        raise ValueError(f"expected int or 3-tuple, got {v!r}")
    return t


def conv_out_size(size: int, kernel: int, stride: int, pad: int) -> int:
    out = (size + 2 * pad - kernel) // stride + 1
    if out < 1:
        raise ShapeError(
            f"convolution reduces size {size} below 1 "
            f"(kernel={kernel}, stride={stride}, pad={pad})"
        )
    return out


def _im2col(xp: np.ndarray, kernel, stride, out_dims) -> np.ndarray:
    """Gather sliding patches of a padded (N,T,H,W,C) array.

    Returns a (N*To*Ho*Wo, kt*kh*kw*C) matrix (a copy, laid out for GEMM).
    """
    n, _, _, _, c = xp.shape
    kt, kh, kw = kernel
    st, sh, sw = stride
    to, ho, wo = out_dims
    sn, st_b, sh_b, sw_b, sc = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, to, ho, wo, kt, kh, kw, c),
        strides=(sn, st_b * st, sh_b * sh, sw_b * sw, st_b, sh_b, sw_b, sc),
        writeable=False,
    )
    return view.reshape(n * to * ho * wo, kt * kh * kw * c)


def _col2im(gcols: np.ndarray, pad_shape, kernel, stride, out_dims) -> np.ndarray:
    """Scatter-add patch gradients back onto the padded input grid."""
    n, _, _, _, c = pad_shape
    kt, kh, kw = kernel
    st, sh, sw = stride
    to, ho, wo = out_dims
    g = gcols.reshape(n, to, ho, wo, kt, kh, kw, c)
    gxp = np.zeros(pad_shape, dtype=gcols.dtype)
    for a in range(kt):
        for b in range(kh):
            for d in range(kw):
                gxp[:, a:a + to * st:st, b:b + ho * sh:sh, d:d + wo * sw:sw, :] += \
                    g[:, :, :, :, a, b, d, :]
    return gxp


def _pad5(x: np.ndarray, pad) -> np.ndarray:
    pt, ph, pw = pad
    if pt == ph == pw == 0:
        return x
    return np.pad(x, ((0, 0), (pt, pt), (ph, ph), (pw, pw), (0, 0)))


class Layer:
    def params(self) -> list[Param]:
        return []

    def forward(self, x, cache: bool = True):
        raise NotImplementedError

    def backward(self, gy):
        raise NotImplementedError

    def __call__(self, x, cache: bool = True):
        return self.forward(x, cache=cache)


class Conv3d(Layer):
    """Strided 3D convolution on (N, T, H, W, C) volumes.

    Weight layout is (kt, kh, kw, c_in, c_out) so the GEMM form is
    ``im2col(x) @ weight.reshape(-1, c_out)``.
    """

    def __init__(self, c_in: int, c_out: int, kernel=3, stride=1, pad=1,
                 bias: bool = False, rng: np.random.Generator | None = None,
                 name: str = "conv", gain: float = 2.0, dtype=np.float64):
        self.c_in = c_in
        self.c_out = c_out
        self.kernel = _triple(kernel)
        self.stride = _triple(stride)
        self.pad = _triple(pad)
        kt, kh, kw = self.kernel
        fan_in = kt * kh * kw * c_in
        if rng is None:
            w = np.zeros((kt, kh, kw, c_in, c_out), dtype=dtype)
        else:
            w = he_normal(rng, (kt, kh, kw, c_in, c_out), fan_in, gain, dtype)
        self.w = Param(w, f"{name}.w")
        self.b = Param(np.zeros(c_out, dtype=dtype), f"{name}.b") if bias else None
        self._cache = None

    def params(self):
        return [self.w] + ([self.b] if self.b is not None else [])

    def out_dims(self, in_dims) -> tuple[int, int, int]:
        return tuple(
            conv_out_size(s, k, st, p)
            for s, k, st, p in zip(in_dims, self.kernel, self.stride, self.pad)
        )

    def forward(self, x, cache: bool = True):
        if x.ndim != 5 or x.shape[4] != self.c_in:
            raise ShapeError(
                f"{self.w.name}: expected (N,T,H,W,{self.c_in}) input, got {x.shape}"
            )
        n = x.shape[0]
        out_dims = self.out_dims(x.shape[1:4])
        xp = _pad5(x, self.pad)
        cols = _im2col(xp, self.kernel, self.stride, out_dims)
        y = cols @ self.w.value.reshape(-1, self.c_out)
        if self.b is not None:
            y += self.b.value
        y = y.reshape(n, *out_dims, self.c_out)
        if cache:
            self._cache = (cols, xp.shape, out_dims)
        return y

    def backward(self, gy):
        cols, pad_shape, out_dims = self._cache
        gy_mat = gy.reshape(-1, self.c_out)
        self.w.grad += (cols.T @ gy_mat).reshape(self.w.value.shape)
        if self.b is not None:
            self.b.grad += gy_mat.sum(axis=0)
        gcols = gy_mat @ self.w.value.reshape(-1, self.c_out).T
        gxp = _col2im(gcols, pad_shape, self.kernel, self.stride, out_dims)
        pt, ph, pw = self.pad
        n, tp, hp, wp, _ = pad_shape
        return gxp[:, pt:tp - pt, ph:hp - ph, pw:wp - pw, :]


class ConvTranspose3d(Layer):
    """Transposed 3D convolution (the adjoint of Conv3d's forward map).

    Weight layout (kt, kh, kw, c_out, c_in): forward scatters
    ``x @ weight.reshape(-1, c_in).T`` patches onto the output grid.
    Output size per axis: (in - 1) * stride - 2 * pad + kernel + output_pad.
    """

    def __init__(self, c_in: int, c_out: int, kernel=3, stride=1, pad=1,
                 output_pad=0, bias: bool = False,
                 rng: np.random.Generator | None = None, name: str = "convT",
                 gain: float = 2.0, dtype=np.float64):
        self.c_in = c_in
        self.c_out = c_out
        self.kernel = _triple(kernel)
        self.stride = _triple(stride)
        self.pad = _triple(pad)
        self.output_pad = _triple(output_pad)
        for s, p, op in zip(self.stride, self.pad, self.output_pad):
            if op >= max(s, 1) and op != 0:
                raise ShapeError(f"output_pad {op} must be < stride {s}")
        kt, kh, kw = self.kernel
        fan_in = kt * kh * kw * c_in  # scatter fan: each input cell feeds k^3 outputs
        if rng is None:
            w = np.zeros((kt, kh, kw, c_out, c_in), dtype=dtype)
        else:
            w = he_normal(rng, (kt, kh, kw, c_out, c_in), fan_in, gain, dtype)
        self.w = Param(w, f"{name}.w")
        self.b = Param(np.zeros(c_out, dtype=dtype), f"{name}.b") if bias else None
        self._cache = None

    def params(self):
        return [self.w] + ([self.b] if self.b is not None else [])

    def out_dims(self, in_dims) -> tuple[int, int, int]:
        dims = []
        for s, k, st, p, op in zip(in_dims, self.kernel, self.stride,
                                   self.pad, self.output_pad):
            out = (s - 1) * st - 2 * p + k + op
            if out < 1:
                raise ShapeError("transposed convolution output collapsed below 1")
            dims.append(out)
        return tuple(dims)

    def _full_dims(self, in_dims):
        # scatter grid before crop; trailing output_pad cells stay zero
        return tuple(
            (s - 1) * st + k + op
            for s, k, st, op in zip(in_dims, self.kernel, self.stride, self.output_pad)
        )

    def forward(self, x, cache: bool = True):
        if x.ndim != 5 or x.shape[4] != self.c_in:
            raise ShapeError(
                f"{self.w.name}: expected (N,T,H,W,{self.c_in}) input, got {x.shape}"
            )
        n = x.shape[0]
        in_dims = x.shape[1:4]
        out_dims = self.out_dims(in_dims)
        full_dims = self._full_dims(in_dims)
        kt, kh, kw = self.kernel
        x_mat = x.reshape(-1, self.c_in)
        patches = x_mat @ self.w.value.reshape(-1, self.c_in).T
        full = _col2im(
            patches, (n, *full_dims, self.c_out), self.kernel, self.stride, in_dims
        )
        pt, ph, pw = self.pad
        to, ho, wo = out_dims
        y = full[:, pt:pt + to, ph:ph + ho, pw:pw + wo, :]
        if self.b is not None:
            y = y + self.b.value
        if cache:
            self._cache = (x_mat, in_dims, full_dims, out_dims)
        return np.ascontiguousarray(y)

    def backward(self, gy):
        x_mat, in_dims, full_dims, out_dims = self._cache
        n = gy.shape[0]
        pt, ph, pw = self.pad
        to, ho, wo = out_dims
        gfull = np.zeros((n, *full_dims, self.c_out), dtype=gy.dtype)
        gfull[:, pt:pt + to, ph:ph + ho, pw:pw + wo, :] = gy
        gcols = _im2col(gfull, self.kernel, self.stride, in_dims)
        self.w.grad += (gcols.T @ x_mat).reshape(self.w.value.shape)
        if self.b is not None:
            self.b.grad += gy.reshape(-1, self.c_out).sum(axis=0)
        gx = gcols @ self.w.value.reshape(-1, self.c_in)
        return gx.reshape(n, *in_dims, self.c_in)


class Linear(Layer):
    def __init__(self, d_in: int, d_out: int, bias: bool = False,
                 rng: np.random.Generator | None = None, name: str = "linear",
                 gain: float = 1.0, dtype=np.float64):
        self.d_in = d_in
        self.d_out = d_out
        if rng is None:
            w = np.zeros((d_in, d_out), dtype=dtype)
        else:
            w = he_normal(rng, (d_in, d_out), d_in, gain, dtype)
        self.w = Param(w, f"{name}.w")
        self.b = Param(np.zeros(d_out, dtype=dtype), f"{name}.b") if bias else None
        self._cache = None

    def params(self):
        return [self.w] + ([self.b] if self.b is not None else [])

    def forward(self, x, cache: bool = True):
        if x.shape[-1] != self.d_in:
            raise ShapeError(
                f"{self.w.name}: expected last dim {self.d_in}, got {x.shape}"
            )
        y = x @ self.w.value
        if self.b is not None:
            y = y + self.b.value
        if cache:
            self._cache = x
        return y

    def backward(self, gy):
        x = self._cache
        self.w.grad += x.reshape(-1, self.d_in).T @ gy.reshape(-1, self.d_out)
        if self.b is not None:
            self.b.grad += gy.reshape(-1, self.d_out).sum(axis=0)
        return gy @ self.w.value.T


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x, cache: bool = True):
        y = np.maximum(x, 0.0)
        if cache:
            self._mask = x > 0.0
        return y

    def backward(self, gy):
        return gy * self._mask


class Tanh(Layer):
    def __init__(self):
        self._y = None

    def forward(self, x, cache: bool = True):
        y = np.tanh(x)
        if cache:
            self._y = y
        return y

    def backward(self, gy):
        return gy * (1.0 - self._y * self._y)


class GlobalMeanPool(Layer):
    """Mean over the (T, H, W) axes: (N,T,H,W,C) -> (N,C)."""

    def __init__(self):
        self._in_shape = None

    def forward(self, x, cache: bool = True):
        if cache:
            self._in_shape = x.shape
        return x.mean(axis=(1, 2, 3))

    def backward(self, gy):
        n, t, h, w, c = self._in_shape
        scale = 1.0 / (t * h * w)
        return np.broadcast_to(
            gy[:, None, None, None, :] * scale, self._in_shape
        ).copy()


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def forward(self, x, cache: bool = True):
        for layer in self.layers:
            x = layer.forward(x, cache=cache)
        return x

    def backward(self, gy):
        for layer in reversed(self.layers):
            gy = layer.backward(gy)
        return gy


class Adam:
    """Adam with bias correction; state round-trips through checkpoints."""

    def __init__(self, params: list[Param], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {"adam.t": np.array(self.t, dtype=np.int64)}
        for p, m, v in zip(self.params, self.m, self.v):
            out[f"adam.m.{p.name}"] = m
            out[f"adam.v.{p.name}"] = v
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]):
        self.t = int(arrays["adam.t"])
        for i, p in enumerate(self.params):
            self.m[i] = arrays[f"adam.m.{p.name}"].copy()
            self.v[i] = arrays[f"adam.v.{p.name}"].copy()
