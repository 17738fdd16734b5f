"""Optical flow estimation, quantization, and sidecar storage.

Flow is precomputed once per dataset and stored next to the frames as
single-channel images, one pair per consecutive frame pair: the file at
index t holds the flow from frame t to frame t+1.  Each component is
clamped to [-20, 20] px/frame and quantized to a byte:

    q = floor((clamp(v) + 20) / 40 * 255 + 0.5)

(round half away from zero, so v = 0 maps to 128).  Model inputs decode
bytes back to [-1, 1] via n = q / 255 * 2 - 1; the quantization step in
that normalized space is 2/255, so a lossless round trip is exact and a
decoded value never sits more than half a step from the clamped truth.

The reference estimator is a small pyramidal Horn-Schunck scheme: fully
deterministic for a fixed iteration budget, good enough for rigid sprite
motion.  Precomputed flow from a stronger external method can be dropped
in as ``rawflow_%06d.npy`` files and ingested with the external backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from . import layout
from .errors import ConfigError, DataError

FLOW_CLAMP = 20.0
JPEG_QUALITY = 95


@dataclass
class FlowField:
    """Dense flow for one frame pair, components in px/frame."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.ndim != 2:
            raise DataError(
                f"flow components must be matching 2-d arrays, "
                f"got {self.u.shape} and {self.v.shape}"
            )


@dataclass
class QuantizedFlowPair:
    """Byte-quantized flow for one frame pair."""

    u: np.ndarray
    v: np.ndarray


def encode_flow(field: FlowField) -> QuantizedFlowPair:
    def q(x):
        x = np.clip(x, -FLOW_CLAMP, FLOW_CLAMP)
        return np.floor((x + FLOW_CLAMP) / (2 * FLOW_CLAMP) * 255.0 + 0.5).astype(np.uint8)

    return QuantizedFlowPair(q(field.u), q(field.v))


def dequantize(q: np.ndarray) -> np.ndarray:
    """Bytes -> [-1, 1] model range."""
    return q.astype(np.float64) / 255.0 * 2.0 - 1.0


def decode_flow(pair: QuantizedFlowPair) -> FlowField:
    """Bytes -> px/frame (inverse of encode up to quantization error)."""
    return FlowField(
        dequantize(pair.u) * FLOW_CLAMP,
        dequantize(pair.v) * FLOW_CLAMP,
    )


def _to_gray(frame: np.ndarray) -> np.ndarray:
    a = np.asarray(frame, dtype=np.float64)
    if a.ndim == 3:
        if a.shape[2] == 1:
            a = a[:, :, 0]
        elif a.shape[2] == 3:
            a = 0.299 * a[:, :, 0] + 0.587 * a[:, :, 1] + 0.114 * a[:, :, 2]
        else:
            raise DataError(f"expected 1 or 3 channels, got shape {a.shape}")
    elif a.ndim != 2:
        raise DataError(f"expected a 2-d or 3-d frame, got shape {a.shape}")
    return a / 255.0


def _downsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h // 2, w // 2
    return img[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def _upsample_to(flow_comp: np.ndarray, shape, scale: float) -> np.ndarray:
    hi = np.zeros(shape)
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    src_y = yy * (flow_comp.shape[0] - 1) / max(shape[0] - 1, 1)
    src_x = xx * (flow_comp.shape[1] - 1) / max(shape[1] - 1, 1)
    ndimage.map_coordinates(flow_comp, [src_y, src_x], output=hi, order=1, mode="nearest")
    return hi * scale


def _warp(img: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    yy, xx = np.mgrid[0 : img.shape[0], 0 : img.shape[1]]
    return ndimage.map_coordinates(img, [yy + v, xx + u], order=1, mode="nearest")


_AVG_KERNEL = np.array(
    [[1 / 12, 1 / 6, 1 / 12], [1 / 6, 0.0, 1 / 6], [1 / 12, 1 / 6, 1 / 12]]
)


class ReferenceFlowBackend:
    """Pyramidal Horn-Schunck estimator.

    Coarse-to-fine over a mean-pool pyramid; at each level the second
    frame is warped by the current flow and a Horn-Schunck increment is
    iterated on the residual.  Identical frames yield exactly zero flow.
    """

    name = "reference"

    def __init__(self, alpha: float = 1.5, iterations: int = 60,
                 levels: int = 3, warps: int = 2):
        if alpha <= 0 or iterations < 1 or levels < 1 or warps < 1:
            raise ConfigError("flow backend parameters must be positive")
        self.alpha = alpha
        self.iterations = iterations
        self.levels = levels
        self.warps = warps

    def __call__(self, frame_a, frame_b, context=None) -> FlowField:
        a = _to_gray(frame_a)
        b = _to_gray(frame_b)
        if a.shape != b.shape:
            raise DataError(f"frame shapes differ: {a.shape} vs {b.shape}")

        pyr_a, pyr_b = [a], [b]
        for _ in range(self.levels - 1):
            if min(pyr_a[-1].shape) < 16:
                break
            pyr_a.append(_downsample2(pyr_a[-1]))
            pyr_b.append(_downsample2(pyr_b[-1]))

        u = np.zeros_like(pyr_a[-1])
        v = np.zeros_like(pyr_a[-1])
        for level in range(len(pyr_a) - 1, -1, -1):
            al, bl = pyr_a[level], pyr_b[level]
            if u.shape != al.shape:
                scale_y = al.shape[0] / u.shape[0]
                scale_x = al.shape[1] / u.shape[1]
                u = _upsample_to(u, al.shape, scale_x)
                v = _upsample_to(v, al.shape, scale_y)
            for _ in range(self.warps):
                bw = _warp(bl, u, v)
                iy, ix = np.gradient(bw)
                it = bw - al
                du = np.zeros_like(u)
                dv = np.zeros_like(v)
                denom = self.alpha**2 + ix**2 + iy**2
                for _ in range(self.iterations):
                    du_bar = ndimage.convolve(du, _AVG_KERNEL, mode="nearest")
                    dv_bar = ndimage.convolve(dv, _AVG_KERNEL, mode="nearest")
                    common = (ix * du_bar + iy * dv_bar + it) / denom
                    du = du_bar - ix * common
                    dv = dv_bar - iy * common
                u = u + du
                v = v + dv
        return FlowField(u, v)


class ExternalFlowBackend:
    """Ingests precomputed flow from ``rawflow_%06d.npy`` files (H, W, 2)
    in px/frame, u then v, living beside the frames."""

    name = "external"

    def __call__(self, frame_a, frame_b, context=None) -> FlowField:
        if context is None:
            raise DataError(
                "external flow backend needs a (video_dir, pair_index) context; "
                "it cannot estimate flow from pixels"
            )
        vdir, t = context
        path = Path(vdir) / f"rawflow_{t:06d}.npy"
        if not path.exists():
            raise DataError(f"missing external flow file {path}")
        raw = np.load(path)
        expected = np.asarray(frame_a).shape[:2] + (2,)
        if raw.shape != expected:
            raise DataError(
                f"external flow {path} has shape {raw.shape}, expected {expected}"
            )
        return FlowField(raw[:, :, 0].astype(np.float64), raw[:, :, 1].astype(np.float64))


_BACKENDS = {"reference": ReferenceFlowBackend, "external": ExternalFlowBackend}


def get_backend(backend) -> object:
    if callable(backend):
        return backend
    if isinstance(backend, str):
        if backend not in _BACKENDS:
            raise ConfigError(
                f"unknown flow backend {backend!r}; known: {sorted(_BACKENDS)}"
            )
        return _BACKENDS[backend]()
    raise ConfigError(f"flow backend must be a name or callable, got {type(backend)}")


def estimate_flow(frame_a, frame_b, backend="reference") -> FlowField:
    return get_backend(backend)(frame_a, frame_b)


def _save_component(q: np.ndarray, path: Path, storage: str) -> None:
    img = Image.fromarray(q, mode="L")
    if storage == "lossless":
        img.save(path.with_suffix(".png"))
    elif storage == "jpeg":
        img.save(path.with_suffix(".jpg"), quality=JPEG_QUALITY)
    else:
        raise ConfigError(f"unknown flow storage {storage!r}; known: jpeg, lossless")


def precompute_flow(root, backend="reference", storage="lossless",
                    splits=layout.SPLITS, progress=None) -> int:
    """Write flow sidecars for every consecutive frame pair under ``root``.

    Returns the number of pairs written.  Storage 'lossless' keeps the
    quantized bytes exact; 'jpeg' matches pipelines that archive flow as
    compressed imagery and trades a little fidelity for size.
    """
    backend = get_backend(backend)
    if storage not in ("lossless", "jpeg"):
        raise ConfigError(f"unknown flow storage {storage!r}; known: jpeg, lossless")
    root = Path(root)
    written = 0
    for split in splits:
        for vid in layout.list_videos(root, split):
            vdir = layout.video_dir(root, split, vid)
            n = layout.n_frames(vdir)
            if n < 2:
                raise DataError(f"video {vid} has {n} frame(s); need at least 2 for flow")
            frames = [np.asarray(Image.open(layout.frame_path(vdir, i))) for i in range(n)]
            for t in range(n - 1):
                field = backend(frames[t], frames[t + 1], context=(vdir, t))
                pair = encode_flow(field)
                _save_component(pair.u, vdir / (layout.FLOW_U_FMT % t), storage)
                _save_component(pair.v, vdir / (layout.FLOW_V_FMT % t), storage)
                written += 1
            if progress is not None:
                progress(f"{split}/{vid}: {n - 1} flow pairs")
    return written


def load_flow_channels(vdir, n_frames: int) -> np.ndarray:
    """Decoded flow stack, shape (n_frames-1, H, W, 2), values in [-1, 1].

    Index t is the flow for pair (t, t+1)."""
    vdir = Path(vdir)
    stack = None
    for t in range(n_frames - 1):
        upath, vpath = layout.flow_paths(vdir, t)
        if not (upath.exists() and vpath.exists()):
            raise DataError(
                f"video {vdir.name}: missing flow sidecar for pair {t} "
                f"(expected {upath.name}); run flow precomputation first"
            )
        qu = np.asarray(Image.open(upath))
        qv = np.asarray(Image.open(vpath))
        if stack is None:
            stack = np.empty((n_frames - 1,) + qu.shape + (2,), dtype=np.float64)
        stack[t, :, :, 0] = dequantize(qu)
        stack[t, :, :, 1] = dequantize(qv)
    if stack is None:
        raise DataError(f"video {vdir.name}: no frame pairs to load flow for")
    return stack
