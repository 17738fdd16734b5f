"""3D convolutional encoder/decoder with a declarative shape plan.

A backbone is described by its input shape and a list of stages, each a
(channels, stride) pair.  Kernel and padding per axis follow one rule so
that every stage divides its input exactly and the mirrored decoder
restores it exactly:

  * stride 1 or 2   -> kernel 3, pad 1
  * stride s >= 3   -> kernel s, pad 0 (non-overlapping tiles)

The decoder mirrors the stages with transposed convolutions
(output_pad = stride - 1 on the kernel-3 path) and ends in tanh so
reconstructions live in [-1, 1] like clips do.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ShapeError
from .nn import Conv3d, ConvTranspose3d, GlobalMeanPool, Linear, ReLU, Sequential, Tanh


@dataclass(frozen=True)
class Stage:
    channels: int
    stride: tuple[int, int, int]


def _axis_plan(stride: int) -> tuple[int, int, int]:
    """(kernel, pad, output_pad) for one axis of one stage."""
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    if stride <= 2:
        return 3, 1, stride - 1
    return stride, 0, 0


@dataclass(frozen=True)
class BackboneConfig:
    """Shape contract for the encoder/decoder pair.

    input_shape is (T, H, W, C); bottleneck_shape is derived and validated
    at construction, so an invalid stride plan fails fast.
    """

    input_shape: tuple[int, int, int, int]
    stages: tuple[Stage, ...]
    z_dim: int = 128
    bottleneck_shape: tuple[int, int, int, int] = field(init=False)

    def __post_init__(self):
        if len(self.input_shape) != 4:
            raise ConfigError(f"input_shape must be (T,H,W,C), got {self.input_shape}")
        if not self.stages:
            raise ConfigError("at least one stage required")
        if self.z_dim < 1:
            raise ConfigError("z_dim must be positive")
        dims = list(self.input_shape[:3])
        for i, st in enumerate(self.stages):
            for ax in range(3):
                s = st.stride[ax]
                if s < 1:
                    raise ConfigError(f"stage {i}: stride must be >= 1, got {s}")
                if dims[ax] % s != 0:
                    raise ConfigError(
                        f"stage {i}: size {dims[ax]} not divisible by stride {s} "
                        f"on axis {ax}"
                    )
                dims[ax] //= s
        object.__setattr__(
            self, "bottleneck_shape", (*dims, self.stages[-1].channels)
        )

    @property
    def in_channels(self) -> int:
        return self.input_shape[3]

    @property
    def feature_dim(self) -> int:
        return self.bottleneck_shape[3]

    def with_input_channels(self, c: int) -> "BackboneConfig":
        t, h, w, _ = self.input_shape
        return replace(self, input_shape=(t, h, w, c))

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "stages": [[s.channels, list(s.stride)] for s in self.stages],
            "z_dim": self.z_dim,
        }

    @staticmethod
    def from_dict(d: dict) -> "BackboneConfig":
        return BackboneConfig(
            input_shape=tuple(d["input_shape"]),
            stages=tuple(Stage(c, tuple(s)) for c, s in d["stages"]),
            z_dim=int(d.get("z_dim", 128)),
        )


def _stage_geometry(stride):
    kernel, pad, opad = [], [], []
    for s in stride:
        k, p, op = _axis_plan(s)
        kernel.append(k)
        pad.append(p)
        opad.append(op)
    return tuple(kernel), tuple(pad), tuple(opad)


def build_encoder(cfg: BackboneConfig, rng: np.random.Generator | None,
                  bias: bool = False, dtype=np.float64) -> Sequential:
    layers: list = []
    c_prev = cfg.in_channels
    for i, st in enumerate(cfg.stages):
        kernel, pad, _ = _stage_geometry(st.stride)
        layers.append(Conv3d(c_prev, st.channels, kernel=kernel, stride=st.stride,
                             pad=pad, bias=bias, rng=rng, name=f"enc{i}",
                             gain=2.0, dtype=dtype))
        layers.append(ReLU())
        c_prev = st.channels
    return Sequential(layers)


def build_decoder(cfg: BackboneConfig, rng: np.random.Generator | None,
                  bias: bool = False, in_channels: int | None = None,
                  dtype=np.float64) -> Sequential:
    """Mirror of the encoder; in_channels overrides the first layer's input
    width (used when a fused bottleneck doubles the channel count)."""
    layers: list = []
    c_prev = in_channels if in_channels is not None else cfg.feature_dim
    n = len(cfg.stages)
    for i in range(n - 1, -1, -1):
        st = cfg.stages[i]
        kernel, pad, opad = _stage_geometry(st.stride)
        last = i == 0
        c_out = cfg.in_channels if last else cfg.stages[i - 1].channels
        layers.append(ConvTranspose3d(c_prev, c_out, kernel=kernel,
                                      stride=st.stride, pad=pad, output_pad=opad,
                                      bias=bias, rng=rng, name=f"dec{n - 1 - i}",
                                      gain=1.0 if last else 2.0, dtype=dtype))
        layers.append(Tanh() if last else ReLU())
        c_prev = c_out
    return Sequential(layers)


class OcHead:
    """Global average pool over (T',H',W') followed by a bias-free linear
    map to the Z-dimensional one-class feature space."""

    def __init__(self, d: int, z_dim: int, rng: np.random.Generator | None,
                 dtype=np.float64):
        self.pool = GlobalMeanPool()
        self.proj = Linear(d, z_dim, bias=False, rng=rng, name="oc_head",
                           gain=1.0, dtype=dtype)

    def params(self):
        return self.proj.params()

    def forward(self, h, cache: bool = True):
        return self.proj.forward(self.pool.forward(h, cache=cache), cache=cache)

    def backward(self, gz):
        return self.pool.backward(self.proj.backward(gz))

    __call__ = forward


def encode(encoder: Sequential, clips: np.ndarray, cfg: BackboneConfig,
           cache: bool = False) -> np.ndarray:
    """Run the encoder with the config's shape contract enforced."""
    if clips.ndim == 4:
        clips = clips[None]
    if tuple(clips.shape[1:]) != tuple(cfg.input_shape):
        raise ShapeError(
            f"clip shape {tuple(clips.shape[1:])} does not match configured "
            f"input shape {tuple(cfg.input_shape)}"
        )
    h = encoder.forward(clips, cache=cache)
    if tuple(h.shape[1:]) != tuple(cfg.bottleneck_shape):
        raise ShapeError(
            f"encoder produced {tuple(h.shape[1:])}, expected bottleneck "
            f"{tuple(cfg.bottleneck_shape)}"
        )
    return h


def decode(decoder: Sequential, h: np.ndarray, cfg: BackboneConfig,
           fused: bool = False, cache: bool = False) -> np.ndarray:
    """Run the decoder; `fused` admits the channel-doubled bottleneck."""
    if h.ndim == 4:
        h = h[None]
    want = list(cfg.bottleneck_shape)
    if fused:
        want[3] *= 2
    if list(h.shape[1:]) != want:
        raise ShapeError(
            f"bottleneck shape {tuple(h.shape[1:])} does not match expected "
            f"{tuple(want)}"
        )
    x = decoder.forward(h, cache=cache)
    if tuple(x.shape[1:]) != tuple(cfg.input_shape):
        raise ShapeError(
            f"decoder produced {tuple(x.shape[1:])}, expected {tuple(cfg.input_shape)}"
        )
    return x


PRESETS: dict[str, BackboneConfig] = {
    # Full-scale shape contract: 32x224x224x3 -> 4x7x7x2048, the geometry
    # of an inflated ResNet-50 video encoder.
    "full": BackboneConfig(
        input_shape=(32, 224, 224, 3),
        stages=(
            Stage(16, (1, 2, 2)),
            Stage(32, (2, 2, 2)),
            Stage(64, (2, 2, 2)),
            Stage(2048, (2, 4, 4)),
        ),
    ),
    # Capacity-study variant: bottleneck spatially doubled, 8x14x14x2048.
    "full_capacity": BackboneConfig(
        input_shape=(32, 224, 224, 3),
        stages=(
            Stage(16, (1, 2, 2)),
            Stage(32, (2, 2, 2)),
            Stage(64, (1, 2, 2)),
            Stage(2048, (2, 2, 2)),
        ),
    ),
    # Laptop-scale stride-arithmetic example: 16x64x64x3 -> 2x2x2x64.
    "toy": BackboneConfig(
        input_shape=(16, 64, 64, 3),
        stages=(
            Stage(16, (2, 2, 2)),
            Stage(32, (2, 2, 2)),
            Stage(64, (2, 2, 2)),
            Stage(64, (1, 4, 4)),
        ),
    ),
    # Trainable-on-CPU preset used by the sanity experiments: 4x4x4x32
    # bottleneck keeps T'=4 feature frames for the interaction branch.
    "toy_train": BackboneConfig(
        input_shape=(16, 64, 64, 3),
        stages=(
            Stage(8, (2, 2, 2)),
            Stage(16, (1, 2, 2)),
            Stage(32, (2, 2, 2)),
            Stage(32, (1, 2, 2)),
        ),
        z_dim=32,
    ),
    # Two-stage micro config for finite-difference gradient checks.
    "tiny": BackboneConfig(
        input_shape=(4, 8, 8, 1),
        stages=(Stage(2, (2, 2, 2)), Stage(3, (2, 2, 2))),
        z_dim=4,
    ),
}


def get_preset(name: str) -> BackboneConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown backbone preset {name!r}; known: {sorted(PRESETS)}"
        ) from None
