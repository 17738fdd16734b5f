"""Model assembly: the two method families, with and without the
object-interaction branch, behind a uniform train/score interface.

Family 'ocsvdd' maps a clip to a Z-vector and scores squared distance to
the frozen center; with the graph branch, the plain pooled head is
replaced by the pooled-concat fusion.  Family 'recon' decodes the
bottleneck back to the input and scores summed squared error; with the
graph branch, the decoder input doubles to 2d channels and the branch
supplies the extra block.

Batch forward/backward runs the shared encoder once per batch; the
graph branch operates per clip (each clip has its own proposals).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import backbone as bb
from .dataset import Clip, ClipConfig
from .errors import ConfigError, ShapeError
from .interaction import InteractionBranch, ProposalContext, ProposalSet
from .nn import Param, Sequential
from .recon import recon_score
from .svdd import Center, svdd_score

METHODS = ("ocsvdd", "recon")


@dataclass
class ModelConfig:
    """Everything needed to rebuild a model skeleton."""

    method: str = "recon"
    preset: str = "toy_train"
    gcn: bool = False
    flow: bool = False
    proposals_per_frame: int = 4
    proposal_provider: str = "grid"
    backbone: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; known: {METHODS}")
        if self.proposals_per_frame < 1:
            raise ConfigError("proposals_per_frame must be >= 1")
        if not self.backbone:
            cfg = bb.get_preset(self.preset)
            cfg = cfg.with_input_channels(5 if self.flow else 3)
            self.backbone = cfg.to_dict()
        bcfg = self.backbone_config
        expected_c = 5 if self.flow else 3
        if bcfg.in_channels != expected_c:
            raise ConfigError(
                f"backbone expects {bcfg.in_channels} input channels but "
                f"flow={self.flow} implies {expected_c}"
            )

    @property
    def backbone_config(self) -> bb.BackboneConfig:
        return bb.BackboneConfig.from_dict(self.backbone)

    @property
    def clip_config(self) -> ClipConfig:
        t, h, w, _ = self.backbone_config.input_shape
        return ClipConfig(t=t, h=h, w=w, with_flow=self.flow)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "preset": self.preset,
            "gcn": self.gcn,
            "flow": self.flow,
            "proposals_per_frame": self.proposals_per_frame,
            "proposal_provider": self.proposal_provider,
            "backbone": dict(self.backbone),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def proposal_context(cfg: ModelConfig, clip: Clip) -> ProposalContext:
    bcfg = cfg.backbone_config
    t, h, w, _ = bcfg.input_shape
    return ProposalContext(
        bottleneck_shape=bcfg.bottleneck_shape,
        input_shape=(t, h, w),
        video_id=clip.video_id,
        window_start=clip.window_start,
    )


class OneClassModel:
    """Clip -> Z-vector; anomaly score = squared distance to the center."""

    method = "ocsvdd"

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator | None):
        if cfg.method != self.method:
            raise ConfigError(f"config is for method {cfg.method!r}")
        self.cfg = cfg
        bcfg = cfg.backbone_config
        self.backbone_cfg = bcfg
        self.encoder = bb.build_encoder(bcfg, rng)
        self._center: Center | None = None
        if cfg.gcn:
            self.branch = InteractionBranch(
                bcfg.feature_dim, "oc", rng, z_dim=bcfg.z_dim
            )
            self.head = None
        else:
            self.branch = None
            self.head = bb.OcHead(bcfg.feature_dim, bcfg.z_dim, rng)

    @property
    def center(self) -> Center | None:
        return self._center

    @center.setter
    def center(self, c: Center | None):
        if self._center is not None:
            raise ConfigError("the one-class center is frozen once initialized")
        self._center = c

    def params(self) -> list[Param]:
        ps = self.encoder.params()
        if self.branch is not None:
            ps += self.branch.params()
        else:
            ps += self.head.params()
        return ps

    def features(self, clips: np.ndarray, proposals: list[ProposalSet] | None = None,
                 cache: bool = False):
        """(N, T, H, W, C) -> (N, Z).  GCN mode needs one ProposalSet per clip."""
        h = bb.encode(self.encoder, clips, self.backbone_cfg, cache=cache)
        if self.branch is None:
            z = self.head.forward(h, cache=cache)
            branch_caches = None
        else:
            if proposals is None or len(proposals) != clips.shape[0]:
                raise ConfigError(
                    "graph-branch model needs one proposal set per clip"
                )
            outs = []
            branch_caches = []
            for i in range(clips.shape[0]):
                if cache:
                    zi, ci = self.branch.forward(h[i], proposals[i], cache=True)
                    branch_caches.append(ci)
                else:
                    zi = self.branch.forward(h[i], proposals[i])
                outs.append(zi)
            z = np.stack(outs)
        if not cache:
            return z
        return z, branch_caches

    def backward_features(self, gz: np.ndarray, branch_caches) -> None:
        if self.branch is None:
            gh = self.head.backward(gz)
        else:
            gh = np.stack([
                self.branch.backward(gz[i], branch_caches[i])
                for i in range(gz.shape[0])
            ])
        self.encoder.backward(gh)

    def score_clip(self, clip: Clip, proposals: ProposalSet | None = None) -> float:
        if self.center is None:
            raise ConfigError("cannot score before the center is initialized")
        props = [proposals] if proposals is not None else None
        z = self.features(clip.data[None], props)
        return svdd_score(z[0], self.center)


class ReconModel:
    """Clip -> reconstruction; anomaly score = summed squared error."""

    method = "recon"

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator | None):
        if cfg.method != self.method:
            raise ConfigError(f"config is for method {cfg.method!r}")
        self.cfg = cfg
        bcfg = cfg.backbone_config
        self.backbone_cfg = bcfg
        self.encoder = bb.build_encoder(bcfg, rng)
        if cfg.gcn:
            tp, hp, wp, d = bcfg.bottleneck_shape
            if hp != wp:
                raise ShapeError(
                    f"outer-product fusion needs square feature frames, got {hp}x{wp}"
                )
            self.branch = InteractionBranch(d, "recon", rng, spatial=hp)
            self.decoder = bb.build_decoder(bcfg, rng, in_channels=2 * d)
        else:
            self.branch = None
            self.decoder = bb.build_decoder(bcfg, rng)

    def params(self) -> list[Param]:
        ps = self.encoder.params() + self.decoder.params()
        if self.branch is not None:
            ps += self.branch.params()
        return ps

    def forward(self, clips: np.ndarray, proposals: list[ProposalSet] | None = None,
                cache: bool = False):
        h = bb.encode(self.encoder, clips, self.backbone_cfg, cache=cache)
        if self.branch is None:
            xhat = bb.decode(self.decoder, h, self.backbone_cfg, cache=cache)
            branch_caches = None
        else:
            if proposals is None or len(proposals) != clips.shape[0]:
                raise ConfigError(
                    "graph-branch model needs one proposal set per clip"
                )
            fused = []
            branch_caches = []
            for i in range(clips.shape[0]):
                if cache:
                    fi, ci = self.branch.forward(h[i], proposals[i], cache=True)
                    branch_caches.append(ci)
                else:
                    fi = self.branch.forward(h[i], proposals[i])
                fused.append(fi)
            xhat = bb.decode(self.decoder, np.stack(fused), self.backbone_cfg,
                             fused=True, cache=cache)
        if not cache:
            return xhat
        return xhat, branch_caches

    def backward(self, gxhat: np.ndarray, branch_caches) -> None:
        gfused = self.decoder.backward(gxhat)
        if self.branch is None:
            gh = gfused
        else:
            gh = np.stack([
                self.branch.backward(gfused[i], branch_caches[i])
                for i in range(gfused.shape[0])
            ])
        self.encoder.backward(gh)

    def score_clip(self, clip: Clip, proposals: ProposalSet | None = None) -> float:
        props = [proposals] if proposals is not None else None
        xhat = self.forward(clip.data[None], props)
        return recon_score(clip.data, xhat[0])


def build_model(cfg: ModelConfig, rng: np.random.Generator | None):
    if cfg.method == "ocsvdd":
        return OneClassModel(cfg, rng)
    return ReconModel(cfg, rng)
