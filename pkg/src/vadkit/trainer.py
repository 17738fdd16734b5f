"""Training loops for both method families.

One optimizer step consumes batch_size clips from the shuffled training
stream.  One-class runs first compute the frozen center from a full
stride-T pass over the training videos, then minimize mean squared
distance to it (plus weight decay); reconstruction runs minimize the
batch-mean per-clip squared error.  Runs are exactly reproducible from
(config, dataset) alone: parameter init and data order derive from two
split-off streams of the config seed.

A run directory accumulates: resolved_config.json, metrics.log (one
"step loss" line per step, byte-identical across same-seed runs),
timings.log (wall time per step, excluded from metrics so determinism
checks stay clean), periodic checkpoint_step_*.npz, checkpoint_final.npz.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from . import layout
from .checkpoint import save_checkpoint
from .dataset import iter_training_clips, load_clip, VideoSource
from .errors import ConfigError, TrainingDiverged
from .interaction import get_proposer
from .models import ModelConfig, ReconModel, build_model, proposal_context
from .nn import Adam
from .recon import recon_loss
from .svdd import DEFAULT_WEIGHT_DECAY, init_center, svdd_loss


@dataclass
class TrainConfig:
    method: str = "recon"
    preset: str = "toy_train"
    gcn: bool = False
    flow: bool = False
    proposals_per_frame: int = 4
    proposal_provider: str = "grid"
    learning_rate: float = 1e-4
    batch_size: int = 4
    steps: int = 200
    seed: int = 0
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    checkpoint_every: int = 100
    clips_per_video: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        ModelConfig(method=self.method, preset=self.preset)  # validates names

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            method=self.method,
            preset=self.preset,
            gcn=self.gcn,
            flow=self.flow,
            proposals_per_frame=self.proposals_per_frame,
            proposal_provider=self.proposal_provider,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainResult:
    checkpoint_path: Path
    metrics_path: Path
    losses: list[float] = field(default_factory=list)


def _center_features(model, dataset_root, mcfg: ModelConfig, proposer):
    """One full pass over the training videos at stride T."""
    ccfg = mcfg.clip_config
    feats = []
    for vid in layout.list_videos(dataset_root, "train"):
        src = VideoSource.from_dir(
            layout.video_dir(dataset_root, "train", vid), with_flow=ccfg.with_flow
        )
        for start in range(0, src.n_frames - ccfg.t + 1, ccfg.t):
            clip = load_clip(src, start + ccfg.t // 2, ccfg)
            props = None
            if mcfg.gcn:
                props = [proposer(proposal_context(mcfg, clip),
                                  mcfg.proposals_per_frame)]
            feats.append(model.features(clip.data[None], props)[0])
    return np.stack(feats)


def train(config: TrainConfig, dataset_root, out_dir, progress=None) -> TrainResult:
    """Run the configured optimization; returns paths and the loss curve."""
    dataset_root = Path(dataset_root)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    )

    seeds = np.random.SeedSequence(config.seed).spawn(2)
    rng_init = np.random.default_rng(seeds[0])
    rng_data = np.random.default_rng(seeds[1])

    mcfg = config.model_config()
    model = build_model(mcfg, rng_init)
    proposer = None
    if mcfg.gcn:
        proposer = get_proposer(mcfg.proposal_provider, dataset_root=dataset_root)

    if model.method == "ocsvdd":
        model.center = init_center(_center_features(model, dataset_root, mcfg, proposer))

    params = model.params()
    opt = Adam(params, lr=config.learning_rate)
    stream = iter_training_clips(dataset_root, mcfg.clip_config, rng_data,
                                 clips_per_video=config.clips_per_video)

    metrics_path = out_dir / "metrics.log"
    timings_path = out_dir / "timings.log"
    losses: list[float] = []
    last_good: Path | None = None
    with open(metrics_path, "w") as metrics, open(timings_path, "w") as timings:
        for step in range(1, config.steps + 1):
            t0 = time.perf_counter()
            clips = [next(stream) for _ in range(config.batch_size)]
            batch = np.stack([c.data for c in clips])
            props = None
            if mcfg.gcn:
                props = [proposer(proposal_context(mcfg, c), mcfg.proposals_per_frame)
                         for c in clips]

            opt.zero_grad()
            if isinstance(model, ReconModel):
                xhat, caches = model.forward(batch, props, cache=True)
                loss, gxhat = recon_loss(batch, xhat)
                model.backward(gxhat, caches)
            else:
                z, caches = model.features(batch, props, cache=True)
                loss, gz = svdd_loss(z, model.center, params,
                                     weight_decay=config.weight_decay)
                model.backward_features(gz, caches)

            if not np.isfinite(loss):
                raise TrainingDiverged(step, last_good)
            opt.step()

            losses.append(loss)
            metrics.write(f"{step} {loss:.17g}\n")
            timings.write(f"{step} {time.perf_counter() - t0:.3f}\n")
            if progress is not None:
                progress(step, loss)
            if config.checkpoint_every and step % config.checkpoint_every == 0:
                last_good = save_checkpoint(
                    out_dir / f"checkpoint_step_{step:06d}.npz", model,
                    step=step, optimizer=opt,
                )
    final = save_checkpoint(out_dir / "checkpoint_final.npz", model,
                            step=config.steps, optimizer=opt)
    return TrainResult(checkpoint_path=final, metrics_path=metrics_path, losses=losses)
