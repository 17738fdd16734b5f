"""Self-describing checkpoint archives.

A checkpoint is a single .npz holding every parameter array, the model
config as embedded JSON, the frozen center (one-class models), the
training step, and optionally the optimizer moments so resumption is
exact.  Loading rebuilds the model skeleton from the embedded config and
refuses mismatched expectations or parameter shapes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .models import ModelConfig, OneClassModel, build_model
from .nn import Adam
from .svdd import Center


def save_checkpoint(path, model, step: int = 0, optimizer: Adam | None = None) -> Path:
    path = Path(path)
    arrays: dict[str, np.ndarray] = {
        "config_json": np.array(model.cfg.to_json()),
        "step": np.array(step, dtype=np.int64),
    }
    for p in model.params():
        key = f"param.{p.name}"
        if key in arrays:
            raise ConfigError(f"duplicate parameter name {p.name!r}")
        arrays[key] = p.value
    if isinstance(model, OneClassModel) and model.center is not None:
        arrays["center"] = model.center.c
    if optimizer is not None:
        arrays.update(optimizer.state_arrays())
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, **arrays)
    return path


def load_checkpoint(path, expect_config: ModelConfig | None = None):
    """Rebuild the model stored at ``path``.

    Returns (model, step, adam_state) where adam_state is the raw state
    dict for Adam.load_state_arrays, or None if the checkpoint carries
    no optimizer.  Passing expect_config enforces that the checkpoint
    was trained under the same configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        arrays = {k: archive[k] for k in archive.files}
    if "config_json" not in arrays:
        raise ConfigError(f"{path} is not a model checkpoint (no embedded config)")
    cfg = ModelConfig.from_dict(json.loads(str(arrays["config_json"])))
    if expect_config is not None and expect_config.to_dict() != cfg.to_dict():
        raise ConfigError(
            f"checkpoint config does not match: stored {cfg.to_dict()}, "
            f"expected {expect_config.to_dict()}"
        )
    model = build_model(cfg, rng=None)
    for p in model.params():
        key = f"param.{p.name}"
        if key not in arrays:
            raise ConfigError(f"{path}: missing parameter {p.name!r}")
        stored = arrays[key]
        if stored.shape != p.value.shape:
            raise ConfigError(
                f"{path}: parameter {p.name!r} has shape {stored.shape}, "
                f"model expects {p.value.shape}"
            )
        p.value[...] = stored
    if isinstance(model, OneClassModel) and "center" in arrays:
        model.center = Center(arrays["center"])
    step = int(arrays.get("step", 0))
    adam_state = {k: v for k, v in arrays.items() if k.startswith("adam.")}
    return model, step, (adam_state or None)
