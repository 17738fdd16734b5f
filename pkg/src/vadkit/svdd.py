"""One-class embedding objective and scoring.

The network maps each clip to a Z-dimensional feature; training pulls
features toward a fixed hypersphere center c and the anomaly score of a
clip is its squared distance from c.  The center is the mean feature of
an initial pass over the training data, adjusted away from zero and then
frozen: a learnable (or zero) center together with bias-free layers is
what keeps the trivial constant solution out of reach.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DataError, ShapeError

SNAP_EPS = 0.1
DEFAULT_WEIGHT_DECAY = 1e-6


class Center:
    """Write-once hypersphere center."""

    def __init__(self, c: np.ndarray):
        c = np.asarray(c, dtype=np.float64)
        if c.ndim != 1:
            raise ShapeError(f"center must be a vector, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DataError("center has non-finite coordinates")
        self._c = c
        self._c.setflags(write=False)
        self.frozen = True

    @property
    def c(self) -> np.ndarray:
        return self._c

    @property
    def z_dim(self) -> int:
        return self._c.shape[0]


def snap_from_origin(raw: np.ndarray, eps: float = SNAP_EPS) -> np.ndarray:
    """Push small coordinates out to +-eps (sign preserved, zero -> +eps)
    so the frozen center can never sit at the origin."""
    c = np.asarray(raw, dtype=np.float64).copy()
    small = np.abs(c) < eps
    c[small] = np.where(c[small] >= 0.0, eps, -eps)
    return c


def init_center(features: np.ndarray, eps: float = SNAP_EPS) -> Center:
    """Center from an (N, Z) sample of head outputs: mean, then snap."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise DataError(
            f"center initialization needs a non-empty (N, Z) sample, got {features.shape}"
        )
    return Center(snap_from_origin(features.mean(axis=0), eps))


def svdd_score(feature: np.ndarray, center: Center) -> float:
    """Squared distance to the center; the anomaly score of one clip."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != (center.z_dim,):
        raise ShapeError(
            f"feature has shape {feature.shape}, center is {(center.z_dim,)}"
        )
    d = feature - center.c
    return float(d @ d)


def svdd_batch_scores(features: np.ndarray, center: Center) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != center.z_dim:
        raise ShapeError(
            f"features have shape {features.shape}, expected (N, {center.z_dim})"
        )
    d = features - center.c[None, :]
    return (d * d).sum(axis=1)


def svdd_loss(features: np.ndarray, center: Center, params=(),
              weight_decay: float = DEFAULT_WEIGHT_DECAY):
    """Mean squared distance to the center plus (wd/2) * sum of squared
    parameter norms.  Returns (loss, grad wrt features); parameter decay
    gradients are accumulated onto each param's .grad in place."""
    if weight_decay < 0:
        raise ConfigError(f"weight decay must be >= 0, got {weight_decay}")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != center.z_dim:
        raise ShapeError(
            f"features have shape {features.shape}, expected (N, {center.z_dim})"
        )
    n = features.shape[0]
    d = features - center.c[None, :]
    loss = float((d * d).sum() / n)
    gfeat = 2.0 * d / n
    for p in params:
        loss += 0.5 * weight_decay * float((p.value**2).sum())
        p.grad += weight_decay * p.value
    return loss, gfeat
