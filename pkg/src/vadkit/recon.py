"""Reconstruction objective and reconstruction-error scoring.

The autoencoder is trained to reproduce its input clip; the anomaly
score of a clip is the sum of squared reconstruction errors over every
element.  The loss is that per-clip sum averaged over the batch.  A
per-element mean reduction exists for working at large clip sizes where
the raw sums are unwieldy, but it is off by default; per-video score
normalization later removes any constant scale anyway.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ShapeError


def _check_match(x: np.ndarray, xhat: np.ndarray) -> None:
    if x.shape != xhat.shape:
        raise ShapeError(
            f"input and reconstruction shapes differ: {x.shape} vs {xhat.shape}"
        )


def recon_loss(x: np.ndarray, xhat: np.ndarray, reduction: str = "sum"):
    """Batch-mean reconstruction loss and its gradient w.r.t. xhat.

    x, xhat: (N, ...) with identical shapes.  reduction 'sum' is the
    exact per-clip sum-of-squares objective; 'mean' divides by the
    per-clip element count."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    _check_match(x, xhat)
    if x.ndim < 2 or x.shape[0] < 1:
        raise ShapeError(f"expected a non-empty batch, got shape {x.shape}")
    if reduction not in ("sum", "mean"):
        raise ConfigError(f"unknown reduction {reduction!r}; known: sum, mean")
    n = x.shape[0]
    diff = xhat - x
    scale = 1.0 if reduction == "sum" else 1.0 / diff[0].size
    loss = float((diff * diff).sum()) * scale / n
    grad = 2.0 * diff * (scale / n)
    return loss, grad


def recon_score(x: np.ndarray, xhat: np.ndarray) -> float:
    """Sum of squared errors over one clip."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    _check_match(x, xhat)
    diff = xhat - x
    return float((diff * diff).sum())
