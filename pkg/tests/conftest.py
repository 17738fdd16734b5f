"""Shared fixtures: a small synthetic dataset reused across test modules
(generation is deterministic but not free, so build it once per session).
"""
from pathlib import Path

import numpy as np
import pytest

from vadkit.dataset import SynthSpec, generate_synthetic


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("synth")
    spec = SynthSpec(n_normal=3, n_visual=1, n_contextual=1, seed=11)
    generate_synthetic(spec, root)
    return root


@pytest.fixture(scope="session")
def synth_spec() -> SynthSpec:
    return SynthSpec(n_normal=3, n_visual=1, n_contextual=1, seed=11)


def fd_gradient(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of one array."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = f(x)
        flat[i] = keep - eps
        lo = f(x)
        flat[i] = keep
        gflat[i] = (hi - lo) / (2 * eps)
    return g


def assert_grads_close(analytic: np.ndarray, fd: np.ndarray, tol: float = 1e-4,
                       what: str = "") -> None:
    """Elementwise relative error with a floor so that entries much smaller
    than the gradient's own scale are not over-weighted (central differences
    lose ~10 digits to cancellation there)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    fd = np.asarray(fd, dtype=np.float64)
    assert analytic.shape == fd.shape
    scale = max(1.0, float(np.abs(analytic).max()))
    denom = np.maximum(np.maximum(np.abs(fd), np.abs(analytic)), 1e-3 * scale)
    rel = np.abs(analytic - fd) / denom
    worst = float(rel.max()) if rel.size else 0.0
    assert worst < tol, f"{what}: worst relative error {worst:.3e} >= {tol:.0e}"
