"""Desk-scale video anomaly detection toolkit.

Learns a model of normal motion from anomaly-free videos, then scores
each frame of new footage by how far its surrounding clip falls from
that model.  Two model families are provided (a one-class embedding
objective and a reconstruction autoencoder), each optionally augmented
with a graph branch over object proposals that scores interactions
between objects rather than their appearance alone.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    DataError,
    ShapeError,
    TrainingDiverged,
    VadkitError,
)
