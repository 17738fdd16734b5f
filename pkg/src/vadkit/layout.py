"""On-disk dataset layout conventions.

A dataset root contains ``train/`` and ``test/`` directories of per-video
frame directories, one annotation document, and (for generated data) a
ground-truth sidecar:

    root/train/<video_id>/frame_%06d.png
    root/test/<video_id>/frame_%06d.png
    root/<split>/<video_id>/flow_u_%06d.png   (flow sidecars, index t = pair t->t+1)
    root/<split>/<video_id>/flow_v_%06d.png
    root/annotations.json
    root/synth_meta.json
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import DataError

FRAME_FMT = "frame_%06d.png"
FLOW_U_FMT = "flow_u_%06d"
FLOW_V_FMT = "flow_v_%06d"
ANNOTATIONS_NAME = "annotations.json"
SYNTH_META_NAME = "synth_meta.json"
SPLITS = ("train", "test")

_FRAME_RE = re.compile(r"^frame_(\d{6})\.png$")


def video_dir(root, split: str, video_id: str) -> Path:
    return Path(root) / split / video_id


def list_videos(root, split: str) -> list[str]:
    split_dir = Path(root) / split
    if not split_dir.is_dir():
        return []
    return sorted(p.name for p in split_dir.iterdir() if p.is_dir())


def frame_path(vdir, index: int) -> Path:
    return Path(vdir) / (FRAME_FMT % index)


def frame_indices(vdir) -> list[int]:
    """Frame indices present in a video directory, validated contiguous from 0."""
    vdir = Path(vdir)
    indices = sorted(
        int(m.group(1))
        for p in vdir.iterdir()
        if (m := _FRAME_RE.match(p.name))
    ) if vdir.is_dir() else []
    if not indices:
        raise DataError(f"no frames found in {vdir}")
    if indices != list(range(len(indices))):
        raise DataError(
            f"video {vdir.name}: frame numbering has gaps "
            f"(found {len(indices)} files, max index {indices[-1]})"
        )
    return indices


def n_frames(vdir) -> int:
    return len(frame_indices(vdir))


def flow_paths(vdir, index: int) -> tuple[Path, Path]:
    """Sidecar paths for pair (index -> index+1); lossless .png preferred,
    .jpg accepted where flow maps were archived the same way as frames."""
    vdir = Path(vdir)
    for ext in (".png", ".jpg"):
        u = vdir / ((FLOW_U_FMT % index) + ext)
        v = vdir / ((FLOW_V_FMT % index) + ext)
        if u.exists() and v.exists():
            return u, v
    return (vdir / ((FLOW_U_FMT % index) + ".png"),
            vdir / ((FLOW_V_FMT % index) + ".png"))
