"""
Synthetic sprite videos
=======================

Generates a small dataset of bouncing-sprite videos and walks through
what lands on disk: a train split of normal videos, a test split with
two kinds of anomalies, and a single annotations file with per-frame
labels.

Normal videos contain circles drifting and bouncing off the frame
border.  "Visual" test videos add a square, a shape never seen in
training.  "Contextual" test videos contain only familiar circles, but
two of them collide; nothing about any single frame region is novel,
only the interaction is.
"""
from pathlib import Path

import numpy as np

from vadkit import layout
from vadkit.dataset import SynthSpec, VideoSource, generate_synthetic, load_annotations

OUT = Path(__file__).resolve().parent / "_out" / "01_synthetic_dataset"

###############################################################################
# Generate a dataset
# ------------------
# Everything is derived from the SynthSpec and its seed, so the same
# settings always produce byte-identical files.

spec = SynthSpec(n_normal=3, n_visual=2, n_contextual=2, seed=7)
root = OUT / "data"
annotations = generate_synthetic(spec, root)
print(f"dataset root: {root}")
print(f"train videos: {layout.list_videos(root, 'train')}")
print(f"test videos:  {layout.list_videos(root, 'test')}")

###############################################################################
# On-disk layout
# --------------
# Each video is a directory of numbered PNG frames; the annotations file
# covers every test video.

vdir = layout.video_dir(root, "test", "contextual_000")
frames = sorted(p.name for p in vdir.iterdir())
print(f"{vdir.name}: {len(frames)} frames, first/last = {frames[0]}, {frames[-1]}")

###############################################################################
# Per-frame labels
# ----------------
# Annotations store anomalous frame ranges; frame_labels() expands them
# to a 0/1 vector aligned with the frames.

for ann in load_annotations(root / "annotations.json"):
    labels = ann.frame_labels()
    print(f"{ann.video_id}: {int(labels.sum())}/{labels.size} anomalous frames, "
          f"ranges {ann.anomalous_ranges}")

###############################################################################
# Reading frames back
# -------------------
# VideoSource loads the whole video as a uint8 stack; load_clip cuts a
# T-frame window out of it and rescales to [-1, 1], the range the
# models consume.

from vadkit.dataset import ClipConfig, load_clip

src = VideoSource.from_dir(vdir)
print(f"frames {src.frames.shape}, dtype {src.frames.dtype}")
clip = load_clip(src, center_frame=20, cfg=ClipConfig(t=16, h=spec.frame_size,
                                                      w=spec.frame_size))
print(f"clip {clip.data.shape} in [{clip.data.min():.2f}, {clip.data.max():.2f}], "
      f"window starts at frame {clip.window_start}")

###############################################################################
# A contact sheet of one collision
# --------------------------------
# The labelled range is exactly the frames where two sprites overlap.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

ann = next(a for a in annotations if a.video_id == "contextual_000")
start, end = ann.anomalous_ranges[0]
picks = [max(start - 4, 0), start, (start + end) // 2, end, min(end + 4, src.n_frames - 1)]
fig, axes = plt.subplots(1, len(picks), figsize=(3 * len(picks), 3))
for ax, t in zip(axes, picks):
    ax.imshow(src.frames[t])
    ax.set_title(f"frame {t}" + (" (anomalous)" if start <= t <= end else ""))
    ax.axis("off")
fig.tight_layout()
fig.savefig(OUT / "collision_strip.png", dpi=100)
print(f"wrote {OUT / 'collision_strip.png'}")
