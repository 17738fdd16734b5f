"""
Training the one-class model
============================

The second method family maps each clip to a Z-dimensional feature and
pulls normal clips toward a fixed center; the anomaly score is squared
distance to that center.  This demo shows the two details that make
the objective non-degenerate: the center is frozen from the untrained
network's own outputs, and no layer carries a bias term.
"""
from pathlib import Path

import numpy as np

from vadkit import layout
from vadkit.checkpoint import load_checkpoint
from vadkit.dataset import SynthSpec, VideoSource, generate_synthetic, load_clip
from vadkit.evaluate import evaluate_run, make_model_scorer
from vadkit.svdd import svdd_batch_scores
from vadkit.trainer import TrainConfig, train

OUT = Path(__file__).resolve().parent / "_out" / "05_one_class_training"

###############################################################################
# Train
# -----
# Before the first step the trainer runs one pass over the training
# videos, averages the feature vectors, and freezes the result as the
# center c.  Were c a free parameter (or the layers biased), the
# objective would collapse: map everything to one point and call it
# done.

root = OUT / "data"
generate_synthetic(SynthSpec(n_normal=3, n_visual=2, n_contextual=2, seed=22), root)
config = TrainConfig(method="ocsvdd", preset="toy_train", steps=200, seed=0,
                     checkpoint_every=0)
result = train(config, root, OUT / "run")
model, _, _ = load_checkpoint(result.checkpoint_path)
print(f"center: shape {model.center.c.shape}, frozen = {model.center.frozen}")
print(f"loss: step 1 = {result.losses[0]:.4f}, step 200 = {result.losses[-1]:.4f}")

###############################################################################
# Distance to the center, before and after
# ----------------------------------------
# Rebuilding the untrained network from the same seed and giving it the
# trained run's center shows how far training contracted the normal
# clips around c.


def mean_distance(m):
    feats = []
    cfg = m.cfg.clip_config
    for vid in layout.list_videos(root, "train"):
        src = VideoSource.from_dir(layout.video_dir(root, "train", vid))
        for start in range(0, src.n_frames - cfg.t + 1, cfg.t):
            feats.append(m.features(load_clip(src, start + cfg.t // 2, cfg).data[None])[0])
    return float(svdd_batch_scores(np.stack(feats), m.center).mean())


from vadkit.models import build_model

init = build_model(model.cfg,
                   np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[0]))
init.center = model.center
print(f"mean squared distance over train clips: "
      f"{mean_distance(init):.4f} untrained -> {mean_distance(model):.4f} trained")

###############################################################################
# Scores on the test split
# ------------------------
# Anomalous clips should land farther from the center than normal ones.
# A caveat worth seeing with your own eyes: at this scale the one-class
# scores are much noisier than reconstruction error, and per-video AUC
# swings a lot between seeds.  The contraction above is reliable; which
# anomalies end up outside the contracted region is not.  Demo 04 shows
# the reconstruction family, whose detections are stable across seeds.

report = evaluate_run(make_model_scorer(model), root, model.cfg.clip_config)
for vid, auc in report["per_video_auc"].items():
    print(f"{vid}: AUC {auc:.3f}")
print(f"overall AUC {report['auc']:.3f}")
