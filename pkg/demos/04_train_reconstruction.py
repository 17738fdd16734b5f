"""
Training the reconstruction model
=================================

Trains the autoencoding family on normal sprite videos and scores the
test split.  Anomaly score = per-clip reconstruction error: the model
only ever sees normal motion, so structures it cannot rebuild score
high.  The punchline (expanded in demo 06) is the split result at the
end: a novel shape is caught, a collision of familiar shapes is not.
"""
from pathlib import Path

import numpy as np

from vadkit.checkpoint import load_checkpoint
from vadkit.dataset import SynthSpec, generate_synthetic, load_annotations
from vadkit.evaluate import (
    auc_roc,
    evaluate_run,
    make_model_scorer,
    score_video,
)
from vadkit.trainer import TrainConfig, train

OUT = Path(__file__).resolve().parent / "_out" / "04_train_reconstruction"

###############################################################################
# Data and configuration
# ----------------------
# toy_train is the desk-scale preset: 16x64x64 clips, a 4x4x4x32
# bottleneck.  200 steps of Adam take well under a minute on one core.

root = OUT / "data"
generate_synthetic(SynthSpec(n_normal=3, n_visual=2, n_contextual=2, seed=21), root)
config = TrainConfig(method="recon", preset="toy_train", steps=200, seed=0,
                     checkpoint_every=100)
run_dir = OUT / "run"
result = train(config, root, run_dir)
print(f"loss: step 1 = {result.losses[0]:.0f}, "
      f"step {config.steps} = {result.losses[-1]:.0f}")
print(f"checkpoints: {sorted(p.name for p in run_dir.glob('checkpoint_*.npz'))}")

###############################################################################
# Scoring one video
# -----------------
# Every frame gets the reconstruction error of the 16-frame window
# centered on it (clamped at the edges), then scores are min-max
# normalized per video.

model, step, _ = load_checkpoint(result.checkpoint_path)
scorer = make_model_scorer(model)
series = score_video(root / "test" / "visual_000", scorer, model.cfg.clip_config)
peak = int(np.argmax(series.normalized))
ann = next(a for a in load_annotations(root / "annotations.json")
           if a.video_id == "visual_000")
print(f"visual_000: scored {len(series.raw)} frames; "
      f"peak at frame {peak}, labelled anomaly at {ann.anomalous_ranges}")

###############################################################################
# Evaluating the whole test split
# -------------------------------
# The report holds the overall frame-wise AUC plus per-video curves;
# splitting it by anomaly family shows where reconstruction error is
# (and is not) a usable signal.

report = evaluate_run(scorer, root, model.cfg.clip_config)


def family_auc(prefix):
    scores, labels = [], []
    for vid, rec in report["videos"].items():
        if vid.startswith(prefix):
            scores += rec["normalized"]
            labels += rec["labels"]
    return auc_roc(np.asarray(scores), np.asarray(labels))


print(f"overall AUC {report['auc']:.3f}")
print(f"novel-shape videos:  AUC {family_auc('visual'):.3f}")
print(f"collision videos:    AUC {family_auc('contextual'):.3f}")

###############################################################################
# Loss curve and a score curve
# ----------------------------

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from vadkit.viz import plot_score_curve

fig, ax = plt.subplots(figsize=(6, 3))
ax.plot(np.arange(1, len(result.losses) + 1), result.losses, lw=1.0)
ax.set_xlabel("step")
ax.set_ylabel("reconstruction loss")
ax.set_yscale("log")
fig.tight_layout()
fig.savefig(OUT / "loss_curve.png", dpi=100)
plot_score_curve(series, ann, OUT / "visual_000_scores.png")
print(f"wrote {OUT / 'loss_curve.png'} and {OUT / 'visual_000_scores.png'}")
