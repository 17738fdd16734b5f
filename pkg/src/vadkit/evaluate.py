"""Sliding-window scoring, per-video normalization, and frame-wise AUC.

Every frame of a test video gets the anomaly score of the T-frame clip
centered on it (window clamped at the ends, so boundary frames inherit
the nearest full window); each distinct window is scored once.  Raw
scores are min-max normalized per video, then concatenated across
videos for a single frame-wise AUC-ROC against the annotation labels
(a per-video mean aggregation is available as a variant).  Ties get the
usual half credit, which matters here because normalized scores pile up
at 0 and 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from . import layout
from .dataset import (
    ClipConfig,
    TemporalAnnotation,
    VideoSource,
    load_annotations,
    load_clip,
    window_start,
)
from .errors import ConfigError, DataError
from .interaction import get_proposer
from .models import ModelConfig, proposal_context

AGGREGATIONS = ("concat", "per_video_mean")


@dataclass
class ScoreSeries:
    """Per-frame anomaly scores for one video, raw and normalized."""

    video_id: str
    raw: np.ndarray
    normalized: np.ndarray

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "raw": [float(v) for v in self.raw],
            "normalized": [float(v) for v in self.normalized],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreSeries":
        return cls(d["video_id"], np.asarray(d["raw"], dtype=np.float64),
                   np.asarray(d["normalized"], dtype=np.float64))


def normalize_scores(raw: np.ndarray) -> np.ndarray:
    """Min-max to [0, 1]; a constant series maps to all zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size < 1:
        raise DataError("cannot normalize an empty score series")
    lo = raw.min()
    span = raw.max() - lo
    if span == 0.0:
        return np.zeros_like(raw)
    return (raw - lo) / span


def auc_roc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Frame-wise AUC-ROC with half credit for ties (rank-sum form)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError(
            f"scores and labels must be matching vectors, got "
            f"{scores.shape} and {labels.shape}"
        )
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError(
            f"AUC needs both classes; got {n_pos} positive and {n_neg} negative frames"
        )
    ranks = stats.rankdata(scores)          # average ranks over tie groups
    r_pos = ranks[pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def sliding_scores(source, scorer, cfg: ClipConfig) -> np.ndarray:
    """Raw score per frame: the scorer applied to each frame's centered
    window, computed once per distinct (clamped) window."""
    if not isinstance(source, VideoSource):
        source = VideoSource.from_dir(source, with_flow=cfg.with_flow)
    n = source.n_frames
    if n < cfg.t:
        raise DataError(
            f"video {source.video_id} has {n} frames; scoring needs at least {cfg.t}"
        )
    starts = np.array([window_start(i, n, cfg.t) for i in range(n)])
    cache: dict[int, float] = {}
    out = np.empty(n, dtype=np.float64)
    for i, s in enumerate(starts):
        s = int(s)
        if s not in cache:
            cache[s] = float(scorer(load_clip(source, s + cfg.t // 2, cfg)))
        out[i] = cache[s]
    return out


def make_model_scorer(model, dataset_root=None, proposal_file=None):
    """Clip scorer for a built model; resolves the proposal provider for
    graph-branch models."""
    mcfg: ModelConfig = model.cfg
    if not mcfg.gcn:
        return lambda clip: model.score_clip(clip)
    proposer = get_proposer(mcfg.proposal_provider, dataset_root=dataset_root,
                            proposal_file=proposal_file)

    def scorer(clip):
        props = proposer(proposal_context(mcfg, clip), mcfg.proposals_per_frame)
        return model.score_clip(clip, props)

    return scorer


def score_video(source, scorer, cfg: ClipConfig, video_id: str | None = None) -> ScoreSeries:
    if not isinstance(source, VideoSource):
        source = VideoSource.from_dir(source, with_flow=cfg.with_flow)
    raw = sliding_scores(source, scorer, cfg)
    return ScoreSeries(video_id or source.video_id, raw, normalize_scores(raw))


# Frame scorers bypass the model entirely; they exist so the evaluation
# pipeline can be exercised against known-perfect and known-inverted
# scores.
def oracle_frame_scorer(ann: TemporalAnnotation) -> np.ndarray:
    return ann.frame_labels().astype(np.float64)


def anti_oracle_frame_scorer(ann: TemporalAnnotation) -> np.ndarray:
    return 1.0 - ann.frame_labels().astype(np.float64)


def evaluate_run(scorer, dataset_root, cfg: ClipConfig,
                 aggregation: str = "concat", frame_scorer=None) -> dict:
    """Score every test video and compute the frame-wise AUC.

    scorer: clip scorer (see make_model_scorer); alternatively pass
    frame_scorer, a callable (annotation) -> per-frame raw scores, to
    bypass the model (oracle checks).  Returns a JSON-ready report."""
    if aggregation not in AGGREGATIONS:
        raise ConfigError(
            f"unknown aggregation {aggregation!r}; known: {AGGREGATIONS}"
        )
    dataset_root = Path(dataset_root)
    anns = {a.video_id: a for a in
            load_annotations(dataset_root / layout.ANNOTATIONS_NAME)}
    vids = layout.list_videos(dataset_root, "test")
    if not vids:
        raise DataError(f"no test videos under {dataset_root / 'test'}")
    series: list[ScoreSeries] = []
    labels: list[np.ndarray] = []
    per_video_auc: dict[str, float | None] = {}
    for vid in vids:
        if vid not in anns:
            raise DataError(f"no annotation for test video {vid!r}")
        ann = anns[vid]
        if frame_scorer is not None:
            raw = np.asarray(frame_scorer(ann), dtype=np.float64)
            s = ScoreSeries(vid, raw, normalize_scores(raw))
        else:
            s = score_video(layout.video_dir(dataset_root, "test", vid),
                            scorer, cfg, video_id=vid)
        lab = ann.frame_labels()
        if s.raw.shape[0] != lab.shape[0]:
            raise DataError(
                f"video {vid}: {s.raw.shape[0]} scores vs {lab.shape[0]} "
                "annotated frames"
            )
        series.append(s)
        labels.append(lab)
        try:
            per_video_auc[vid] = auc_roc(s.normalized, lab)
        except DataError:
            per_video_auc[vid] = None  # single-class video; only global AUC
    if aggregation == "concat":
        auc = auc_roc(np.concatenate([s.normalized for s in series]),
                      np.concatenate(labels))
    else:
        vals = [v for v in per_video_auc.values() if v is not None]
        if not vals:
            raise DataError("per-video AUC undefined for every test video")
        auc = float(np.mean(vals))
    return {
        "auc": auc,
        "aggregation": aggregation,
        "per_video_auc": per_video_auc,
        "videos": {
            s.video_id: {
                "raw": s.to_dict()["raw"],
                "normalized": s.to_dict()["normalized"],
                "labels": [int(v) for v in lab],
            }
            for s, lab in zip(series, labels)
        },
    }


def save_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")


def save_score_series(series: ScoreSeries, path) -> None:
    Path(path).write_text(json.dumps(series.to_dict(), indent=2) + "\n")


def load_score_series(path) -> ScoreSeries:
    path = Path(path)
    if not path.exists():
        raise DataError(f"score file not found: {path}")
    return ScoreSeries.from_dict(json.loads(path.read_text()))
