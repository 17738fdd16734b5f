"""Video datasets: frame-directory loading, clip extraction, annotations,
and a synthetic sprite world for end-to-end testing.

The synthetic generator draws anti-aliased sprites moving on straight
lines over a black background.  Normal videos contain 2-4 circles that
never come close to touching.  Visual-anomaly videos add a square, a
shape never seen in training, with pixel energy matched to the circles
so a model cannot separate it by brightness alone.  Contextual-anomaly
videos contain only familiar circles, but two of them collide: they
interpenetrate to about half their combined radius before rebounding
elastically, so the anomaly lives purely in the interaction.  Labeled
anomalous frames for the contextual case are exactly the frames where
two rendered sprite masks share a pixel.

Generation is deterministic: the same spec (including its seed) always
produces byte-identical frames and annotation files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from PIL import Image

from . import flow as flow_mod
from . import layout
from .errors import ConfigError, DataError

MAX_LAYOUT_TRIES = 1000
_CLEARANCE = 2.0
_EDGE_MARGIN = 1.0


# ---------------------------------------------------------------------------
# Annotations


@dataclass
class TemporalAnnotation:
    """Ground truth for one test video: which frame ranges are anomalous.

    Ranges are inclusive [start, end] pairs in frame indices."""

    video_id: str
    n_frames: int
    anomalous_ranges: list[tuple[int, int]] = field(default_factory=list)
    fps: int = 25

    def __post_init__(self):
        if self.n_frames < 1:
            raise DataError(f"video {self.video_id}: n_frames must be >= 1")
        for s, e in self.anomalous_ranges:
            if not (0 <= s <= e < self.n_frames):
                raise DataError(
                    f"video {self.video_id}: range [{s}, {e}] outside "
                    f"[0, {self.n_frames - 1}]"
                )

    def frame_labels(self) -> np.ndarray:
        labels = np.zeros(self.n_frames, dtype=np.uint8)
        for s, e in self.anomalous_ranges:
            labels[s : e + 1] = 1
        return labels


def write_annotations(path, annotations: list[TemporalAnnotation]) -> None:
    doc = {
        "videos": [
            {
                "video_id": a.video_id,
                "n_frames": a.n_frames,
                "fps": a.fps,
                "anomalous_ranges": [[int(s), int(e)] for s, e in a.anomalous_ranges],
            }
            for a in annotations
        ]
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_annotations(path) -> list[TemporalAnnotation]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"annotation file not found: {path}")
    doc = json.loads(path.read_text())
    if "videos" not in doc:
        raise DataError(f"{path}: missing 'videos' key")
    return [
        TemporalAnnotation(
            video_id=v["video_id"],
            n_frames=int(v["n_frames"]),
            anomalous_ranges=[(int(s), int(e)) for s, e in v["anomalous_ranges"]],
            fps=int(v.get("fps", 25)),
        )
        for v in doc["videos"]
    ]


# ---------------------------------------------------------------------------
# Clip extraction


@dataclass(frozen=True)
class ClipConfig:
    """Geometry of model input clips."""

    t: int = 16
    h: int = 64
    w: int = 64
    with_flow: bool = False

    def __post_init__(self):
        if self.t < 1 or self.h < 1 or self.w < 1:
            raise ConfigError(f"clip dimensions must be positive, got {self}")

    @property
    def c(self) -> int:
        return 5 if self.with_flow else 3

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.t, self.h, self.w, self.c)


@dataclass
class Clip:
    """One model input: (T, H, W, C) float64 in [-1, 1]."""

    data: np.ndarray
    video_id: str
    center_frame: int
    window_start: int


class VideoSource:
    """A fully loaded video: frames (and flow, if requested) in memory,
    so repeated clip extraction never re-reads files."""

    def __init__(self, frames: np.ndarray, video_id: str = "<array>",
                 flow: np.ndarray | None = None):
        frames = np.asarray(frames)
        if frames.ndim == 3:
            frames = frames[:, :, :, None].repeat(3, axis=3)
        if frames.ndim != 4 or frames.shape[3] != 3:
            raise DataError(
                f"video {video_id}: expected frames (N, H, W, 3), got {frames.shape}"
            )
        self.frames = frames
        self.video_id = video_id
        self.flow = flow
        if flow is not None and flow.shape[:1] != (frames.shape[0] - 1,):
            raise DataError(
                f"video {video_id}: flow stack has {flow.shape[0]} pairs "
                f"for {frames.shape[0]} frames"
            )

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @classmethod
    def from_dir(cls, vdir, with_flow: bool = False) -> "VideoSource":
        vdir = Path(vdir)
        n = layout.n_frames(vdir)
        frames = np.stack(
            [np.asarray(Image.open(layout.frame_path(vdir, i))) for i in range(n)]
        )
        if frames.ndim == 3:
            frames = frames[:, :, :, None].repeat(3, axis=3)
        flow = flow_mod.load_flow_channels(vdir, n) if with_flow else None
        return cls(frames, video_id=vdir.name, flow=flow)


def window_start(center_frame: int, n_frames: int, t: int) -> int:
    """Start of the T-frame window centered on a frame, clamped so the
    window stays inside the video."""
    if n_frames < t:
        raise DataError(f"video has {n_frames} frames; need at least {t}")
    return int(np.clip(center_frame - t // 2, 0, n_frames - t))


def load_clip(source, center_frame: int, cfg: ClipConfig) -> Clip:
    """Extract the clip whose window is centered on ``center_frame``.

    ``source`` may be a VideoSource, a frame directory path, or a raw
    (N, H, W, 3) uint8 array."""
    if not isinstance(source, VideoSource):
        if isinstance(source, (str, Path)):
            source = VideoSource.from_dir(source, with_flow=cfg.with_flow)
        else:
            source = VideoSource(source)
    n = source.n_frames
    if n < cfg.t:
        raise DataError(
            f"video {source.video_id} has {n} frames; clips need at least {cfg.t}"
        )
    if source.frames.shape[1:3] != (cfg.h, cfg.w):
        raise DataError(
            f"video {source.video_id}: frames are {source.frames.shape[1:3]}, "
            f"expected {(cfg.h, cfg.w)}"
        )
    if not (0 <= center_frame < n):
        raise DataError(
            f"video {source.video_id}: center frame {center_frame} outside [0, {n - 1}]"
        )
    start = window_start(center_frame, n, cfg.t)
    rgb = source.frames[start : start + cfg.t].astype(np.float64) / 127.5 - 1.0
    if not cfg.with_flow:
        data = rgb
    else:
        if source.flow is None:
            raise DataError(
                f"video {source.video_id}: clip config asks for flow channels "
                "but no flow is loaded; precompute flow sidecars first"
            )
        uv = np.empty((cfg.t,) + source.flow.shape[1:], dtype=np.float64)
        for j in range(cfg.t):
            # pair index for frame start+j; the last frame of the video has
            # no successor, so it reuses the previous pair
            uv[j] = source.flow[min(start + j, n - 2)]
        data = np.concatenate([rgb, uv], axis=3)
    return Clip(data=data, video_id=source.video_id,
                center_frame=center_frame, window_start=start)


def iter_training_clips(root, cfg: ClipConfig, rng: np.random.Generator,
                        clips_per_video: int = 1):
    """Endless generator of training clips from root/train.

    Every pass visits each training video once in a shuffled order and
    samples ``clips_per_video`` uniform window positions from it.  Videos
    are cached in memory after first load."""
    root = Path(root)
    ids = layout.list_videos(root, "train")
    if not ids:
        raise DataError(f"no training videos under {root / 'train'}")
    cache: dict[str, VideoSource] = {}
    while True:
        for idx in rng.permutation(len(ids)):
            vid = ids[idx]
            if vid not in cache:
                cache[vid] = VideoSource.from_dir(
                    layout.video_dir(root, "train", vid), with_flow=cfg.with_flow
                )
            src = cache[vid]
            for _ in range(clips_per_video):
                start = int(rng.integers(0, src.n_frames - cfg.t + 1))
                yield load_clip(src, start + cfg.t // 2, cfg)


# ---------------------------------------------------------------------------
# Synthetic sprite world


@dataclass
class SynthSpec:
    """Recipe for a synthetic dataset; fully determines its bytes."""

    n_normal: int = 8
    n_visual: int = 2
    n_contextual: int = 2
    frame_size: int = 64
    video_length: int = 64
    fps: int = 25
    n_sprites_range: tuple[int, int] = (2, 4)
    radius_range: tuple[float, float] = (5.0, 8.0)
    # linear trajectories must stay in frame for the whole video, so the
    # default speed keeps speed * video_length safely under frame_size
    speed_range: tuple[float, float] = (0.25, 0.6)
    square_side_range: tuple[float, float] = (9.0, 14.0)
    collision_speed_range: tuple[float, float] = (0.4, 0.8)
    intensity_range: tuple[float, float] = (0.55, 1.0)
    seed: int = 0

    def __post_init__(self):
        if min(self.n_normal, self.n_visual, self.n_contextual) < 0:
            raise ConfigError("video counts must be >= 0")
        if self.video_length < 2:
            raise ConfigError("video_length must be >= 2")
        if self.frame_size < 32:
            raise ConfigError("frame_size must be >= 32 to fit moving sprites")
        lo, hi = self.n_sprites_range
        if not (1 <= lo <= hi):
            raise ConfigError(f"bad n_sprites_range {self.n_sprites_range}")
        for name in ("radius_range", "speed_range", "square_side_range",
                     "collision_speed_range", "intensity_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise ConfigError(f"bad {name}: ({lo}, {hi})")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        kwargs = dict(d)
        for key in ("n_sprites_range", "radius_range", "speed_range",
                    "square_side_range", "collision_speed_range", "intensity_range"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class _Sprite:
    shape: str                 # "circle" or "square"
    size: float                # radius, or half side length
    intensity: float
    centers: np.ndarray        # (L, 2) float, (x, y) per frame; NaN while hidden
    visible: tuple[int, int]   # inclusive frame range

    def bound_radius(self) -> float:
        return self.size if self.shape == "circle" else self.size * np.sqrt(2.0)


def _uniform(rng, lo_hi) -> float:
    lo, hi = lo_hi
    return float(rng.uniform(lo, hi))


def _linear_centers(p0, vel, length) -> np.ndarray:
    t = np.arange(length)[:, None]
    return np.asarray(p0)[None, :] + t * np.asarray(vel)[None, :]


def _in_bounds(centers, bound, size, visible) -> bool:
    s, e = visible
    c = centers[s : e + 1]
    lo = bound + _EDGE_MARGIN
    hi = size - 1 - bound - _EDGE_MARGIN
    return bool(np.all(c >= lo) and np.all(c <= hi))


def _min_pair_distance(ca, cb, visible) -> float:
    s, e = visible
    d = ca[s : e + 1] - cb[s : e + 1]
    return float(np.sqrt((d * d).sum(axis=1)).min())


def _clear_of_others(sprite: _Sprite, others: list[_Sprite]) -> bool:
    for other in others:
        s = max(sprite.visible[0], other.visible[0])
        e = min(sprite.visible[1], other.visible[1])
        if s > e:
            continue
        limit = sprite.bound_radius() + other.bound_radius() + _CLEARANCE
        if _min_pair_distance(sprite.centers, other.centers, (s, e)) < limit:
            return False
    return True


def _sample_linear_sprite(rng, spec: SynthSpec, shape: str, size: float,
                          visible: tuple[int, int], others: list[_Sprite],
                          speed_range=None) -> _Sprite | None:
    L = spec.video_length
    bound = size if shape == "circle" else size * np.sqrt(2.0)
    speed = _uniform(rng, speed_range or spec.speed_range)
    angle = rng.uniform(0.0, 2 * np.pi)
    vel = np.array([speed * np.cos(angle), speed * np.sin(angle)])
    # starting box such that the whole visible trajectory stays in frame
    lo = np.maximum(bound + _EDGE_MARGIN - vel * visible[0],
                    bound + _EDGE_MARGIN - vel * visible[1])
    hi = np.minimum(spec.frame_size - 1 - bound - _EDGE_MARGIN - vel * visible[0],
                    spec.frame_size - 1 - bound - _EDGE_MARGIN - vel * visible[1])
    if np.any(lo >= hi):
        return None
    p0 = np.array([rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1])])
    centers = _linear_centers(p0, vel, L)
    sprite = _Sprite(shape=shape, size=size, intensity=_uniform(rng, spec.intensity_range),
                     centers=centers, visible=visible)
    if not _in_bounds(centers, bound, spec.frame_size, visible):
        return None
    if not _clear_of_others(sprite, others):
        return None
    return sprite


def _sample_normal_sprites(rng, spec: SynthSpec, n: int,
                           preexisting: list[_Sprite] | None = None) -> list[_Sprite]:
    """Place n mutually clear circles, restarting the whole layout when a
    partial placement dead-ends.  Returns only the new sprites."""
    full = (0, spec.video_length - 1)
    base = list(preexisting or [])
    for _ in range(MAX_LAYOUT_TRIES):
        sprites = list(base)
        for _ in range(n):
            for _ in range(100):
                radius = _uniform(rng, spec.radius_range)
                sprite = _sample_linear_sprite(rng, spec, "circle", radius, full, sprites)
                if sprite is not None:
                    sprites.append(sprite)
                    break
            else:
                break  # this partial layout is stuck; restart
        if len(sprites) == len(base) + n:
            return sprites[len(base):]
    raise DataError(
        f"could not place {n} non-intersecting sprites in "
        f"{MAX_LAYOUT_TRIES} layout attempts; use fewer or smaller sprites"
    )


def _sample_colliding_pair(rng, spec: SynthSpec) -> list[_Sprite] | None:
    """Two circles that meet mid-video, interpenetrate, and rebound.

    The rebound triggers once their center distance drops below half the
    contact distance, so the rendered masks genuinely overlap for a run
    of frames around the collision."""
    L = spec.video_length
    S = spec.frame_size
    r1 = _uniform(rng, spec.radius_range)
    r2 = _uniform(rng, spec.radius_range)
    t_meet = int(rng.integers(L // 3, 2 * L // 3))
    target = np.array([rng.uniform(0.35 * S, 0.65 * S), rng.uniform(0.35 * S, 0.65 * S)])

    # roughly opposed headings so the closing speed stays near s1 + s2
    a1 = rng.uniform(0.0, 2 * np.pi)
    a2 = a1 + np.pi + rng.uniform(-0.7, 0.7)
    s1 = _uniform(rng, spec.collision_speed_range)
    s2 = _uniform(rng, spec.collision_speed_range)
    v1 = np.array([s1 * np.cos(a1), s1 * np.sin(a1)])
    v2 = np.array([s2 * np.cos(a2), s2 * np.sin(a2)])
    if np.linalg.norm(v1 - v2) < 0.8:
        return None  # too slow a closing speed stretches the overlap run

    # aim both centers at the same point at t_meet, slightly offset so the
    # collision is not perfectly head-on
    offset = rng.uniform(-0.25, 0.25, size=2) * (r1 + r2)
    p1 = target - v1 * t_meet
    p2 = target + offset - v2 * t_meet

    centers1 = np.empty((L, 2))
    centers2 = np.empty((L, 2))
    c1, c2 = p1.copy(), p2.copy()
    w1, w2 = v1.copy(), v2.copy()
    rebounded = False
    contact = r1 + r2
    for t in range(L):
        centers1[t] = c1
        centers2[t] = c2
        if not rebounded and float(np.linalg.norm(c1 - c2)) < 0.5 * contact:
            normal = c1 - c2
            nn = float(np.linalg.norm(normal))
            if nn < 1e-9:
                return None
            normal /= nn
            rel = float((w1 - w2) @ normal)
            w1 = w1 - rel * normal
            w2 = w2 + rel * normal
            rebounded = True
        c1 = c1 + w1
        c2 = c2 + w2
    if not rebounded:
        return None

    full = (0, L - 1)
    pair = [
        _Sprite("circle", r1, _uniform(rng, spec.intensity_range), centers1, full),
        _Sprite("circle", r2, _uniform(rng, spec.intensity_range), centers2, full),
    ]
    for sp in pair:
        if not _in_bounds(sp.centers, sp.size, S, full):
            return None
    # the pair must overlap for a few frames, well inside the video
    d = np.sqrt(((centers1 - centers2) ** 2).sum(axis=1))
    touching = np.flatnonzero(d < contact)
    if not (3 <= touching.size <= 24):
        return None
    if touching[0] < 4 or touching[-1] > L - 5:
        return None
    return pair


def _render_sprite_coverage(sprite: _Sprite, t: int, size: int) -> np.ndarray:
    """Per-pixel coverage in [0, 1] for one sprite at frame t."""
    cov = np.zeros((size, size))
    s, e = sprite.visible
    if not (s <= t <= e):
        return cov
    cx, cy = sprite.centers[t]
    if sprite.shape == "circle":
        r = sprite.size
        x0 = max(int(np.floor(cx - r - 1)), 0)
        x1 = min(int(np.ceil(cx + r + 1)), size - 1)
        y0 = max(int(np.floor(cy - r - 1)), 0)
        y1 = min(int(np.ceil(cy + r + 1)), size - 1)
        if x0 > x1 or y0 > y1:
            return cov
        yy, xx = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
        dist = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
        cov[y0 : y1 + 1, x0 : x1 + 1] = np.clip(r + 0.5 - dist, 0.0, 1.0)
    else:
        h = sprite.size
        x0 = max(int(np.floor(cx - h)), 0)
        x1 = min(int(np.ceil(cx + h)), size - 1)
        y0 = max(int(np.floor(cy - h)), 0)
        y1 = min(int(np.ceil(cy + h)), size - 1)
        if x0 > x1 or y0 > y1:
            return cov
        xs = np.arange(x0, x1 + 1)
        ys = np.arange(y0, y1 + 1)
        cov_x = np.clip(np.minimum(xs + 0.5, cx + h) - np.maximum(xs - 0.5, cx - h), 0.0, 1.0)
        cov_y = np.clip(np.minimum(ys + 0.5, cy + h) - np.maximum(ys - 0.5, cy - h), 0.0, 1.0)
        cov[y0 : y1 + 1, x0 : x1 + 1] = cov_y[:, None] * cov_x[None, :]
    return cov


def _render_video(sprites: list[_Sprite], length: int, size: int):
    """Render frames and report, per frame, whether any two solid sprite
    masks (coverage >= 0.5) share a pixel."""
    frames = np.zeros((length, size, size, 3), dtype=np.uint8)
    overlap = np.zeros(length, dtype=bool)
    for t in range(length):
        canvas = np.zeros((size, size))
        mask_count = np.zeros((size, size), dtype=np.int32)
        for sp in sprites:
            cov = _render_sprite_coverage(sp, t, size)
            canvas = np.maximum(canvas, cov * sp.intensity)
            mask_count += (cov >= 0.5).astype(np.int32)
        overlap[t] = bool((mask_count >= 2).any())
        gray = np.floor(canvas * 255.0 + 0.5).astype(np.uint8)
        frames[t] = gray[:, :, None]
    return frames, overlap


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive [start, end] runs of True values."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]])
    return [(int(s), int(e)) for s, e in zip(starts, ends)]


def _sprite_meta(sp: _Sprite) -> dict:
    s, e = sp.visible
    return {
        "shape": sp.shape,
        "size": round(float(sp.size), 6),
        "intensity": round(float(sp.intensity), 6),
        "visible": [int(s), int(e)],
        "centers": [[round(float(x), 6), round(float(y), 6)] for x, y in sp.centers],
    }


def _write_video(root, split, vid, frames) -> None:
    vdir = layout.video_dir(root, split, vid)
    vdir.mkdir(parents=True, exist_ok=True)
    for t in range(frames.shape[0]):
        Image.fromarray(frames[t]).save(layout.frame_path(vdir, t))


def generate_synthetic(spec: SynthSpec, out_dir) -> list[TemporalAnnotation]:
    """Write a synthetic dataset under ``out_dir`` and return the test
    annotations (also saved as annotations.json, with full sprite ground
    truth in synth_meta.json)."""
    out_dir = Path(out_dir)
    rng = np.random.default_rng(spec.seed)
    L, S = spec.video_length, spec.frame_size
    annotations: list[TemporalAnnotation] = []
    meta_videos: dict[str, dict] = {}

    (out_dir / "train").mkdir(parents=True, exist_ok=True)
    (out_dir / "test").mkdir(parents=True, exist_ok=True)

    def record(split, vid, kind, sprites, frames):
        _write_video(out_dir, split, vid, frames)
        meta_videos[vid] = {
            "kind": kind,
            "split": split,
            "n_frames": int(L),
            "frame_size": int(S),
            "sprites": [_sprite_meta(sp) for sp in sprites],
        }

    for i in range(spec.n_normal):
        n_sprites = int(rng.integers(spec.n_sprites_range[0], spec.n_sprites_range[1] + 1))
        sprites = _sample_normal_sprites(rng, spec, n_sprites)
        frames, overlap = _render_video(sprites, L, S)
        if overlap.any():
            raise DataError(f"normal video normal_{i:03d} rendered overlapping sprites")
        record("train", f"normal_{i:03d}", "normal", sprites, frames)

    for i in range(spec.n_visual):
        vid = f"visual_{i:03d}"
        for attempt in range(MAX_LAYOUT_TRIES):
            n_sprites = int(rng.integers(spec.n_sprites_range[0], spec.n_sprites_range[1] + 1))
            sprites = _sample_normal_sprites(rng, spec, n_sprites)
            span = int(rng.integers(L // 4, L // 2 + 1))
            start = int(rng.integers(2, L - span - 2))
            side = _uniform(rng, spec.square_side_range)
            square = _sample_linear_sprite(
                rng, spec, "square", side / 2.0, (start, start + span - 1), sprites
            )
            if square is not None:
                sprites = sprites + [square]
                break
        else:
            raise DataError(
                f"could not place the anomalous square in {MAX_LAYOUT_TRIES} tries"
            )
        frames, overlap = _render_video(sprites, L, S)
        if overlap.any():
            raise DataError(f"visual video {vid} rendered overlapping sprites")
        ann = TemporalAnnotation(vid, L, [(start, start + span - 1)], fps=spec.fps)
        annotations.append(ann)
        record("test", vid, "visual", sprites, frames)

    for i in range(spec.n_contextual):
        vid = f"contextual_{i:03d}"
        for attempt in range(MAX_LAYOUT_TRIES):
            pair = _sample_colliding_pair(rng, spec)
            if pair is None:
                continue
            n_sprites = int(rng.integers(spec.n_sprites_range[0], spec.n_sprites_range[1] + 1))
            extra = max(n_sprites - 2, 0)
            try:
                others = _sample_normal_sprites(rng, spec, extra, preexisting=pair)
            except DataError:
                continue
            sprites = pair + others
            frames, overlap = _render_video(sprites, L, S)
            ranges = _runs(overlap)
            if ranges:
                break
        else:
            raise DataError(
                f"could not stage a collision in {MAX_LAYOUT_TRIES} tries"
            )
        ann = TemporalAnnotation(vid, L, ranges, fps=spec.fps)
        annotations.append(ann)
        record("test", vid, "contextual", sprites, frames)

    write_annotations(out_dir / layout.ANNOTATIONS_NAME, annotations)
    meta = {"spec": spec.to_dict(), "videos": meta_videos}
    (out_dir / layout.SYNTH_META_NAME).write_text(json.dumps(meta, indent=2) + "\n")
    return annotations


def load_synth_meta(root) -> dict:
    path = Path(root) / layout.SYNTH_META_NAME
    if not path.exists():
        raise DataError(f"no synthetic ground truth at {path}")
    return json.loads(path.read_text())
