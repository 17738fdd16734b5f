"""Object-interaction branch: proposals, RoI features, similarity graph,
two-layer GCN, and the two fusion heads.

The branch sees a clip as K = T'*M object proposals over the bottleneck
feature frames.  Each proposal is pooled to a d-vector; a learned
similarity between all pairs is row-softmaxed into a dense stochastic
graph; two rounds of graph convolution mix the object features; and the
result is fused back into the main representation, either as a pooled
concat for the one-class head or as an outer-product spatial block
widening the decoder input.

Proposal providers are pluggable.  The grid provider tiles each feature
frame at increasing scales (1x1, 2x2, 3x3, ...), taking whole scales
while they fit within M and padding the remainder with full-frame boxes;
the oracle provider projects ground-truth sprite boxes from a synthetic
dataset into feature coordinates; the external provider reads per-frame
boxes from a JSON file with normalized [0, 1] coordinates:

    {"videos": {"<video_id>": {"boxes": [[[x0, y0, x1, y1], ...], ...]}}}

(outer list over input frames, inner list over that frame's boxes).
All functional pieces come in forward/backward pairs so gradients can
flow from either fusion head back to the bottleneck.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import json

import numpy as np

from . import dataset as ds
from . import layout
from .errors import ConfigError, DataError, ShapeError
from .nn import Param

ROI_GRID = 3


# ---------------------------------------------------------------------------
# Proposals


@dataclass
class ProposalSet:
    """K = T'*M boxes in feature-map coordinates.

    frame_idx: (K,) int, which feature frame each box lives on.
    boxes: (K, 4) float, (x0, y0, x1, y1) with 0 <= x0 < x1 <= W' and
    0 <= y0 < y1 <= H'."""

    frame_idx: np.ndarray
    boxes: np.ndarray
    t_prime: int
    height: int
    width: int

    def __post_init__(self):
        self.frame_idx = np.asarray(self.frame_idx, dtype=np.int64)
        self.boxes = np.asarray(self.boxes, dtype=np.float64)
        if self.boxes.ndim != 2 or self.boxes.shape[1] != 4:
            raise ShapeError(f"boxes must be (K, 4), got {self.boxes.shape}")
        if self.frame_idx.shape != (self.boxes.shape[0],):
            raise ShapeError("frame_idx length must match box count")
        k = self.boxes.shape[0]
        if k == 0 or k % self.t_prime != 0:
            raise DataError(
                f"{k} proposals cannot split evenly over {self.t_prime} feature frames"
            )
        m = k // self.t_prime
        counts = np.bincount(self.frame_idx, minlength=self.t_prime)
        if np.any(self.frame_idx < 0) or np.any(self.frame_idx >= self.t_prime):
            raise DataError("proposal frame index outside [0, T')")
        if not np.all(counts == m):
            raise DataError(
                f"expected exactly {m} proposals per feature frame, got counts {counts}"
            )
        x0, y0, x1, y1 = self.boxes.T
        if not (np.all(x0 >= 0) and np.all(x1 <= self.width)
                and np.all(y0 >= 0) and np.all(y1 <= self.height)):
            raise DataError("proposal box outside the feature frame")
        if not (np.all(x0 < x1) and np.all(y0 < y1)):
            raise DataError("degenerate proposal box (zero or negative extent)")

    @property
    def k(self) -> int:
        return self.boxes.shape[0]

    @property
    def m(self) -> int:
        return self.k // self.t_prime


@dataclass
class ProposalContext:
    """Everything a provider may need to produce boxes for one clip."""

    bottleneck_shape: tuple[int, int, int, int]   # (T', H', W', d)
    input_shape: tuple[int, int, int]             # (T, H, W) pixels
    video_id: str | None = None
    window_start: int = 0


def _slice_center_frame(t_feat: int, t_in: int, t_out: int) -> int:
    """Input-frame index at the temporal center of feature frame t_feat."""
    return (2 * t_feat + 1) * t_in // (2 * t_out)


def _full_frame_box(height: int, width: int) -> list[float]:
    return [0.0, 0.0, float(width), float(height)]


class GridProposer:
    """Deterministic multi-scale tiling of each feature frame."""

    name = "grid"

    def __call__(self, ctx: ProposalContext, m: int) -> ProposalSet:
        t_prime, hp, wp, _ = ctx.bottleneck_shape
        per_frame: list[list[float]] = []
        scale = 1
        while len(per_frame) + scale * scale <= m:
            for i in range(scale):
                for j in range(scale):
                    per_frame.append([
                        wp * j / scale, hp * i / scale,
                        wp * (j + 1) / scale, hp * (i + 1) / scale,
                    ])
            scale += 1
        while len(per_frame) < m:
            per_frame.append(_full_frame_box(hp, wp))
        boxes = np.tile(np.asarray(per_frame), (t_prime, 1))
        frame_idx = np.repeat(np.arange(t_prime), m)
        return ProposalSet(frame_idx, boxes, t_prime, hp, wp)


class OracleProposer:
    """Ground-truth sprite boxes from a synthetic dataset, projected to
    feature coordinates and padded to M with full-frame boxes."""

    name = "oracle"

    def __init__(self, dataset_root):
        self.root = Path(dataset_root)
        try:
            self.meta = ds.load_synth_meta(self.root)
        except DataError as exc:
            raise DataError(
                f"oracle proposals need generator ground truth: {exc}"
            ) from exc

    def __call__(self, ctx: ProposalContext, m: int) -> ProposalSet:
        if ctx.video_id is None or ctx.video_id not in self.meta["videos"]:
            raise DataError(
                f"video {ctx.video_id!r} has no synthetic ground truth; "
                "the oracle provider only works on generated data"
            )
        sprites = self.meta["videos"][ctx.video_id]["sprites"]
        t_prime, hp, wp, _ = ctx.bottleneck_shape
        t_in, h_in, w_in = ctx.input_shape
        sx = w_in / wp
        sy = h_in / hp
        frame_idx, boxes = [], []
        for tf in range(t_prime):
            abs_frame = ctx.window_start + _slice_center_frame(tf, t_in, t_prime)
            frame_boxes: list[list[float]] = []
            for sp in sprites:
                s, e = sp["visible"]
                if not (s <= abs_frame <= e):
                    continue
                cx, cy = sp["centers"][abs_frame]
                half = sp["size"]   # radius, or half side length
                x0 = np.clip((cx - half) / sx, 0.0, wp)
                x1 = np.clip((cx + half) / sx, 0.0, wp)
                y0 = np.clip((cy - half) / sy, 0.0, hp)
                y1 = np.clip((cy + half) / sy, 0.0, hp)
                if x1 - x0 < 1e-6 or y1 - y0 < 1e-6:
                    continue
                frame_boxes.append([x0, y0, x1, y1])
            frame_boxes = frame_boxes[:m]
            while len(frame_boxes) < m:
                frame_boxes.append(_full_frame_box(hp, wp))
            boxes.extend(frame_boxes)
            frame_idx.extend([tf] * m)
        return ProposalSet(np.asarray(frame_idx), np.asarray(boxes), t_prime, hp, wp)


class ExternalProposer:
    """Boxes from a JSON file of per-input-frame normalized coordinates."""

    name = "external"

    def __init__(self, path):
        path = Path(path)
        if not path.exists():
            raise DataError(f"proposal file not found: {path}")
        doc = json.loads(path.read_text())
        if "videos" not in doc:
            raise DataError(f"{path}: missing 'videos' key")
        self.videos = doc["videos"]
        self.path = path

    def __call__(self, ctx: ProposalContext, m: int) -> ProposalSet:
        if ctx.video_id not in self.videos:
            raise DataError(f"{self.path}: no proposals for video {ctx.video_id!r}")
        per_frame = self.videos[ctx.video_id]["boxes"]
        t_prime, hp, wp, _ = ctx.bottleneck_shape
        t_in = ctx.input_shape[0]
        frame_idx, boxes = [], []
        for tf in range(t_prime):
            abs_frame = ctx.window_start + _slice_center_frame(tf, t_in, t_prime)
            if abs_frame >= len(per_frame):
                raise DataError(
                    f"{self.path}: video {ctx.video_id} has boxes for "
                    f"{len(per_frame)} frames, need frame {abs_frame}"
                )
            frame_boxes = []
            for x0, y0, x1, y1 in per_frame[abs_frame][:m]:
                frame_boxes.append([
                    np.clip(x0, 0, 1) * wp, np.clip(y0, 0, 1) * hp,
                    np.clip(x1, 0, 1) * wp, np.clip(y1, 0, 1) * hp,
                ])
            while len(frame_boxes) < m:
                frame_boxes.append(_full_frame_box(hp, wp))
            boxes.extend(frame_boxes)
            frame_idx.extend([tf] * m)
        return ProposalSet(np.asarray(frame_idx), np.asarray(boxes), t_prime, hp, wp)


def get_proposer(provider, dataset_root=None, proposal_file=None):
    if callable(provider):
        return provider
    if provider == "grid":
        return GridProposer()
    if provider == "oracle":
        if dataset_root is None:
            raise ConfigError("oracle proposals need a dataset root")
        return OracleProposer(dataset_root)
    if provider == "external":
        if proposal_file is None:
            raise ConfigError("external proposals need a proposal file")
        return ExternalProposer(proposal_file)
    raise ConfigError(
        f"unknown proposal provider {provider!r}; known: grid, oracle, external"
    )


def propose(ctx: ProposalContext, provider, m: int) -> ProposalSet:
    if m < 1:
        raise ConfigError(f"need at least one proposal per frame, got m={m}")
    return get_proposer(provider)(ctx, m)


# ---------------------------------------------------------------------------
# RoI features


def _roi_sample_coords(boxes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(R, 9) array coordinates of the 3x3 regular sub-cell centers."""
    x0, y0, x1, y1 = boxes.T
    offs = (np.arange(ROI_GRID) + 0.5) / ROI_GRID
    xs = x0[:, None] + (x1 - x0)[:, None] * offs[None, :]
    ys = y0[:, None] + (y1 - y0)[:, None] * offs[None, :]
    ax = np.repeat(xs[:, None, :], ROI_GRID, axis=1).reshape(len(boxes), -1) - 0.5
    ay = np.repeat(ys[:, :, None], ROI_GRID, axis=2).reshape(len(boxes), -1) - 0.5
    return ax, ay


def _bilinear_gather(frame: np.ndarray, ax: np.ndarray, ay: np.ndarray):
    """Sample frame (H, W, d) at array coords; returns values plus the
    corner indices/weights needed to push gradients back."""
    h, w, _ = frame.shape
    ax = np.clip(ax, 0.0, w - 1.0)
    ay = np.clip(ay, 0.0, h - 1.0)
    ix0 = np.minimum(np.floor(ax).astype(np.int64), max(w - 2, 0))
    iy0 = np.minimum(np.floor(ay).astype(np.int64), max(h - 2, 0))
    ix1 = np.minimum(ix0 + 1, w - 1)
    iy1 = np.minimum(iy0 + 1, h - 1)
    fx = ax - ix0
    fy = ay - iy0
    w00 = (1 - fy) * (1 - fx)
    w01 = (1 - fy) * fx
    w10 = fy * (1 - fx)
    w11 = fy * fx
    vals = (w00[..., None] * frame[iy0, ix0]
            + w01[..., None] * frame[iy0, ix1]
            + w10[..., None] * frame[iy1, ix0]
            + w11[..., None] * frame[iy1, ix1])
    return vals, (iy0, ix0, iy1, ix1, w00, w01, w10, w11)


def roi_features(h: np.ndarray, props: ProposalSet, cache: bool = False):
    """RoI-align each box to 3x3xd by bilinear sampling, then max-pool
    to one d-vector per proposal.

    h: (T', H', W', d) bottleneck of a single clip.  Returns (K, d), or
    ((K, d), cache) when caching for backward."""
    if h.ndim != 4:
        raise ShapeError(f"expected a (T', H', W', d) bottleneck, got {h.shape}")
    tp, hp, wp, d = h.shape
    if (tp, hp, wp) != (props.t_prime, props.height, props.width):
        raise ShapeError(
            f"proposals were built for {(props.t_prime, props.height, props.width)}, "
            f"bottleneck is {(tp, hp, wp)}"
        )
    feats = np.empty((props.k, d))
    caches = {}
    for tf in range(tp):
        rows = np.flatnonzero(props.frame_idx == tf)
        if rows.size == 0:
            continue
        ax, ay = _roi_sample_coords(props.boxes[rows])
        vals, corners = _bilinear_gather(h[tf], ax, ay)   # (R, 9, d)
        arg = vals.argmax(axis=1)                         # (R, d)
        feats[rows] = np.take_along_axis(vals, arg[:, None, :], axis=1)[:, 0, :]
        if cache:
            caches[tf] = (rows, arg, corners)
    if not cache:
        return feats
    return feats, (h.shape, caches)


def roi_features_backward(gfeats: np.ndarray, cache) -> np.ndarray:
    """Gradient of roi_features w.r.t. the bottleneck."""
    h_shape, caches = cache
    gh = np.zeros(h_shape)
    d = h_shape[3]
    cols = np.arange(d)
    for tf, (rows, arg, corners) in caches.items():
        iy0, ix0, iy1, ix1, w00, w01, w10, w11 = corners
        r = np.arange(rows.size)[:, None]
        # gradient flows only through the winning sample of each channel
        siy0, six0 = iy0[r, arg], ix0[r, arg]
        siy1, six1 = iy1[r, arg], ix1[r, arg]
        g = gfeats[rows]
        np.add.at(gh[tf], (siy0, six0, cols[None, :]), g * w00[r, arg])
        np.add.at(gh[tf], (siy0, six1, cols[None, :]), g * w01[r, arg])
        np.add.at(gh[tf], (siy1, six0, cols[None, :]), g * w10[r, arg])
        np.add.at(gh[tf], (siy1, six1, cols[None, :]), g * w11[r, arg])
    return gh


# ---------------------------------------------------------------------------
# Similarity graph


def similarity_scores(p: np.ndarray, wa: np.ndarray, wb: np.ndarray,
                      cache: bool = False):
    """Raw pairwise scores S_ij = <wa^T p_i, wb^T p_j> for (K, d) features
    and (d, d') projection matrices."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2:
        raise ShapeError(f"object features must be (K, d), got {p.shape}")
    a = p @ wa
    b = p @ wb
    s = a @ b.T
    if not cache:
        return s
    return s, (p, wa, wb, a, b)


def similarity_scores_backward(gs: np.ndarray, cache):
    p, wa, wb, a, b = cache
    ga = gs @ b
    gb = gs.T @ a
    gp = ga @ wa.T + gb @ wb.T
    gwa = p.T @ ga
    gwb = p.T @ gb
    return gp, gwa, gwb


def row_softmax(s: np.ndarray) -> np.ndarray:
    """Row-stochastic graph from raw scores, max-subtracted for stability."""
    z = s - s.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def row_softmax_backward(gg: np.ndarray, g: np.ndarray) -> np.ndarray:
    inner = (gg * g).sum(axis=1, keepdims=True)
    return g * (gg - inner)


def similarity_graph(p: np.ndarray, wa: np.ndarray, wb: np.ndarray) -> np.ndarray:
    """Row-stochastic similarity graph over object features."""
    return row_softmax(similarity_scores(p, wa, wb))


def check_row_stochastic(g: np.ndarray, tol: float = 1e-4) -> None:
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ShapeError(f"graph must be square, got {g.shape}")
    err = np.abs(g.sum(axis=1) - 1.0).max()
    if err > tol:
        raise DataError(f"graph rows must sum to 1 (max deviation {err:.3g})")


# ---------------------------------------------------------------------------
# Graph convolution


def gcn_forward(g: np.ndarray, p: np.ndarray, w0: np.ndarray, w1: np.ndarray,
                cache: bool = False):
    """Two-layer graph convolution: relu(G P W0), then linear G H W1."""
    check_row_stochastic(g)
    if p.shape[0] != g.shape[0]:
        raise ShapeError(
            f"graph is {g.shape} but features have {p.shape[0]} rows"
        )
    gp = g @ p
    pre = gp @ w0
    h1 = np.maximum(pre, 0.0)
    gh1 = g @ h1
    out = gh1 @ w1
    if not cache:
        return out
    return out, (g, p, w0, w1, gp, pre, h1, gh1)


def gcn_backward(gout: np.ndarray, cache):
    g, p, w0, w1, gp, pre, h1, gh1 = cache
    gw1 = gh1.T @ gout
    g_gh1 = gout @ w1.T
    gg = g_gh1 @ h1.T
    gh1_ = g.T @ g_gh1
    gpre = gh1_ * (pre > 0.0)
    gw0 = gp.T @ gpre
    g_gp = gpre @ w0.T
    gg += g_gp @ p.T
    gp_ = g.T @ g_gp
    return gg, gp_, gw0, gw1


# ---------------------------------------------------------------------------
# Fusion heads


def fuse_oc(h_enc: np.ndarray, h_gcn: np.ndarray, w: np.ndarray,
            cache: bool = False):
    """Pooled concat fusion for the one-class head.

    h_enc: (T', H', W', d) bottleneck; h_gcn: (K, d) graph output;
    w: (2d, Z) bias-free projection.  Returns the Z-vector."""
    if h_enc.ndim != 4 or h_gcn.ndim != 2 or h_enc.shape[3] != h_gcn.shape[1]:
        raise ShapeError(
            f"cannot fuse bottleneck {h_enc.shape} with graph features {h_gcn.shape}"
        )
    d = h_enc.shape[3]
    if w.shape[0] != 2 * d:
        raise ShapeError(f"fusion weight must be (2d, Z) = ({2*d}, _), got {w.shape}")
    fa = h_enc.mean(axis=(0, 1, 2))
    fb = h_gcn.mean(axis=0)
    both = np.concatenate([fa, fb])
    z = both @ w
    if not cache:
        return z
    return z, (h_enc.shape, h_gcn.shape, both, w)


def fuse_oc_backward(gz: np.ndarray, cache):
    enc_shape, gcn_shape, both, w = cache
    d = enc_shape[3]
    gboth = w @ gz
    gw = np.outer(both, gz)
    spatial = enc_shape[0] * enc_shape[1] * enc_shape[2]
    gh_enc = np.broadcast_to(gboth[:d] / spatial, enc_shape).copy()
    gh_gcn = np.broadcast_to(gboth[d:] / gcn_shape[0], gcn_shape).copy()
    return gh_enc, gh_gcn, gw


def fuse_recon(h_enc: np.ndarray, h_gcn: np.ndarray, w1: np.ndarray,
               w2: np.ndarray, cache: bool = False):
    """Outer-product fusion for the reconstruction decoder.

    The pooled graph vector f is expanded by two linear maps d -> H'*d,
    read as per-channel spatial vectors; their per-channel outer product
    forms an (H', W', d) block, replicated over T' and concatenated with
    the bottleneck along channels.  Requires H' = W'."""
    if h_enc.ndim != 4 or h_gcn.ndim != 2 or h_enc.shape[3] != h_gcn.shape[1]:
        raise ShapeError(
            f"cannot fuse bottleneck {h_enc.shape} with graph features {h_gcn.shape}"
        )
    tp, hp, wp, d = h_enc.shape
    if hp != wp:
        raise ShapeError(
            f"outer-product fusion needs square feature frames, got {hp}x{wp}"
        )
    if w1.shape != (d, hp * d) or w2.shape != (d, hp * d):
        raise ShapeError(
            f"expansion weights must be ({d}, {hp * d}), got {w1.shape} and {w2.shape}"
        )
    f = h_gcn.mean(axis=0)
    f1 = (f @ w1).reshape(hp, d)
    f2 = (f @ w2).reshape(wp, d)
    block = f1[:, None, :] * f2[None, :, :]
    fused = np.concatenate(
        [h_enc, np.broadcast_to(block, (tp, hp, wp, d))], axis=3
    )
    if not cache:
        return fused
    return fused, (h_enc.shape, h_gcn.shape, f, f1, f2, w1, w2)


def fuse_recon_backward(gfused: np.ndarray, cache):
    enc_shape, gcn_shape, f, f1, f2, w1, w2 = cache
    tp, hp, wp, d = enc_shape
    gh_enc = gfused[..., :d]
    gblock = gfused[..., d:].sum(axis=0)          # (H', W', d), T' replicas
    gf1 = (gblock * f2[None, :, :]).sum(axis=1)   # (H', d)
    gf2 = (gblock * f1[:, None, :]).sum(axis=0)   # (W', d)
    gw1 = np.outer(f, gf1.reshape(-1))
    gw2 = np.outer(f, gf2.reshape(-1))
    gf = w1 @ gf1.reshape(-1) + w2 @ gf2.reshape(-1)
    gh_gcn = np.broadcast_to(gf / gcn_shape[0], gcn_shape).copy()
    return gh_enc, gh_gcn, gw1, gw2


# ---------------------------------------------------------------------------
# Trainable branch bundling the parameters


class InteractionBranch:
    """Parameters and plumbing for the graph branch of one model.

    fusion: 'oc' projects pooled concat features to z_dim; 'recon'
    expands the pooled graph vector into an (H', W', d) block that
    doubles the decoder's input channels."""

    def __init__(self, d: int, fusion: str, rng: np.random.Generator | None,
                 z_dim: int | None = None, spatial: int | None = None):
        from .nn import he_normal

        def init(shape, fan_in, gain=1.0):
            if rng is None:
                return np.zeros(shape)
            return he_normal(rng, shape, fan_in, gain=gain)

        self.d = d
        self.fusion = fusion
        self.phi_a = Param(init((d, d), d), "phi_a")
        self.phi_b = Param(init((d, d), d), "phi_b")
        self.gcn_w0 = Param(init((d, d), d, gain=2.0), "gcn_w0")
        self.gcn_w1 = Param(init((d, d), d), "gcn_w1")
        if fusion == "oc":
            if z_dim is None:
                raise ConfigError("one-class fusion needs z_dim")
            self.fuse_w = Param(init((2 * d, z_dim), 2 * d), "fuse_oc")
            self._fuse_params = [self.fuse_w]
        elif fusion == "recon":
            if spatial is None:
                raise ConfigError("reconstruction fusion needs the H' extent")
            self.fuse_w1 = Param(init((d, spatial * d), d), "fuse_recon_a")
            self.fuse_w2 = Param(init((d, spatial * d), d), "fuse_recon_b")
            self._fuse_params = [self.fuse_w1, self.fuse_w2]
        else:
            raise ConfigError(f"unknown fusion {fusion!r}; known: oc, recon")

    def params(self) -> list[Param]:
        return [self.phi_a, self.phi_b, self.gcn_w0, self.gcn_w1] + self._fuse_params

    def forward(self, h_enc: np.ndarray, props: ProposalSet, cache: bool = False):
        """h_enc: (T', H', W', d) single-clip bottleneck.  Returns the
        fused output (Z-vector or widened bottleneck)."""
        p, roi_cache = roi_features(h_enc, props, cache=True)
        s, sim_cache = similarity_scores(p, self.phi_a.value, self.phi_b.value,
                                         cache=True)
        g = row_softmax(s)
        h2, gcn_cache = gcn_forward(g, p, self.gcn_w0.value, self.gcn_w1.value,
                                    cache=True)
        if self.fusion == "oc":
            out, fuse_cache = fuse_oc(h_enc, h2, self.fuse_w.value, cache=True)
        else:
            out, fuse_cache = fuse_recon(h_enc, h2, self.fuse_w1.value,
                                         self.fuse_w2.value, cache=True)
        if not cache:
            return out
        return out, (roi_cache, sim_cache, g, gcn_cache, fuse_cache)

    def backward(self, gout: np.ndarray, cache) -> np.ndarray:
        """Accumulates parameter gradients; returns gradient w.r.t. h_enc."""
        roi_cache, sim_cache, g, gcn_cache, fuse_cache = cache
        if self.fusion == "oc":
            gh_enc, gh2, gw = fuse_oc_backward(gout, fuse_cache)
            self.fuse_w.grad += gw
        else:
            gh_enc, gh2, gw1, gw2 = fuse_recon_backward(gout, fuse_cache)
            self.fuse_w1.grad += gw1
            self.fuse_w2.grad += gw2
        gg, gp, gw0, gw1_ = gcn_backward(gh2, gcn_cache)
        self.gcn_w0.grad += gw0
        self.gcn_w1.grad += gw1_
        gs = row_softmax_backward(gg, g)
        gp2, gwa, gwb = similarity_scores_backward(gs, sim_cache)
        self.phi_a.grad += gwa
        self.phi_b.grad += gwb
        gh_enc = gh_enc + roi_features_backward(gp + gp2, roi_cache)
        return gh_enc
