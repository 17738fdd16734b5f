"""Model assembly: config validation, both scoring families, the graph
branch wiring, and end-to-end gradients on the smallest geometry."""
import numpy as np
import pytest

from vadkit.dataset import Clip
from vadkit.errors import ConfigError
from vadkit.interaction import propose
from vadkit.models import (
    ModelConfig,
    OneClassModel,
    ReconModel,
    build_model,
    proposal_context,
)
from vadkit.recon import recon_score
from vadkit.svdd import Center, svdd_score

from conftest import assert_grads_close, fd_gradient


def tiny_cfg(**kw):
    return ModelConfig(preset="tiny", **kw)


def tiny_clip(rng, cfg, video_id="v", window_start=0):
    data = rng.uniform(-1, 1, size=cfg.clip_config.shape)
    return Clip(data=data, video_id=video_id, center_frame=window_start,
                window_start=window_start)


# --- configuration --------------------------------------------------------------

def test_config_rejects_unknown_method():
    with pytest.raises(ConfigError, match="unknown method"):
        ModelConfig(method="kde")


def test_config_rejects_nonpositive_proposal_count():
    with pytest.raises(ConfigError, match="proposals_per_frame"):
        ModelConfig(proposals_per_frame=0)


def test_config_fills_backbone_from_preset():
    cfg = tiny_cfg()
    assert cfg.backbone_config.in_channels == 3
    assert cfg.backbone_config.bottleneck_shape == (1, 2, 2, 3)
    cc = cfg.clip_config
    assert cc.shape == (4, 8, 8, 3)
    assert not cc.with_flow


def test_config_flow_widens_input_channels():
    cfg = tiny_cfg(flow=True)
    assert cfg.backbone_config.in_channels == 5
    assert cfg.clip_config.c == 5


def test_config_rejects_backbone_channel_mismatch():
    plain = tiny_cfg().backbone
    with pytest.raises(ConfigError, match="input channels"):
        ModelConfig(preset="tiny", flow=True, backbone=dict(plain))


def test_config_round_trips_and_json_is_stable():
    cfg = ModelConfig(method="ocsvdd", preset="tiny", gcn=True,
                      proposals_per_frame=2, proposal_provider="oracle")
    back = ModelConfig.from_dict(cfg.to_dict())
    assert back.to_dict() == cfg.to_dict()
    assert back.to_json() == cfg.to_json()


def test_build_model_dispatches_on_method():
    assert isinstance(build_model(tiny_cfg(method="recon"), None), ReconModel)
    assert isinstance(build_model(tiny_cfg(method="ocsvdd"), None), OneClassModel)
    with pytest.raises(ConfigError, match="method"):
        OneClassModel(tiny_cfg(method="recon"), None)
    with pytest.raises(ConfigError, match="method"):
        ReconModel(tiny_cfg(method="ocsvdd"), None)


def test_proposal_context_carries_clip_geometry():
    cfg = tiny_cfg()
    clip = Clip(data=np.zeros(cfg.clip_config.shape), video_id="vid7",
                center_frame=9, window_start=5)
    ctx = proposal_context(cfg, clip)
    assert ctx.bottleneck_shape == (1, 2, 2, 3)
    assert ctx.input_shape == (4, 8, 8)
    assert ctx.video_id == "vid7"
    assert ctx.window_start == 5


# --- one-class family -----------------------------------------------------------

def test_oc_features_shape_and_score_identity():
    rng = np.random.default_rng(0)
    cfg = tiny_cfg(method="ocsvdd")
    model = OneClassModel(cfg, rng)
    clip = tiny_clip(rng, cfg)
    z = model.features(clip.data[None])
    assert z.shape == (1, cfg.backbone_config.z_dim)

    model.center = Center(np.full(cfg.backbone_config.z_dim, 0.1))
    assert model.score_clip(clip) == pytest.approx(svdd_score(z[0], model.center))


def test_oc_score_requires_center():
    rng = np.random.default_rng(1)
    cfg = tiny_cfg(method="ocsvdd")
    model = OneClassModel(cfg, rng)
    with pytest.raises(ConfigError, match="before the center"):
        model.score_clip(tiny_clip(rng, cfg))


def test_oc_center_is_frozen_after_first_assignment():
    model = OneClassModel(tiny_cfg(method="ocsvdd"), None)
    model.center = Center(np.full(4, 0.1))
    with pytest.raises(ConfigError, match="frozen"):
        model.center = Center(np.full(4, 0.2))


def test_oc_gcn_needs_one_proposal_set_per_clip():
    rng = np.random.default_rng(2)
    cfg = tiny_cfg(method="ocsvdd", gcn=True, proposals_per_frame=2)
    model = OneClassModel(cfg, rng)
    clip = tiny_clip(rng, cfg)
    with pytest.raises(ConfigError, match="proposal set per clip"):
        model.features(clip.data[None])
    props = propose(proposal_context(cfg, clip), "grid", 2)
    z = model.features(clip.data[None], [props])
    assert z.shape == (1, cfg.backbone_config.z_dim)


# --- reconstruction family ------------------------------------------------------

def test_recon_forward_matches_input_shape_and_range():
    rng = np.random.default_rng(3)
    cfg = tiny_cfg(method="recon")
    model = ReconModel(cfg, rng)
    clip = tiny_clip(rng, cfg)
    xhat = model.forward(clip.data[None])
    assert xhat.shape == clip.data[None].shape
    assert np.all(np.abs(xhat) <= 1.0)   # tanh output layer
    assert model.score_clip(clip) == pytest.approx(recon_score(clip.data, xhat[0]))


def test_recon_gcn_widens_decoder_and_keeps_output_shape():
    rng = np.random.default_rng(4)
    cfg = tiny_cfg(method="recon", gcn=True, proposals_per_frame=2)
    model = ReconModel(cfg, rng)
    clip = tiny_clip(rng, cfg)
    with pytest.raises(ConfigError, match="proposal set per clip"):
        model.forward(clip.data[None])
    props = propose(proposal_context(cfg, clip), "grid", 2)
    xhat = model.forward(clip.data[None], [props])
    assert xhat.shape == clip.data[None].shape


def test_models_are_seeded_deterministically():
    cfg = tiny_cfg(method="recon")
    a = ReconModel(cfg, np.random.default_rng(7))
    b = ReconModel(cfg, np.random.default_rng(7))
    for pa, pb in zip(a.params(), b.params()):
        assert np.array_equal(pa.value, pb.value)


def test_param_names_are_unique_per_model():
    for method, gcn in [("recon", False), ("recon", True),
                        ("ocsvdd", False), ("ocsvdd", True)]:
        model = build_model(tiny_cfg(method=method, gcn=gcn), np.random.default_rng(8))
        names = [p.name for p in model.params()]
        assert len(names) == len(set(names)), f"{method} gcn={gcn}: {names}"


# --- end-to-end gradients on the smallest geometry -------------------------------

def test_oc_gcn_model_gradients_match_finite_differences():
    rng = np.random.default_rng(5)
    cfg = tiny_cfg(method="ocsvdd", gcn=True, proposals_per_frame=2)
    model = OneClassModel(cfg, rng)
    clip = tiny_clip(rng, cfg)
    props = propose(proposal_context(cfg, clip), "grid", 2)
    r = rng.standard_normal(cfg.backbone_config.z_dim)

    z, caches = model.features(clip.data[None], [props], cache=True)
    model.backward_features(r[None], caches)

    for p in model.params():
        def loss_of_p(pv, p=p):
            keep = p.value
            p.value = pv
            z = model.features(clip.data[None], [props])
            p.value = keep
            return float(z[0] @ r)

        assert_grads_close(p.grad, fd_gradient(loss_of_p, p.value.copy()),
                           what=f"oc-gcn param {p.name}")


def test_recon_gcn_model_gradients_match_finite_differences():
    rng = np.random.default_rng(6)
    cfg = tiny_cfg(method="recon", gcn=True, proposals_per_frame=2)
    model = ReconModel(cfg, rng)
    clip = tiny_clip(rng, cfg)
    props = propose(proposal_context(cfg, clip), "grid", 2)
    r = rng.standard_normal(clip.data[None].shape)

    xhat, caches = model.forward(clip.data[None], [props], cache=True)
    model.backward(r, caches)

    for p in model.params():
        def loss_of_p(pv, p=p):
            keep = p.value
            p.value = pv
            out = model.forward(clip.data[None], [props])
            p.value = keep
            return float(np.sum(out * r))

        assert_grads_close(p.grad, fd_gradient(loss_of_p, p.value.copy()),
                           what=f"recon-gcn param {p.name}")
