"""Encoder/decoder shape contracts, preset table, and the one-class head."""
import numpy as np
import pytest

from vadkit.backbone import (
    BackboneConfig,
    OcHead,
    Stage,
    build_decoder,
    build_encoder,
    decode,
    encode,
    get_preset,
)
from vadkit.errors import ConfigError, ShapeError


@pytest.mark.parametrize("name,bottleneck", [
    ("full", (4, 7, 7, 2048)),
    ("full_capacity", (8, 14, 14, 2048)),
    ("toy", (2, 2, 2, 64)),
    ("toy_train", (4, 4, 4, 32)),
    ("tiny", (1, 2, 2, 3)),
])
def test_preset_bottleneck_shapes(name, bottleneck):
    assert get_preset(name).bottleneck_shape == bottleneck


def test_unknown_preset_is_an_error():
    with pytest.raises(ConfigError):
        get_preset("nope")


def test_toy_encode_decode_round_trip_shapes():
    cfg = get_preset("toy")
    rng = np.random.default_rng(0)
    enc = build_encoder(cfg, rng)
    dec = build_decoder(cfg, rng)
    x = rng.standard_normal((2,) + tuple(cfg.input_shape))
    h = encode(enc, x, cfg)
    assert h.shape == (2, 2, 2, 2, 64)
    y = decode(dec, h, cfg)
    assert y.shape == x.shape
    # decoder ends in tanh
    assert np.all(np.abs(y) <= 1.0)


def test_single_clip_promoted_to_batch():
    cfg = get_preset("tiny")
    enc = build_encoder(cfg, np.random.default_rng(1))
    h = encode(enc, np.zeros(tuple(cfg.input_shape)), cfg)
    assert h.shape == (1,) + cfg.bottleneck_shape


def test_zero_params_map_zero_to_zero():
    # no bias anywhere, so zero weights give exactly zero activations
    cfg = get_preset("toy")
    enc = build_encoder(cfg, rng=None)
    dec = build_decoder(cfg, rng=None)
    x = np.zeros((1,) + tuple(cfg.input_shape))
    h = encode(enc, x, cfg)
    assert np.all(h == 0)
    assert np.all(decode(dec, h, cfg) == 0)


def test_no_parameter_is_a_bias():
    cfg = get_preset("toy_train")
    rng = np.random.default_rng(2)
    for net in (build_encoder(cfg, rng), build_decoder(cfg, rng)):
        for p in net.params():
            assert not p.name.endswith(".b"), p.name
    head = OcHead(cfg.feature_dim, cfg.z_dim, rng)
    assert [p.name for p in head.params()] == ["oc_head.w"]


def test_encode_rejects_wrong_input_shape():
    cfg = get_preset("toy")
    enc = build_encoder(cfg, np.random.default_rng(0))
    with pytest.raises(ShapeError, match="does not match"):
        encode(enc, np.zeros((1, 16, 32, 32, 3)), cfg)


def test_decode_rejects_wrong_bottleneck_and_accepts_fused():
    cfg = get_preset("toy")
    rng = np.random.default_rng(3)
    dec = build_decoder(cfg, rng)
    with pytest.raises(ShapeError, match="does not match"):
        decode(dec, np.zeros((1, 2, 2, 2, 32)), cfg)
    dec2 = build_decoder(cfg, rng, in_channels=2 * cfg.feature_dim)
    y = decode(dec2, np.zeros((1, 2, 2, 2, 128)), cfg, fused=True)
    assert y.shape == (1,) + tuple(cfg.input_shape)


def test_oc_head_identity_weight_passes_mean_through():
    d = 6
    head = OcHead(d, d, rng=None)
    head.proj.w.value = np.eye(d)
    h = np.full((2, 3, 4, 4, d), 0.0)
    h[0] = 0.25
    h[1] = -1.5
    z = head(h)
    assert np.allclose(z[0], 0.25)
    assert np.allclose(z[1], -1.5)


def test_oc_head_default_width_is_128():
    cfg = get_preset("full")
    assert cfg.z_dim == 128
    head = OcHead(cfg.feature_dim, cfg.z_dim, np.random.default_rng(0))
    z = head(np.zeros((1, 4, 7, 7, 2048)))
    assert z.shape == (1, 128)
    assert np.all(z == 0)  # no bias


def test_config_round_trips_through_dict():
    cfg = get_preset("toy_train")
    again = BackboneConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_with_input_channels_keeps_geometry():
    cfg = get_preset("toy").with_input_channels(5)
    assert cfg.in_channels == 5
    assert cfg.bottleneck_shape == (2, 2, 2, 64)
    enc = build_encoder(cfg, np.random.default_rng(0))
    h = encode(enc, np.zeros((1, 16, 64, 64, 5)), cfg)
    assert h.shape == (1, 2, 2, 2, 64)


def test_stage_strides_must_be_positive():
    with pytest.raises(ConfigError):
        BackboneConfig(input_shape=(8, 8, 8, 3), stages=(Stage(4, (0, 2, 2)),))


def test_stages_must_divide_input_evenly():
    # 8 frames through two temporal halvings is fine; three is not (1 left)
    with pytest.raises(ConfigError):
        BackboneConfig(
            input_shape=(6, 8, 8, 3),
            stages=(Stage(4, (4, 2, 2)),),
        )
