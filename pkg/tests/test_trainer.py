"""Training loops: reproducibility, artifacts, divergence handling, and
quick sanity on the loss curves."""
import json

import numpy as np
import pytest

import vadkit.trainer as trainer_mod
from vadkit.checkpoint import load_checkpoint
from vadkit.errors import ConfigError, TrainingDiverged
from vadkit.trainer import TrainConfig, train


def quick_cfg(**kw):
    base = dict(method="recon", steps=3, batch_size=2, checkpoint_every=0, seed=0)
    base.update(kw)
    return TrainConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigError, match="learning_rate"):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError, match="batch_size"):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError, match="steps"):
        TrainConfig(steps=0)
    with pytest.raises(ConfigError, match="weight_decay"):
        TrainConfig(weight_decay=-0.1)
    with pytest.raises(ConfigError, match="unknown method"):
        TrainConfig(method="pca")


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ConfigError, match="momentum"):
        TrainConfig.from_dict({"method": "recon", "momentum": 0.9})


def test_config_round_trips_through_dict():
    cfg = quick_cfg(learning_rate=3e-4, seed=7)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_same_seed_runs_are_byte_identical(synth_root, tmp_path):
    res_a = train(quick_cfg(), synth_root, tmp_path / "a")
    res_b = train(quick_cfg(), synth_root, tmp_path / "b")
    assert res_a.metrics_path.read_bytes() == res_b.metrics_path.read_bytes()
    assert (tmp_path / "a" / "resolved_config.json").read_bytes() == \
           (tmp_path / "b" / "resolved_config.json").read_bytes()
    assert res_a.losses == res_b.losses


def test_different_seed_changes_the_loss_curve(synth_root, tmp_path):
    res_a = train(quick_cfg(seed=0), synth_root, tmp_path / "a")
    res_b = train(quick_cfg(seed=1), synth_root, tmp_path / "b")
    assert res_a.losses != res_b.losses


def test_metrics_log_format(synth_root, tmp_path):
    res = train(quick_cfg(), synth_root, tmp_path / "run")
    lines = res.metrics_path.read_text().splitlines()
    assert len(lines) == 3
    for i, line in enumerate(lines, start=1):
        step, loss = line.split()
        assert int(step) == i
        assert np.isfinite(float(loss))
    timings = (tmp_path / "run" / "timings.log").read_text().splitlines()
    assert len(timings) == 3


def test_recon_loss_decreases(synth_root, tmp_path):
    res = train(quick_cfg(steps=30), synth_root, tmp_path / "run")
    first = np.mean(res.losses[:5])
    last = np.mean(res.losses[-5:])
    assert last < first


def test_ocsvdd_center_is_computed_frozen_and_persisted(synth_root, tmp_path):
    res = train(quick_cfg(method="ocsvdd", steps=2), synth_root, tmp_path / "run")
    model, step, _ = load_checkpoint(res.checkpoint_path)
    assert step == 2
    assert model.center is not None
    assert np.min(np.abs(model.center.c)) >= 0.1 - 1e-12
    from vadkit.svdd import Center
    with pytest.raises(ConfigError, match="frozen"):
        model.center = Center(np.full_like(model.center.c, 0.2))


def test_checkpoint_cadence(synth_root, tmp_path):
    train(quick_cfg(steps=5, checkpoint_every=2), synth_root, tmp_path / "run")
    names = sorted(p.name for p in (tmp_path / "run").glob("*.npz"))
    assert names == ["checkpoint_final.npz", "checkpoint_step_000002.npz",
                     "checkpoint_step_000004.npz"]
    train(quick_cfg(steps=5, checkpoint_every=0), synth_root, tmp_path / "run2")
    names = [p.name for p in (tmp_path / "run2").glob("*.npz")]
    assert names == ["checkpoint_final.npz"]


def test_divergence_raises_and_names_last_checkpoint(synth_root, tmp_path, monkeypatch):
    real = trainer_mod.recon_loss
    calls = {"n": 0}

    def poisoned(x, xhat, reduction="sum"):
        calls["n"] += 1
        loss, g = real(x, xhat, reduction)
        if calls["n"] == 3:
            return float("inf"), g
        return loss, g

    monkeypatch.setattr(trainer_mod, "recon_loss", poisoned)
    with pytest.raises(TrainingDiverged) as err:
        train(quick_cfg(steps=10, checkpoint_every=2), synth_root, tmp_path / "run")
    assert err.value.step == 3
    assert err.value.last_checkpoint is not None
    assert err.value.last_checkpoint.name == "checkpoint_step_000002.npz"
    # the named checkpoint is intact and loadable
    model, step, _ = load_checkpoint(err.value.last_checkpoint)
    assert step == 2


def test_divergence_before_any_checkpoint(synth_root, tmp_path, monkeypatch):
    def poisoned(x, xhat, reduction="sum"):
        return float("nan"), np.zeros_like(x)

    monkeypatch.setattr(trainer_mod, "recon_loss", poisoned)
    with pytest.raises(TrainingDiverged, match="<none>"):
        train(quick_cfg(steps=5, checkpoint_every=100), synth_root, tmp_path / "run")


def test_resolved_config_round_trips(synth_root, tmp_path):
    cfg = quick_cfg(learning_rate=2e-4)
    train(cfg, synth_root, tmp_path / "run")
    stored = json.loads((tmp_path / "run" / "resolved_config.json").read_text())
    assert TrainConfig.from_dict(stored) == cfg


def test_gcn_training_runs_and_persists_branch_params(synth_root, tmp_path):
    cfg = quick_cfg(steps=2, gcn=True, proposals_per_frame=2,
                    proposal_provider="grid")
    res = train(cfg, synth_root, tmp_path / "run")
    assert all(np.isfinite(l) for l in res.losses)
    model, _, _ = load_checkpoint(res.checkpoint_path)
    assert model.branch is not None


def test_progress_callback_sees_every_step(synth_root, tmp_path):
    seen = []
    train(quick_cfg(steps=3), synth_root, tmp_path / "run",
          progress=lambda step, loss: seen.append(step))
    assert seen == [1, 2, 3]
