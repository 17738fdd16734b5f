"""Command-line surface, exercised in process through main(argv)."""
import json

import numpy as np
import pytest

from vadkit.cli import main


@pytest.fixture(scope="module")
def cli_root(tmp_path_factory):
    """A small dataset plus one finished training run, shared by the
    read-only CLI tests."""
    base = tmp_path_factory.mktemp("cli")
    data = base / "data"
    run = base / "run"
    rc = main(["synth", "--out", str(data), "--normal", "2", "--visual", "1",
               "--contextual", "0", "--seed", "4", "--length", "32"])
    assert rc == 0
    rc = main(["train", "--data", str(data), "--out", str(run),
               "--method", "recon", "--steps", "2", "--batch-size", "2",
               "--seed", "0"])
    assert rc == 0
    return base


def test_synth_reports_counts(tmp_path, capsys):
    rc = main(["synth", "--out", str(tmp_path / "d"), "--normal", "1",
               "--visual", "1", "--contextual", "1", "--seed", "2",
               "--length", "32"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "1 train and 2 test videos" in out
    assert (tmp_path / "d" / "annotations.json").exists()


def test_train_writes_run_artifacts(cli_root):
    run = cli_root / "run"
    assert (run / "checkpoint_final.npz").exists()
    assert (run / "resolved_config.json").exists()
    assert len((run / "metrics.log").read_text().splitlines()) == 2
    assert len((run / "timings.log").read_text().splitlines()) == 2


def test_train_same_seed_is_reproducible(cli_root, tmp_path):
    data = cli_root / "data"
    rc = main(["train", "--data", str(data), "--out", str(tmp_path / "again"),
               "--method", "recon", "--steps", "2", "--batch-size", "2",
               "--seed", "0"])
    assert rc == 0
    assert (tmp_path / "again" / "metrics.log").read_bytes() == \
           (cli_root / "run" / "metrics.log").read_bytes()


def test_train_config_file_with_flag_overrides(cli_root, tmp_path, capsys):
    data = cli_root / "data"
    cfg_path = tmp_path / "train.json"
    cfg_path.write_text(json.dumps({"method": "recon", "steps": 50,
                                    "batch_size": 2}))
    rc = main(["train", "--data", str(data), "--out", str(tmp_path / "run"),
               "--config", str(cfg_path), "--steps", "1"])
    assert rc == 0
    resolved = json.loads((tmp_path / "run" / "resolved_config.json").read_text())
    assert resolved["steps"] == 1          # flag wins over file
    assert resolved["batch_size"] == 2     # file value survives


def test_score_and_plot_pipeline(cli_root, tmp_path):
    data = cli_root / "data"
    scores = tmp_path / "scores.json"
    rc = main(["score", "--checkpoint", str(cli_root / "run" / "checkpoint_final.npz"),
               "--video", str(data / "test" / "visual_000"), "--out", str(scores)])
    assert rc == 0
    doc = json.loads(scores.read_text())
    assert doc["video_id"] == "visual_000"
    assert len(doc["raw"]) == 32
    assert min(doc["normalized"]) == 0.0 and max(doc["normalized"]) == 1.0

    curve = tmp_path / "curve.png"
    rc = main(["plot", "--scores", str(scores),
               "--annotations", str(data / "annotations.json"),
               "--out", str(curve)])
    assert rc == 0
    assert curve.stat().st_size > 0


def test_eval_writes_report(cli_root, tmp_path, capsys):
    data = cli_root / "data"
    report_path = tmp_path / "report.json"
    rc = main(["eval", "--checkpoint", str(cli_root / "run" / "checkpoint_final.npz"),
               "--data", str(data), "--out", str(report_path)])
    assert rc == 0
    assert "AUC" in capsys.readouterr().out
    report = json.loads(report_path.read_text())
    assert set(report["videos"]) == {"visual_000"}
    assert 0.0 <= report["auc"] <= 1.0


def test_flow_subcommand_writes_sidecars(tmp_path, capsys):
    data = tmp_path / "flowdata"
    main(["synth", "--out", str(data), "--normal", "1", "--visual", "0",
          "--contextual", "0", "--seed", "6", "--length", "4"])
    rc = main(["flow", str(data)])
    assert rc == 0
    assert "3 flow pairs" in capsys.readouterr().out
    assert (data / "flow_config.json").exists()
    vdir = data / "train" / "normal_000"
    assert (vdir / "flow_u_000000.png").exists()
    assert (vdir / "flow_v_000002.png").exists()


def test_short_video_score_exits_2(cli_root, tmp_path, capsys):
    data = tmp_path / "short"
    main(["synth", "--out", str(data), "--normal", "1", "--visual", "1",
          "--contextual", "0", "--seed", "8", "--length", "8"])
    rc = main(["score", "--checkpoint", str(cli_root / "run" / "checkpoint_final.npz"),
               "--video", str(data / "test" / "visual_000"),
               "--out", str(tmp_path / "s.json")])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "visual_000" in err and "8" in err and "16" in err


def test_missing_checkpoint_exits_2(cli_root, tmp_path, capsys):
    rc = main(["score", "--checkpoint", str(tmp_path / "nope.npz"),
               "--video", str(cli_root / "data" / "test" / "visual_000"),
               "--out", str(tmp_path / "s.json")])
    assert rc == 2
    assert "checkpoint not found" in capsys.readouterr().err


def test_bad_config_field_exits_2(cli_root, tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"method": "pca"}))
    rc = main(["train", "--data", str(cli_root / "data"),
               "--out", str(tmp_path / "run"), "--config", str(cfg_path)])
    assert rc == 2
    assert "unknown method" in capsys.readouterr().err


def test_invalid_spec_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "spec.json"
    bad.write_text("{not json")
    rc = main(["synth", "--spec", str(bad), "--out", str(tmp_path / "d")])
    assert rc == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_unknown_spec_field_exits_2(tmp_path, capsys):
    bad = tmp_path / "spec.json"
    bad.write_text(json.dumps({"sprites": 3}))
    rc = main(["synth", "--spec", str(bad), "--out", str(tmp_path / "d")])
    assert rc == 2
    assert "bad synth spec field" in capsys.readouterr().err


def test_missing_annotation_for_plot_exits_2(cli_root, tmp_path, capsys):
    series = {"video_id": "mystery", "raw": [0.0, 1.0], "normalized": [0.0, 1.0]}
    scores = tmp_path / "scores.json"
    scores.write_text(json.dumps(series))
    rc = main(["plot", "--scores", str(scores),
               "--annotations", str(cli_root / "data" / "annotations.json"),
               "--out", str(tmp_path / "c.png")])
    assert rc == 2
    assert "mystery" in capsys.readouterr().err