"""Command-line surface.

Subcommands: synth, flow, train, score, eval, plot.  Config files are
JSON; command-line flags override file values; the resolved config is
echoed into each run's output directory so every run replays from its
artifacts alone.  All failures exit nonzero with a one-line diagnostic.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import SynthSpec, generate_synthetic, load_annotations
from .errors import ConfigError, DataError, VadkitError
from .evaluate import (
    evaluate_run,
    load_score_series,
    make_model_scorer,
    save_report,
    save_score_series,
    score_video,
)
from .flow import precompute_flow
from .trainer import TrainConfig, train


def _load_json(path, what: str) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{what} file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} file {path} must hold a JSON object")
    return doc


def _cmd_synth(args) -> int:
    base = _load_json(args.spec, "synth spec") if args.spec else {}
    for name, value in (("n_normal", args.normal), ("n_visual", args.visual),
                        ("n_contextual", args.contextual), ("seed", args.seed),
                        ("frame_size", args.frame_size),
                        ("video_length", args.length)):
        if value is not None:
            base[name] = value
    try:
        spec = SynthSpec.from_dict(base)
    except TypeError as exc:
        raise ConfigError(f"bad synth spec field: {exc}") from exc
    anns = generate_synthetic(spec, args.out)
    print(f"wrote {spec.n_normal} train and {len(anns)} test videos to {args.out}")
    return 0


def _cmd_flow(args) -> int:
    n = precompute_flow(args.data, backend=args.backend, storage=args.storage,
                        progress=print if args.verbose else None)
    (Path(args.data) / "flow_config.json").write_text(json.dumps(
        {"backend": args.backend, "storage": args.storage}, indent=2) + "\n")
    print(f"wrote {n} flow pairs under {args.data}")
    return 0


def _cmd_train(args) -> int:
    base = _load_json(args.config, "training config") if args.config else {}
    overrides = {
        "method": args.method,
        "preset": args.preset,
        "gcn": args.gcn,
        "flow": args.flow,
        "seed": args.seed,
        "steps": args.steps,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "proposals_per_frame": args.proposals,
        "proposal_provider": args.provider,
    }
    for name, value in overrides.items():
        if value is not None:
            base[name] = value
    try:
        config = TrainConfig.from_dict(base)
    except TypeError as exc:
        raise ConfigError(f"bad training config field: {exc}") from exc
    print(f"resolved config: {json.dumps(config.to_dict(), sort_keys=True)}")

    def progress(step, loss):
        if args.verbose and (step % 10 == 0 or step == 1):
            print(f"step {step}: loss {loss:.6g}")

    result = train(config, args.data, args.out, progress=progress)
    print(f"final checkpoint: {result.checkpoint_path}")
    print(f"metrics log: {result.metrics_path}")
    return 0


def _load_model(args):
    from .checkpoint import load_checkpoint

    model, _, _ = load_checkpoint(args.checkpoint)
    return model


def _cmd_score(args) -> int:
    model = _load_model(args)
    scorer = make_model_scorer(model, dataset_root=args.data,
                               proposal_file=args.proposal_file)
    series = score_video(args.video, scorer, model.cfg.clip_config)
    save_score_series(series, args.out)
    print(f"scored {len(series.raw)} frames of {series.video_id} -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    model = _load_model(args)
    scorer = make_model_scorer(model, dataset_root=args.data,
                               proposal_file=args.proposal_file)
    report = evaluate_run(scorer, args.data, model.cfg.clip_config,
                          aggregation=args.aggregation)
    save_report(report, args.out)
    print(f"AUC {report['auc']:.3f} ({report['aggregation']}) -> {args.out}")
    return 0


def _cmd_plot(args) -> int:
    from .viz import plot_score_curve

    series = load_score_series(args.scores)
    annotation = None
    if args.annotations:
        matches = [a for a in load_annotations(args.annotations)
                   if a.video_id == series.video_id]
        if not matches:
            raise DataError(
                f"no annotation for video {series.video_id!r} in {args.annotations}"
            )
        annotation = matches[0]
    out = plot_score_curve(series, annotation, args.out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vadkit",
        description="video anomaly detection: synthetic data, flow, training, scoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sprite dataset")
    p.add_argument("--spec", help="SynthSpec JSON file")
    p.add_argument("--out", required=True, help="dataset root to create")
    p.add_argument("--normal", type=int, help="number of normal (train) videos")
    p.add_argument("--visual", type=int, help="number of novel-shape test videos")
    p.add_argument("--contextual", type=int, help="number of collision test videos")
    p.add_argument("--seed", type=int)
    p.add_argument("--frame-size", type=int, dest="frame_size")
    p.add_argument("--length", type=int, help="frames per video")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("flow", help="precompute optical flow sidecars")
    p.add_argument("data", help="dataset root")
    p.add_argument("--backend", default="reference", choices=["reference", "external"])
    p.add_argument("--storage", default="lossless", choices=["lossless", "jpeg"])
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--config", help="TrainConfig JSON file")
    p.add_argument("--method", choices=["ocsvdd", "recon"])
    p.add_argument("--preset", help="backbone preset name")
    gg = p.add_mutually_exclusive_group()
    gg.add_argument("--gcn", dest="gcn", action="store_const", const=True,
                    help="enable the object-interaction branch")
    gg.add_argument("--no-gcn", dest="gcn", action="store_const", const=False)
    ff = p.add_mutually_exclusive_group()
    ff.add_argument("--flow", dest="flow", action="store_const", const=True,
                    help="append optical-flow input channels")
    ff.add_argument("--no-flow", dest="flow", action="store_const", const=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--proposals", type=int, help="proposals per feature frame")
    p.add_argument("--provider", choices=["grid", "oracle", "external"])
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_train, gcn=None, flow=None)

    p = sub.add_parser("score", help="score one video with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--video", required=True, help="frame directory")
    p.add_argument("--out", required=True, help="score series JSON to write")
    p.add_argument("--data", help="dataset root (oracle proposals only)")
    p.add_argument("--proposal-file", dest="proposal_file")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="report JSON to write")
    p.add_argument("--aggregation", default="concat",
                   choices=["concat", "per_video_mean"])
    p.add_argument("--proposal-file", dest="proposal_file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("plot", help="plot a score curve with shaded anomalies")
    p.add_argument("--scores", required=True, help="score series JSON")
    p.add_argument("--annotations", help="annotation file for shading")
    p.add_argument("--out", required=True, help="image file to write")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VadkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
