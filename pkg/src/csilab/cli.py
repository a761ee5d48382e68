"""Command-line front door: gen | train | eval | baseline | gradcheck | report.

Exit codes: 0 ok, 2 usage/config error, 3 numeric failure during training,
4 gradient verification failure. Every command writes a run manifest next to
its artifacts with the fully resolved configuration and seed, so a run can
be reproduced exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import run_baseline
from .config import (
    default_experiment_config,
    experiment_config_to_dict,
    load_experiment_config,
)
from .dataset import build_dataset, load_dataset, save_dataset
from .errors import CsilabError, TrainingError
from .gradcheck import run_suite
from .model import (
    C3DConfig,
    TrainConfig,
    TrainHistory,
    build_model,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .report import ConfusionMatrix, confusion_matrix, overall_accuracy, render_report


def _out_root(path: str) -> Path:
    root = os.environ.get("CSILAB_OUT_ROOT")
    p = Path(path)
    return Path(root) / p if root and not p.is_absolute() else p


def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    tmp.rename(path)


def _write_manifest(out_dir: Path, command: str, config: dict, seed, artifacts, t0) -> None:
    _write_json(
        out_dir / "run_manifest.json",
        {
            "command": command,
            "config": config,
            "seed": seed,
            "artifacts": sorted(str(a) for a in artifacts),
            "tool_version": __version__,
            "duration_seconds": round(time.monotonic() - t0, 3),
        },
    )


def cmd_gen(args) -> int:
    t0 = time.monotonic()
    cfg = load_experiment_config(args.config) if args.config else default_experiment_config()
    out = _out_root(args.out)
    dataset = build_dataset(
        list(cfg.activities),
        cfg.per_class,
        cfg.windowing,
        cfg.channel,
        args.seed,
        clips_per_stream=cfg.clips_per_stream,
    )
    save_dataset(dataset, out)
    print(f"gen: {len(dataset.clips)} clips, {len(dataset.class_names)} classes -> {out}")
    _write_manifest(
        out, "gen", experiment_config_to_dict(cfg), args.seed,
        [out / "tensors.bin", out / "manifest.json"], t0,
    )
    return 0


def _model_config_from_args(args, dataset) -> C3DConfig:
    spatial = args.attention in ("spatial", "both")
    temporal = args.attention in ("temporal", "both")
    return C3DConfig(
        n_classes=len(dataset.class_names),
        fc_units=args.fc_units,
        use_spatial_attention=spatial,
        use_temporal_attention=temporal,
        input_shape=dataset.clips[0].volume.shape,
    )


def cmd_train(args) -> int:
    t0 = time.monotonic()
    dataset = load_dataset(_out_root(args.dataset))
    out = _out_root(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model_cfg = _model_config_from_args(args, dataset)
    dtype = np.float64 if args.precision == "double" else np.float32
    model = build_model(model_cfg, args.seed, dtype=dtype)
    train_cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        seed=args.seed,
        clip_norm=args.clip_norm,
    )
    history = train(model, dataset, train_cfg)
    ckpt = out / "checkpoint"
    save_checkpoint(model, ckpt, epoch=args.epochs)
    _write_json(
        out / "history.json",
        {
            "train_loss": history.train_loss,
            "train_accuracy": history.train_accuracy,
            "test_accuracy": history.test_accuracy,
        },
    )
    if history.test_accuracy:
        print(f"train: final test accuracy {history.test_accuracy[-1]:.4f}")
    _write_manifest(
        out, "train",
        {
            "attention": args.attention,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.lr,
            "momentum": args.momentum,
            "weight_decay": args.weight_decay,
            "clip_norm": args.clip_norm,
            "fc_units": args.fc_units,
            "precision": args.precision,
            "dataset": str(args.dataset),
        },
        args.seed, [ckpt / "params.bin", ckpt / "manifest.json", out / "history.json"], t0,
    )
    return 0


def _emit_result(out: Path, method: str, cm: ConfusionMatrix) -> None:
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "result.json",
        {
            "method": method,
            "class_names": list(cm.class_names),
            "counts": cm.counts.tolist(),
            "accuracy": overall_accuracy(cm),
        },
    )
    render_report(out, {method: cm})


def cmd_eval(args) -> int:
    t0 = time.monotonic()
    dataset = load_dataset(_out_root(args.dataset))
    model = load_checkpoint(_out_root(args.checkpoint))
    truths, preds = evaluate(model, dataset, train_split=(args.split == "train"))
    cm = confusion_matrix(truths, preds, dataset.class_names)
    out = _out_root(args.out)
    _emit_result(out, args.method, cm)
    print(f"eval[{args.method}]: accuracy {overall_accuracy(cm):.4f}")
    _write_manifest(
        out, "eval",
        {"checkpoint": str(args.checkpoint), "dataset": str(args.dataset), "split": args.split},
        None, [out / "result.json"], t0,
    )
    return 0


def cmd_baseline(args) -> int:
    t0 = time.monotonic()
    dataset = load_dataset(_out_root(args.dataset))
    truths, preds = run_baseline(dataset, p=args.pca_dim, k=args.k)
    cm = confusion_matrix(truths, preds, dataset.class_names)
    out = _out_root(args.out)
    _emit_result(out, args.method, cm)
    print(f"baseline[{args.method}]: accuracy {overall_accuracy(cm):.4f}")
    _write_manifest(
        out, "baseline",
        {"dataset": str(args.dataset), "k": args.k, "pca_dim": args.pca_dim},
        None, [out / "result.json"], t0,
    )
    return 0


def cmd_gradcheck(args) -> int:
    results = run_suite(scale=args.scale, corrupt=args.corrupt)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<24} {status}  max_rel_err={r.max_error:.3e}  tol={r.tolerance:.0e}")
    if failed:
        print(f"gradcheck: {len(failed)} failing: " + ", ".join(r.name for r in failed),
              file=sys.stderr)
        return 4
    return 0


def cmd_report(args) -> int:
    t0 = time.monotonic()
    confusions = {}
    for result_path in args.results:
        raw = json.loads(Path(_out_root(result_path)).read_text())
        confusions[raw["method"]] = ConfusionMatrix(
            np.array(raw["counts"], dtype=np.int64), tuple(raw["class_names"])
        )
    histories = {}
    for pair in args.history or []:
        name, _, path = pair.partition("=")
        raw = json.loads(Path(_out_root(path)).read_text())
        histories[name] = TrainHistory(
            train_loss=raw["train_loss"],
            train_accuracy=raw["train_accuracy"],
            test_accuracy=raw["test_accuracy"],
        )
    out = _out_root(args.out)
    written = render_report(out, confusions, histories)
    print(f"report: wrote {len(written)} files to {out}")
    _write_manifest(out, "report", {"results": list(args.results)}, None, written, t0)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csilab",
        description="Synthetic WiFi-CSI activity recognition laboratory",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a labeled synthetic dataset")
    p.add_argument("--config", help="experiment manifest (YAML); defaults built in")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the clip classifier")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=1e-4)
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--fc-units", type=int, default=128)
    p.add_argument("--attention", choices=["off", "spatial", "temporal", "both"], default="off")
    p.add_argument("--precision", choices=["single", "double"], default="single")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", default="c3d", help="method name used in reports")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="run the PCA + k-NN baseline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", default="pca_knn")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--pca-dim", type=int, default=20)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("gradcheck", help="finite-difference adjoint verification")
    p.add_argument("--scale", choices=["tiny", "default"], default="default")
    p.add_argument("--corrupt", help=argparse.SUPPRESS)  # negative-control hook
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("report", help="render a combined comparison report")
    p.add_argument("results", nargs="+", help="result.json files from eval/baseline")
    p.add_argument("--history", action="append", help="NAME=history.json training curves")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (CsilabError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
