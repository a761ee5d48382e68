#!/usr/bin/env python3
"""End-to-end experiment: generate data, train both classifier variants,
run the baseline, and render a combined report.

Artifacts land under --out:
  dataset/        generated clips + streams
  c3d/            plain C3D training run (checkpoint, history)
  c3d_attention/  C3D with spatial + temporal attention
  eval_*/         per-method confusion matrices and metrics
  baseline/       PCA + kNN result
  report/         side-by-side comparison
"""

import argparse
import sys
from pathlib import Path

from csilab.cli import main as csilab


def run(argv):
    rc = csilab(argv)
    if rc != 0:
        print(f"step failed (rc={rc}): csilab {' '.join(argv)}", file=sys.stderr)
        sys.exit(rc)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/experiment", help="artifact directory")
    parser.add_argument("--config", default=None, help="experiment manifest (YAML)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument(
        "--skip-attention", action="store_true", help="train only the plain C3D"
    )
    args = parser.parse_args()

    out = Path(args.out)
    seed = str(args.seed)
    epochs = str(args.epochs)
    dataset = out / "dataset"

    gen = ["gen", "--out", str(dataset), "--seed", seed]
    if args.config:
        gen += ["--config", args.config]
    run(gen)

    run(["baseline", "--dataset", str(dataset), "--out", str(out / "baseline")])

    variants = [("c3d", "off")]
    if not args.skip_attention:
        variants.append(("c3d_attention", "both"))

    results = [str(out / "baseline" / "result.json")]
    histories = []
    for name, attention in variants:
        train_dir = out / name
        run(
            [
                "train",
                "--dataset", str(dataset),
                "--out", str(train_dir),
                "--seed", seed,
                "--epochs", epochs,
                "--attention", attention,
            ]
        )
        run(
            [
                "eval",
                "--checkpoint", str(train_dir / "checkpoint"),
                "--dataset", str(dataset),
                "--out", str(out / f"eval_{name}"),
                "--method", name,
            ]
        )
        results.append(str(out / f"eval_{name}" / "result.json"))
        histories += ["--history", f"{name}={train_dir / 'history.json'}"]

    run(["report", *results, *histories, "--out", str(out / "report")])
    print(f"done; see {out / 'report' / 'summary.txt'}")


if __name__ == "__main__":
    main()
