"""Confusion matrices, per-class metrics, and plain-text report emission.

Convention: rows are true labels, columns are predicted labels. Metrics with
an empty denominator are reported as 0 together with an ``undefined`` flag
instead of NaN, so reports stay machine-diffable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # (K, K) non-negative ints; rows true, cols predicted
    class_names: tuple[str, ...]

    def __post_init__(self):
        k = len(self.class_names)
        if self.counts.shape != (k, k):
            raise DomainError("counts must be K x K with K class names")
        if np.any(self.counts < 0):
            raise DomainError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    false_positive_rate: float
    undefined: tuple[str, ...] = ()


def confusion_matrix(true_labels, predicted_labels, class_names) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise DomainError("label lists must have equal length")
    k = len(class_names)
    counts = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if not (0 <= t < k and 0 <= p < k):
            raise DomainError(f"label pair ({t}, {p}) outside {k} classes")
        counts[t, p] += 1
    return ConfusionMatrix(counts, tuple(class_names))


def class_metrics(cm: ConfusionMatrix, i: int) -> ClassMetrics:
    counts = cm.counts
    tp = int(counts[i, i])
    fn = int(counts[i].sum()) - tp
    fp = int(counts[:, i].sum()) - tp
    tn = cm.total - tp - fn - fp
    undefined = []

    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        if not undefined:
            undefined.append("f1")
    if fp + tn > 0:
        fpr = fp / (fp + tn)
    else:
        fpr = 0.0
        undefined.append("false_positive_rate")
    return ClassMetrics(precision, recall, f1, fpr, tuple(undefined))


def overall_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DomainError("empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def _format_confusion(name: str, cm: ConfusionMatrix) -> str:
    width = max(6, max(len(n) for n in cm.class_names) + 1)
    lines = [f"# confusion matrix: {name} (rows = true, cols = predicted)"]
    header = " " * width + "".join(f"{n:>{width}}" for n in cm.class_names)
    lines.append(header + f"{'recall':>{width}}")
    for i, row_name in enumerate(cm.class_names):
        row = cm.counts[i]
        recall = class_metrics(cm, i).recall
        cells = "".join(f"{int(v):>{width}}" for v in row)
        lines.append(f"{row_name:>{width}}" + cells + f"{recall:>{width}.4f}")
    lines.append(f"overall accuracy: {overall_accuracy(cm):.6f}")
    return "\n".join(lines) + "\n"


def _format_metrics(cm: ConfusionMatrix) -> str:
    lines = ["class\tprecision\trecall\tf1\tfalse_positive_rate\tundefined"]
    for i, name in enumerate(cm.class_names):
        m = class_metrics(cm, i)
        flags = ",".join(m.undefined) if m.undefined else "-"
        lines.append(
            f"{name}\t{m.precision:.6f}\t{m.recall:.6f}\t{m.f1:.6f}"
            f"\t{m.false_positive_rate:.6f}\t{flags}"
        )
    return "\n".join(lines) + "\n"


def _format_curves(history) -> str:
    lines = ["epoch\ttrain_loss\ttrain_accuracy\ttest_accuracy"]
    for e, (loss, tra, tea) in enumerate(
        zip(history.train_loss, history.train_accuracy, history.test_accuracy)
    ):
        lines.append(f"{e}\t{loss:.6f}\t{tra:.6f}\t{tea:.6f}")
    return "\n".join(lines) + "\n"


def render_report(out_dir, confusions: dict, histories: dict | None = None) -> list[Path]:
    """Emit the comparison table, per-method matrices and metrics, and
    training curves. Byte-deterministic for fixed inputs."""
    if not confusions:
        raise DomainError("need at least one result to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    name_w = max(len(n) for n in confusions) + 2
    lines = ["# method comparison", f"{'method':<{name_w}}accuracy(%)"]
    for name in sorted(confusions):
        acc = overall_accuracy(confusions[name]) * 100
        lines.append(f"{name:<{name_w}}{acc:.2f}")
    summary = out_dir / "summary.txt"
    summary.write_text("\n".join(lines) + "\n")
    written.append(summary)

    for name in sorted(confusions):
        cm = confusions[name]
        cpath = out_dir / f"confusion_{name}.txt"
        cpath.write_text(_format_confusion(name, cm))
        written.append(cpath)
        mpath = out_dir / f"metrics_{name}.tsv"
        mpath.write_text(_format_metrics(cm))
        written.append(mpath)

    for name in sorted(histories or {}):
        path = out_dir / f"curves_{name}.tsv"
        path.write_text(_format_curves(histories[name]))
        written.append(path)
    return written
