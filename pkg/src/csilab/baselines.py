"""Classical baseline: temporal-mean features -> PCA -> k-nearest neighbors.

The baseline consumes whole streams, not clips: each stream reduces to its
per-channel temporal mean, features are standardized, projected onto the top
principal components, and classified by majority vote among the k nearest
training points (Euclidean).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import CsiStream
from .dataset import Dataset
from .errors import CsilabError, DomainError, ShapeError


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (D,)
    components: np.ndarray  # (D, p), orthonormal columns
    explained_variance: np.ndarray  # (p,), non-increasing


@dataclass(frozen=True)
class KnnModel:
    k: int
    points: np.ndarray  # (n, p)
    labels: np.ndarray  # (n,)


def temporal_mean_features(stream: CsiStream) -> np.ndarray:
    """Per-channel arithmetic mean over time."""
    if stream.samples.shape[1] < 1:
        raise DomainError("stream has no samples")
    return np.asarray(stream.samples, dtype=np.float64).mean(axis=1)


def pca_fit(features, p: int) -> PcaModel:
    """Top-p principal directions of the sample covariance."""
    x = np.asarray(features, dtype=np.float64)
    n, d = x.shape
    if n < 2:
        raise DomainError("PCA needs at least two samples")
    if not 1 <= p <= min(d, n - 1):
        raise DomainError(f"p={p} outside [1, min(D, n-1)={min(d, n - 1)}]")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:p]
    return PcaModel(
        mean=mean,
        components=np.ascontiguousarray(eigvecs[:, order]),
        explained_variance=eigvals[order],
    )


def pca_transform(model: PcaModel, feature: np.ndarray) -> np.ndarray:
    if feature.shape != model.mean.shape:
        raise ShapeError(
            f"feature dim {feature.shape} != model dim {model.mean.shape}"
        )
    return model.components.T @ (feature - model.mean)


def knn_fit(points, labels, k: int) -> KnnModel:
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    if len(points) == 0:
        raise CsilabError("kNN model needs reference points")
    if not 1 <= k <= len(points):
        raise DomainError(f"k={k} outside [1, {len(points)}]")
    return KnnModel(k=k, points=points, labels=labels)


def knn_predict(model: KnnModel, query: np.ndarray) -> int:
    """Majority vote of the k nearest neighbors.

    Ties break by smaller mean distance among the tied labels, then by the
    lower label id.
    """
    dists = np.linalg.norm(model.points - query, axis=1)
    nearest = np.argsort(dists, kind="stable")[: model.k]
    votes: dict[int, list[float]] = {}
    for i in nearest:
        votes.setdefault(int(model.labels[i]), []).append(float(dists[i]))
    best = min(votes.items(), key=lambda kv: (-len(kv[1]), float(np.mean(kv[1])), kv[0]))
    return best[0]


@dataclass(frozen=True)
class StandardizeStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, x):
        return (x - self.mean) / self.std


def run_baseline(dataset: Dataset, p: int = 20, k: int = 5):
    """Fit mean->PCA->kNN on the train streams, classify the test streams.

    Returns (true_labels, predicted_labels) over the test split.
    """
    if not dataset.streams:
        raise CsilabError("dataset carries no streams; regenerate with streams")
    train_idx = dataset.indices(True)
    test_idx = dataset.indices(False)
    feats = np.array([temporal_mean_features(dataset.streams[i]) for i in range(len(dataset.streams))])
    train_feats = feats[train_idx]
    std = train_feats.std(axis=0)
    stats = StandardizeStats(train_feats.mean(axis=0), np.maximum(std, 1e-8))
    p = min(p, min(train_feats.shape[1], len(train_idx) - 1))
    pca = pca_fit(stats.apply(train_feats), p)
    train_proj = np.array([pca_transform(pca, f) for f in stats.apply(train_feats)])
    knn = knn_fit(train_proj, [dataset.streams[i].label for i in train_idx], k=min(k, len(train_idx)))
    truths, preds = [], []
    for i in test_idx:
        q = pca_transform(pca, stats.apply(feats[i]))
        truths.append(dataset.streams[i].label)
        preds.append(knn_predict(knn, q))
    return truths, preds
