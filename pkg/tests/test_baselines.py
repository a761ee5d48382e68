import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csilab.baselines import (
    knn_fit,
    knn_predict,
    pca_fit,
    pca_transform,
    run_baseline,
    temporal_mean_features,
)
from csilab.channel import CsiStream
from csilab.dataset import Dataset, NormalizationStats
from csilab.errors import CsilabError, DomainError, ShapeError

from .oracles import knn_majority_oracle


class TestTemporalMean:
    def test_matches_numpy_mean(self, rng):
        samples = rng.uniform(0, 3, size=(5, 40))
        stream = CsiStream(0, samples, 500.0)
        assert np.allclose(temporal_mean_features(stream), samples.mean(axis=1))


class TestPca:
    def test_components_orthonormal_and_variance_sorted(self, rng):
        x = rng.standard_normal((50, 8)) @ np.diag([5, 3, 2, 1, 0.5, 0.2, 0.1, 0.05])
        model = pca_fit(x, p=4)
        gram = model.components.T @ model.components
        assert np.allclose(gram, np.eye(4), atol=1e-10)
        assert np.all(np.diff(model.explained_variance) <= 1e-12)

    def test_recovers_dominant_direction(self, rng):
        direction = np.array([3.0, 4.0]) / 5.0
        x = np.outer(rng.standard_normal(200) * 10, direction)
        x += rng.standard_normal(x.shape) * 0.01
        model = pca_fit(x, p=1)
        alignment = abs(model.components[:, 0] @ direction)
        assert alignment > 0.999

    def test_transform_centers(self, rng):
        x = rng.standard_normal((30, 5)) + 7.0
        model = pca_fit(x, p=2)
        projected = np.array([pca_transform(model, row) for row in x])
        assert np.allclose(projected.mean(axis=0), 0.0, atol=1e-10)

    def test_validation(self, rng):
        with pytest.raises(DomainError):
            pca_fit(rng.standard_normal((1, 4)), p=1)
        with pytest.raises(DomainError):
            pca_fit(rng.standard_normal((10, 4)), p=5)
        model = pca_fit(rng.standard_normal((10, 4)), p=2)
        with pytest.raises(ShapeError):
            pca_transform(model, np.zeros(3))


class TestKnn:
    @given(
        seed=st.integers(0, 2**16),
        n=st.integers(5, 30),
        k=st.integers(1, 5),
    )
    @settings(max_examples=80, deadline=None)
    def test_matches_exhaustive_oracle(self, seed, n, k):
        rng = np.random.default_rng(seed)
        points = rng.standard_normal((n, 3))
        labels = rng.integers(0, 3, size=n)
        model = knn_fit(points, labels, k=min(k, n))
        query = rng.standard_normal(3)
        assert knn_predict(model, query) == knn_majority_oracle(
            points, labels, query, min(k, n)
        )

    def test_tie_breaks_by_mean_distance_then_label(self):
        points = np.array([[1.0], [-1.0], [2.0], [-2.0]])
        labels = np.array([0, 1, 0, 1])
        # query at 0.1: neighbors split 2-2; label 0 is nearer on average
        assert knn_predict(knn_fit(points, labels, k=4), np.array([0.1])) == 0
        # symmetric query: distances tie exactly; lower label id wins
        assert knn_predict(knn_fit(points, labels, k=4), np.array([0.0])) == 0

    def test_validation(self):
        with pytest.raises(CsilabError):
            knn_fit(np.zeros((0, 2)), np.zeros(0), k=1)
        with pytest.raises(DomainError):
            knn_fit(np.zeros((3, 2)), np.zeros(3), k=4)


class TestRunBaseline:
    def test_returns_test_split_predictions(self, tiny_dataset):
        truths, preds = run_baseline(tiny_dataset, p=4, k=3)
        test_idx = tiny_dataset.indices(False)
        assert len(truths) == len(test_idx)
        assert truths == [tiny_dataset.streams[i].label for i in test_idx]
        assert all(0 <= p < len(tiny_dataset.class_names) for p in preds)

    def test_deterministic(self, tiny_dataset):
        assert run_baseline(tiny_dataset, p=4, k=3) == run_baseline(
            tiny_dataset, p=4, k=3
        )

    def test_requires_streams(self, tiny_dataset):
        stripped = Dataset(
            clips=tiny_dataset.clips,
            class_names=tiny_dataset.class_names,
            stats=NormalizationStats(0.0, 1.0),
            train_flags=tiny_dataset.train_flags,
            streams=[],
        )
        with pytest.raises(CsilabError):
            run_baseline(stripped)
