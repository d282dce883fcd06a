"""Iris ingestion, trainer determinism/accuracy, safety spec construction."""

import pathlib

import numpy as np
import pytest

from relucert.data import DatasetFormatError, ingest_iris
from relucert.network import forward
from relucert.regions import InputRegion
from relucert.relaxation import exact_value
from relucert.training import TrainConfig, make_safety_specs, train_one_layer

IRIS_CSV = pathlib.Path(__file__).resolve().parent.parent / "data" / "iris.csv"


@pytest.fixture(scope="module")
def iris():
    return ingest_iris(IRIS_CSV, seed=42)


@pytest.fixture(scope="module")
def trained(iris):
    return train_one_layer(iris, TrainConfig(seed=42))


class TestIngest:
    def test_canonical_shape(self, iris):
        assert iris.features.shape == (150, 4)
        assert iris.num_classes == 3
        assert set(iris.labels) == {0, 1, 2}

    def test_wrong_column_count(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1.0,2.0,x\n")
        with pytest.raises(DatasetFormatError):
            ingest_iris(bad)

    def test_malformed_row(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("f1,f2,f3,f4,label\n1.0,2.0,3.0,4.0,a\n1.0,oops,3.0,4.0,b\n")
        with pytest.raises(DatasetFormatError):
            ingest_iris(bad)

    def test_train_split_standardized(self, iris):
        Xtr, _ = iris.split("train")
        assert np.max(np.abs(Xtr.mean(axis=0))) <= 1e-10
        np.testing.assert_allclose(Xtr.std(axis=0), 1.0, atol=1e-10)

    def test_split_disjoint_and_covering(self, iris):
        joined = np.sort(np.concatenate([iris.train_idx, iris.test_idx]))
        np.testing.assert_array_equal(joined, np.arange(150))

    def test_split_stratified(self, iris):
        _, yte = iris.split("test")
        counts = np.bincount(yte)
        np.testing.assert_array_equal(counts, [10, 10, 10])


class TestTrainer:
    def test_reaches_accuracy_target(self, trained):
        assert trained.test_accuracy >= 0.90
        assert trained.reached_target

    def test_deterministic_given_seed(self, iris, trained):
        again = train_one_layer(iris, TrainConfig(seed=42))
        for (W1, b1), (W2, b2) in zip(trained.network.layers, again.network.layers):
            assert np.array_equal(W1, W2)
            assert np.array_equal(b1, b2)

    def test_zero_epochs_near_chance(self, iris):
        untrained = train_one_layer(iris, TrainConfig(epochs=0))
        assert untrained.test_accuracy <= 0.6
        assert not untrained.reached_target

    def test_hidden_layer_variant(self, iris):
        result = train_one_layer(iris, TrainConfig(seed=42, hidden=5))
        assert result.network.num_layers == 2
        assert result.network.layers[0][0].shape == (5, 4)
        assert result.test_accuracy >= 0.90


class TestTwoLayerCertification:
    def test_hidden_layer_run_is_sound_and_orderable(self, iris):
        """The two-layer variant certifies with row splits on the final layer."""
        from relucert.regions import box_from_center
        from relucert.relaxation import certify_lp, exact_value
        from relucert.partition import PartitionPlan, certify_partitioned

        result = train_one_layer(iris, TrainConfig(seed=42, hidden=5))
        net = result.network
        X, y = iris.split("test")
        checked = 0
        for i in (0, 10, 20):
            if np.argmax(forward(net, X[i]).output) != y[i]:
                continue
            region = box_from_center(X[i], 0.15)
            for c in make_safety_specs(net, X[i], int(y[i])):
                exact = exact_value(net, region, c).bound
                plain = certify_lp(net, region, c).bound
                split = certify_partitioned(net, region, c, PartitionPlan.row()).overall_bound
                assert exact <= split + 1e-7
                assert split <= plain + 1e-7
                checked += 1
        assert checked >= 2


class TestSafetySpecs:
    def test_three_class_objectives(self, trained):
        x = np.zeros(4)
        specs = make_safety_specs(trained.network, x, 0)
        assert len(specs) == 2
        np.testing.assert_array_equal(specs[0], [-1, 1, 0])
        np.testing.assert_array_equal(specs[1], [-1, 0, 1])

    def test_invalid_label(self, trained):
        with pytest.raises(ValueError):
            make_safety_specs(trained.network, np.zeros(4), 7)

    def test_singleton_region_strict_margins(self, iris, trained):
        net = trained.network
        X, y = iris.split("test")
        x = X[0]
        assert np.argmax(forward(net, x).output) == y[0]
        region = InputRegion(x, x)
        for c in make_safety_specs(net, x, int(y[0])):
            assert exact_value(net, region, c).bound < 0

    def test_misclassified_nominal_positive_bound(self, iris, trained):
        net = trained.network
        X, _ = iris.split("test")
        x = X[0]
        wrong = (np.argmax(forward(net, x).output) + 1) % 3
        region = InputRegion(x, x)
        bounds = [exact_value(net, region, c).bound for c in make_safety_specs(net, x, int(wrong))]
        assert max(bounds) > 0
