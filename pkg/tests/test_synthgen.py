import numpy as np
import pytest

from driftadapt.data_model import ColumnKind, write_csv
from driftadapt.errors import ConfigError
from driftadapt.metrics import auc
from driftadapt.synthgen import (
    Distribution,
    DriftSpec,
    FeatureSpec,
    categorical,
    generate,
    no_drift_spec,
    normal,
    oracle_auc,
    oracle_best_split,
    single_shift_spec,
    uniform,
)


class TestSpec:
    def test_ground_truth_is_declared_drift(self):
        spec = single_shift_spec("g", 100, 100, d=4, shift=2.0, seed=1)
        assert spec.drifted == {"f0"}
        assert generate(spec).ground_truth == {"f0"}

    def test_no_drift_spec_has_empty_truth(self):
        spec = no_drift_spec("g", 50, 50, d=3, seed=2)
        assert spec.drifted == frozenset()

    def test_distribution_validation(self):
        with pytest.raises(ConfigError):
            normal(0.0, 0.0)
        with pytest.raises(ConfigError):
            uniform(2.0, 1.0)
        with pytest.raises(ConfigError):
            categorical(0.5, 0.6)
        with pytest.raises(ConfigError):
            Distribution("poisson", (1.0,))

    def test_label_rule_must_reference_known_features(self):
        with pytest.raises(ConfigError):
            DriftSpec(name="bad", n_train=10, n_test=10,
                      features=(FeatureSpec("a", normal(0, 1)),),
                      label_coefficients={"ghost": 1.0})

    def test_serialization_roundtrip(self):
        spec = DriftSpec(
            name="rt", n_train=20, n_test=30,
            features=(
                FeatureSpec("x", normal(0, 1), normal(2, 1)),
                FeatureSpec("c", categorical(0.3, 0.7)),
            ),
            label_coefficients={"x": 1.5},
            label_intercept=-0.2,
            seed=9,
        )
        assert DriftSpec.from_dict(spec.to_dict()) == spec


class TestGenerate:
    def test_deterministic_bytes(self, tmp_path):
        spec = DriftSpec(
            name="det", n_train=40, n_test=25,
            features=(
                FeatureSpec("x", normal(0, 1), normal(1, 2)),
                FeatureSpec("c", categorical(0.2, 0.5, 0.3)),
            ),
            label_coefficients={"x": 1.0},
            seed=123,
        )
        a, b = generate(spec), generate(spec)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(a.train, pa, label_column="label")
        write_csv(b.train, pb, label_column="label")
        assert pa.read_bytes() == pb.read_bytes()
        assert np.array_equal(a.test_labels, b.test_labels)

    def test_test_labels_withheld_from_dataset(self):
        s = generate(single_shift_spec("w", 30, 30, d=2, shift=1.0, seed=3))
        assert s.test.label is None
        assert len(s.test_labels) == 30
        assert s.train.label is not None

    def test_marginal_means_match_spec(self):
        n = 4000
        spec = DriftSpec(
            name="m", n_train=n, n_test=n,
            features=(
                FeatureSpec("a", normal(2.0, 1.0), normal(-1.0, 0.5)),
                FeatureSpec("b", uniform(0.0, 4.0)),
            ),
            seed=4,
        )
        s = generate(spec)
        # 4 sigma / sqrt(n) band per side
        assert abs(s.train.data["a"].mean() - 2.0) < 4.0 / np.sqrt(n)
        assert abs(s.test.data["a"].mean() + 1.0) < 4.0 * 0.5 / np.sqrt(n)
        u_sd = 4.0 / np.sqrt(12.0)
        assert abs(s.train.data["b"].mean() - 2.0) < 4.0 * u_sd / np.sqrt(n)

    def test_categorical_frequencies_and_kind(self):
        spec = DriftSpec(
            name="c", n_train=3000, n_test=10,
            features=(FeatureSpec("c", categorical(0.1, 0.9)),),
            seed=5,
        )
        s = generate(spec)
        assert s.train.kind_of("c") == ColumnKind.CATEGORICAL
        freq_c1 = np.mean([v == "c1" for v in s.train.data["c"]])
        assert abs(freq_c1 - 0.9) < 0.03

    def test_label_rule_is_informative(self):
        spec = DriftSpec(
            name="l", n_train=2000, n_test=10,
            features=(FeatureSpec("x", normal(0, 1)),),
            label_coefficients={"x": 2.0},
            seed=6,
        )
        s = generate(spec)
        assert auc(s.train.data["x"], s.train.label) > 0.7


class TestOracles:
    def test_oracle_auc_worked_example(self):
        assert oracle_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_oracle_auc_with_ties(self):
        assert oracle_auc([1.0, 1.0], [0, 1]) == 0.5

    def test_oracle_best_split_separable(self):
        values = np.array([[0.0], [1.0], [10.0], [11.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        f, thr, missing_left, dec = oracle_best_split(values, y)
        assert f == 0
        assert thr == 5.5
        assert dec == pytest.approx(0.5)  # gini 0.5 -> 0 on both sides

    def test_oracle_best_split_no_candidates(self):
        values = np.zeros((4, 1))
        y = np.array([0.0, 1.0, 0.0, 1.0])
        assert oracle_best_split(values, y) is None
