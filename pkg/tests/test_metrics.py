import numpy as np
import pytest

from driftadapt.errors import DataError
from driftadapt.metrics import BalanceRow, auc, mean_ci, smd
from driftadapt.synthgen import oracle_auc

# t quantile at 0.975 with 1 degree of freedom (standard table value).
T_975_DF1 = 12.706204736174698


class TestAuc:
    def test_worked_example(self):
        # 3 of 4 (pos, neg) pairs win: frozen from the pairwise oracle.
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
        assert oracle_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_all_ties_is_half(self):
        assert auc([0.3] * 6, [0, 1, 0, 1, 0, 1]) == 0.5

    def test_perfect_separation(self):
        assert auc([1, 2, 3, 4], [0, 0, 1, 1]) == 1.0
        assert auc([4, 3, 2, 1], [0, 0, 1, 1]) == 0.0

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            auc([0.1, 0.2], [1, 1])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            n = int(rng.integers(2, 201))
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            if trial % 2:
                scores = rng.normal(size=n)
            else:
                scores = rng.integers(0, 5, size=n).astype(float)  # ties
            assert auc(scores, labels) == oracle_auc(scores, labels)

    def test_invariant_under_increasing_transform(self):
        rng = np.random.default_rng(11)
        scores = rng.integers(-50, 50, size=120).astype(float)
        labels = rng.integers(0, 2, size=120)
        labels[:2] = [0, 1]
        base = auc(scores, labels)
        assert auc(3.0 * scores + 11.0, labels) == base
        assert auc(np.sign(scores) * scores**2, labels) == base

    def test_complement_labels(self):
        rng = np.random.default_rng(13)
        scores = rng.normal(size=75)
        labels = rng.integers(0, 2, size=75)
        labels[:2] = [0, 1]
        assert auc(scores, labels) + auc(scores, 1 - labels) == pytest.approx(1.0, abs=1e-12)


class TestSmd:
    def test_identical_samples(self):
        assert smd([1, 2, 3], [1, 2, 3]) == 0.0

    def test_worked_example(self):
        # means 2 and 4, both sample variances 1 -> -2 / 1.
        assert smd([1, 2, 3], [3, 4, 5]) == -2.0

    def test_constant_equal_samples(self):
        assert smd([5, 5], [5, 5]) == 0.0

    def test_zero_variance_unequal_means(self):
        assert smd([5, 5], [6, 6]) == -np.inf
        assert smd([6, 6], [5, 5]) == np.inf

    def test_empty_sample_rejected(self):
        with pytest.raises(DataError):
            smd([], [1.0])

    def test_antisymmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = rng.normal(size=rng.integers(2, 40))
            b = rng.normal(1.0, 2.0, size=rng.integers(2, 40))
            assert smd(a, b) == pytest.approx(-smd(b, a), rel=1e-12)

    def test_translation_and_scale_invariance(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=30)
        b = rng.normal(0.7, 1.3, size=25)
        base = smd(a, b)
        for c, t in [(2.0, 0.0), (1.0, 5.0), (0.25, -3.0), (7.5, 1.5)]:
            assert smd(c * a + t, c * b + t) == pytest.approx(base, rel=1e-9)
            row = BalanceRow("f", smd(c * a + t, c * b + t))
            assert row.balanced == BalanceRow("f", base).balanced

    def test_balanced_flag_threshold(self):
        assert BalanceRow("f", 0.099).balanced
        assert not BalanceRow("f", 0.1).balanced
        assert not BalanceRow("f", -0.2).balanced


class TestMeanCi:
    def test_zero_variance(self):
        mean, half = mean_ci([0.7] * 30)
        assert mean == pytest.approx(0.7)
        assert half == pytest.approx(0.0, abs=1e-12)

    def test_two_values_closed_form(self):
        mean, half = mean_ci([0.0, 1.0])
        assert mean == 0.5
        # sd = sqrt(1/2), sd/sqrt(2) = 1/2.
        assert half == pytest.approx(T_975_DF1 * 0.5, rel=1e-10)

    def test_translation_shifts_mean_only(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=30)
        mean, half = mean_ci(values)
        mean2, half2 = mean_ci(values + 3.25)
        assert mean2 == pytest.approx(mean + 3.25, rel=1e-12)
        assert half2 == pytest.approx(half, rel=1e-12)

    def test_needs_two_values(self):
        with pytest.raises(DataError):
            mean_ci([0.5])
