import numpy as np
import pytest

from driftadapt.adversarial import (
    detect_drift,
    propensity_oof,
    stack_adversarial,
)
from driftadapt.data_model import IMPUTE_ZERO, KEEP_MISSING, align_codebooks, encode
from driftadapt.errors import DataError, FitError
from driftadapt.metrics import auc
from driftadapt.synthgen import generate, no_drift_spec, single_shift_spec
from driftadapt.trees import DTParams, GBDTParams, fit_gbdt, predict_proba

from conftest import make_matrix


def _sides(spec, policy=KEEP_MISSING):
    s = generate(spec)
    train = encode(s.train, policy)
    test = align_codebooks(train, s.test, policy)
    return train, test


class TestStack:
    def test_row_counts_and_labels(self):
        train = make_matrix(np.zeros((3, 2)))
        test = make_matrix(np.ones((2, 2)))
        stacked, z = stack_adversarial(train, test)
        assert stacked.n_rows == 5
        assert z.sum() == 2
        assert z[:3].tolist() == [0, 0, 0]

    def test_outcome_label_not_a_feature(self):
        # the label column leaves the dataset before encoding, so it can
        # never appear among the stacked features
        from conftest import make_dataset
        from driftadapt.data_model import extract_label

        ds = make_dataset(x=[1.0, 2.0], y=[0.0, 1.0])
        ds = extract_label(ds, "y")
        train = encode(ds, IMPUTE_ZERO)
        stacked, _ = stack_adversarial(train, train)
        assert "y" not in stacked.feature_names

    def test_deterministic(self):
        train = make_matrix(np.random.default_rng(0).normal(size=(4, 2)))
        test = make_matrix(np.random.default_rng(1).normal(size=(3, 2)))
        a, _ = stack_adversarial(train, test)
        b, _ = stack_adversarial(train, test)
        assert np.array_equal(a.values, b.values)

    def test_feature_mismatch(self):
        train = make_matrix(np.zeros((2, 2)), feature_names=["a", "b"])
        test = make_matrix(np.zeros((2, 2)), feature_names=["a", "c"])
        with pytest.raises(DataError):
            stack_adversarial(train, test)

    def test_empty_side(self):
        train = make_matrix(np.zeros((2, 1)))
        test = make_matrix(np.empty((0, 1)))
        with pytest.raises(DataError):
            stack_adversarial(train, test)


class TestPropensityOof:
    def test_no_drift_calibration_and_mean_score(self):
        # unequal sides: the mean out-of-fold score approximates the
        # test share n_test / (n_train + n_test) = 0.75
        spec = no_drift_spec("cal", 1000, 3000, d=4, seed=21)
        train, test = _sides(spec)
        ps = propensity_oof(train, test, seed=5)
        assert 0.45 <= ps.cv_auc <= 0.55
        all_scores = np.concatenate([ps.train_scores, ps.test_scores])
        assert abs(all_scores.mean() - 0.75) < 0.05
        assert ps.folds == 5
        assert (ps.train_scores >= 0).all() and (ps.train_scores <= 1).all()

    def test_strong_shift_detected(self):
        spec = single_shift_spec("shift", 800, 800, d=3, shift=5.0, seed=22)
        train, test = _sides(spec)
        ps = propensity_oof(train, test, seed=6)
        assert ps.cv_auc >= 0.95

    def test_k_exceeding_rows_rejected(self):
        train = make_matrix(np.random.default_rng(2).normal(size=(3, 1)))
        test = make_matrix(np.random.default_rng(3).normal(size=(100, 1)))
        with pytest.raises(FitError):
            propensity_oof(train, test, k=5)

    def test_k_must_be_at_least_two(self):
        train = make_matrix(np.zeros((10, 1)))
        with pytest.raises(FitError):
            propensity_oof(train, train, k=1)

    def test_label_flip_reverses_ranking_exactly(self):
        # the booster is symmetric in the two classes: same splits, sign-
        # flipped leaves, so propensities complement and the AUC mirrors
        spec = single_shift_spec("sym", 300, 300, d=3, shift=1.0, seed=23)
        train, test = _sides(spec)
        stacked, z = stack_adversarial(train, test)
        a = fit_gbdt(stacked, z, params=GBDTParams(seed=9))
        b = fit_gbdt(stacked, 1 - z, params=GBDTParams(seed=9))
        pa = predict_proba(a, stacked)
        pb = predict_proba(b, stacked)
        assert np.allclose(pa + pb, 1.0, atol=1e-9)
        assert auc(pa, z) + auc(pb, z) == pytest.approx(1.0, abs=1e-9)

    def test_role_swap_flips_cv_auc(self):
        spec = single_shift_spec("swap", 400, 400, d=3, shift=2.0, seed=24)
        train, test = _sides(spec)
        forward = propensity_oof(train, test, seed=7)
        backward = propensity_oof(test, train, seed=7)
        # same separability measured from the other side
        assert abs(forward.cv_auc - backward.cv_auc) < 0.05


class TestDetect:
    def test_train_equals_test_is_not_drift(self):
        rng = np.random.default_rng(25)
        X = make_matrix(rng.normal(size=(400, 3)))
        verdict = detect_drift(X, X, seed=8)
        assert abs(verdict.auc - 0.5) <= 0.1
        assert not verdict.drifted

    def test_shift_is_drift_with_ranked_features(self):
        spec = single_shift_spec("det", 600, 600, d=4, shift=3.0, seed=26)
        train, test = _sides(spec)
        verdict = detect_drift(train, test, seed=9)
        assert verdict.drifted
        assert verdict.auc > 0.9
        assert verdict.top_features[0][0] == "f0"
        shares = [s for _, s in verdict.top_features]
        assert shares == sorted(shares, reverse=True)
        assert sum(shares) == pytest.approx(1.0)

    def test_duplicated_constant_feature_changes_nothing_for_dt(self):
        spec = single_shift_spec("dup", 300, 300, d=3, shift=1.5, seed=27)
        train, test = _sides(spec, policy=IMPUTE_ZERO)

        def with_const(m):
            values = np.hstack([m.values, np.full((m.n_rows, 1), 7.0)])
            mask = np.hstack([m.missing_mask, np.zeros((m.n_rows, 1), bool)])
            out = make_matrix(values, feature_names=m.feature_names + ["const"],
                              mask=mask, policy=m.policy)
            return out

        base = detect_drift(train, test, DTParams(), seed=10)
        dup = detect_drift(with_const(train), with_const(test), DTParams(), seed=10)
        assert dup.auc == base.auc
        assert dup.drifted == base.drifted
        assert dict(dup.top_features)["const"] == 0.0

    def test_duplicated_constant_feature_verdict_stable_for_gbdt(self):
        spec = single_shift_spec("dupg", 400, 400, d=3, shift=2.0, seed=28)
        train, test = _sides(spec)
        values = np.hstack([train.values, np.zeros((train.n_rows, 1))])
        mask = np.hstack([train.missing_mask, np.zeros((train.n_rows, 1), bool)])
        train2 = make_matrix(values, feature_names=train.feature_names + ["const"],
                             mask=mask)
        values = np.hstack([test.values, np.zeros((test.n_rows, 1))])
        mask = np.hstack([test.missing_mask, np.zeros((test.n_rows, 1), bool)])
        test2 = make_matrix(values, feature_names=test.feature_names + ["const"],
                            mask=mask)
        base = detect_drift(train, test, seed=11)
        dup = detect_drift(train2, test2, seed=11)
        assert abs(dup.auc - base.auc) < 0.03
        assert dup.drifted == base.drifted

    def test_theta_controls_verdict(self):
        spec = single_shift_spec("th", 300, 300, d=3, shift=2.0, seed=29)
        train, test = _sides(spec)
        low = detect_drift(train, test, theta_auc=0.5, seed=12)
        high = detect_drift(train, test, theta_auc=0.999, seed=12)
        assert low.drifted and not high.drifted
        assert low.auc == high.auc
