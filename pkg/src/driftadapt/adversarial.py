"""The train-vs-test learning problem: row stacking, out-of-fold
propensity scores, and the drift verdict.

The propensity score of a row is the estimated probability that it
belongs to the test side given its features. Training rows are always
scored out-of-fold (by a model that never saw them); drift verdicts use
a held-out slice so an overfit classifier cannot declare drift on its
own training rows.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data_model import EncodedMatrix
from .errors import DataError, FitError
from .metrics import auc
from .seeding import spawn_seeds
from .trees import (
    DTParams,
    GBDTParams,
    RFParams,
    TreeEnsembleModel,
    fit_decision_tree,
    fit_gbdt,
    fit_random_forest,
    predict_proba,
    ranked_features,
)

DEFAULT_THETA_AUC = 0.6
VERDICT_HOLDOUT_FRACTION = 0.25

LearnerParams = DTParams | RFParams | GBDTParams


def default_learner() -> GBDTParams:
    """The boosted-tree configuration used for adversarial classifiers
    unless the caller picks dt/rf."""
    return GBDTParams()


@dataclass
class PropensityScores:
    """P(test | X) per row: out-of-fold for training rows, in-fold for
    test rows, plus the pooled out-of-fold AUC."""

    train_scores: np.ndarray
    test_scores: np.ndarray
    cv_auc: float
    folds: int


@dataclass
class DriftVerdict:
    auc: float
    theta_auc: float
    top_features: list[tuple[str, float]]

    @property
    def drifted(self) -> bool:
        return self.auc > self.theta_auc


def fit_learner(X: EncodedMatrix, y, params: LearnerParams, seed: int,
                w=None, val=None) -> TreeEnsembleModel:
    """Dispatch on the parameter type, overriding any seed it carries
    with the derived one."""
    if isinstance(params, GBDTParams):
        return fit_gbdt(X, y, w=w, params=replace(params, seed=seed), val=val)
    if isinstance(params, RFParams):
        return fit_random_forest(X, y, w=w, params=replace(params, seed=seed))
    if isinstance(params, DTParams):
        return fit_decision_tree(X, y, w=w, params=params)
    raise DataError(f"unknown learner params: {type(params).__name__}")


def stack_adversarial(train: EncodedMatrix,
                      test: EncodedMatrix) -> tuple[EncodedMatrix, np.ndarray]:
    """Row-stack the two sides; the membership label z is 0 for training
    rows and 1 for test rows. Outcome labels never enter the features
    (they live outside the matrices)."""
    if list(train.feature_names) != list(test.feature_names):
        raise DataError(
            "train/test feature sets differ: "
            f"{train.feature_names} vs {test.feature_names}"
        )
    if train.n_rows == 0 or test.n_rows == 0:
        raise DataError("both sides must be nonempty")
    stacked = EncodedMatrix(
        values=np.vstack([train.values, test.values]),
        missing_mask=np.vstack([train.missing_mask, test.missing_mask]),
        feature_names=list(train.feature_names),
        codebooks={k: dict(v) for k, v in test.codebooks.items()},
        policy=train.policy,
        dropped_columns=list(train.dropped_columns),
    )
    z = np.concatenate([
        np.zeros(train.n_rows, dtype=np.int8),
        np.ones(test.n_rows, dtype=np.int8),
    ])
    return stacked, z


def _stratified_folds(z: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per row; each fold keeps the class ratio of z."""
    folds = np.empty(len(z), dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(z == cls)
        if len(idx) < k:
            raise FitError(
                f"class {cls} has {len(idx)} rows, cannot stratify into {k} folds"
            )
        idx = rng.permutation(idx)
        folds[idx] = np.arange(len(idx)) % k
    return folds


def propensity_oof(train: EncodedMatrix, test: EncodedMatrix,
                   learner: LearnerParams | None = None, k: int = 5,
                   seed: int = 0) -> PropensityScores:
    """Stratified k-fold cross-fitting over the stacked rows; each fold's
    held-out rows are scored by a model fit on the remaining folds."""
    if k < 2:
        raise FitError("k must be >= 2")
    learner = learner or default_learner()
    stacked, z = stack_adversarial(train, test)
    if k > min(train.n_rows, test.n_rows):
        raise FitError(
            f"k={k} exceeds the smaller side ({min(train.n_rows, test.n_rows)} rows)"
        )
    seeds = spawn_seeds(seed, k + 1)
    rng = np.random.default_rng(seeds[0])
    folds = _stratified_folds(z, k, rng)

    oof = np.empty(len(z), dtype=np.float64)
    for fold in range(k):
        held = folds == fold
        model = fit_learner(stacked.select_rows(~held), z[~held], learner,
                            seed=seeds[fold + 1])
        oof[held] = predict_proba(model, stacked.select_rows(held))
    cv = auc(oof, z)
    return PropensityScores(
        train_scores=oof[: train.n_rows].copy(),
        test_scores=oof[train.n_rows:].copy(),
        cv_auc=float(cv),
        folds=k,
    )


def detect_drift(train: EncodedMatrix, test: EncodedMatrix,
                 learner: LearnerParams | None = None,
                 theta_auc: float = DEFAULT_THETA_AUC,
                 seed: int = 0) -> DriftVerdict:
    """Drift verdict: the adversarial classifier's AUC on a held-out 25%
    of the stacked rows, with gain shares taken from a fit on all rows."""
    learner = learner or default_learner()
    stacked, z = stack_adversarial(train, test)
    seeds = spawn_seeds(seed, 3)
    rng = np.random.default_rng(seeds[0])

    held = np.zeros(len(z), dtype=bool)
    for cls in (0, 1):
        idx = np.flatnonzero(z == cls)
        idx = rng.permutation(idx)
        n_hold = max(1, int(round(VERDICT_HOLDOUT_FRACTION * len(idx))))
        if n_hold >= len(idx):
            raise FitError("too few rows to hold out a verdict slice")
        held[idx[:n_hold]] = True

    model = fit_learner(stacked.select_rows(~held), z[~held], learner,
                        seed=seeds[1])
    holdout_auc = auc(predict_proba(model, stacked.select_rows(held)), z[held])

    full = fit_learner(stacked, z, learner, seed=seeds[2])
    return DriftVerdict(
        auc=float(holdout_auc),
        theta_auc=float(theta_auc),
        top_features=ranked_features(full),
    )
