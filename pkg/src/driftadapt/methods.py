"""Drift adaptations: automated adversarial feature selection, matched
validation selection, and inverse propensity weighting, plus outcome-
model training wired to each."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .adversarial import (
    DEFAULT_THETA_AUC,
    LearnerParams,
    detect_drift,
    default_learner,
)
from .data_model import EncodedMatrix
from .errors import ConfigError, FitError
from .metrics import BalanceRow, smd
from .seeding import spawn_seeds
from .trees import GBDTParams, TreeEnsembleModel, fit_gbdt

PROPENSITY_ROW = "__propensity__"
LOGIT_EPS = 1e-6


@dataclass(frozen=True)
class FeatureSelectionConfig:
    theta_auc: float = DEFAULT_THETA_AUC
    x_pct: float = 0.10          # top fraction of remaining features per pass
    theta_imp: float = 0.1       # gain-share floor for removal
    max_iter: int | None = None  # None: one pass per feature
    min_features: int = 2

    def __post_init__(self):
        if not 0.0 < self.x_pct <= 1.0:
            raise ConfigError("x_pct must lie in (0, 1]")
        if self.theta_imp < 0:
            raise ConfigError("theta_imp must be >= 0")
        if self.min_features < 1:
            raise ConfigError("min_features must be >= 1")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1 when set")


@dataclass
class SelectionIteration:
    auc: float
    removed: list[tuple[str, float]]  # (feature, gain share at removal)


@dataclass
class SelectionTrace:
    iterations: list[SelectionIteration]
    final_features: list[str]
    final_auc: float
    unresolved: bool = False

    @property
    def removed_features(self) -> list[str]:
        return [name for it in self.iterations for name, _ in it.removed]


@dataclass
class MatchResult:
    pairs: list[tuple[int, int]]  # (train row, test row)
    caliper: float
    balance: list[BalanceRow]
    val_indices: np.ndarray
    remaining_train_indices: np.ndarray
    fallback_used: bool
    degenerate_propensity: bool = False

    @property
    def propensity_smd(self) -> float:
        for row in self.balance:
            if row.feature == PROPENSITY_ROW:
                return row.smd
        return float("nan")


@dataclass
class WeightVector:
    weights: np.ndarray
    p_max: float
    effective_sample_size: float
    low_overlap: bool = False


@dataclass
class OutcomeModel:
    """GBDT over the original outcome, tagged with how training was
    adapted to the drift findings."""

    model: TreeEnsembleModel
    adaptation: str  # baseline | feature_selection | validation_selection | ipw
    metadata: dict = field(default_factory=dict)


def auto_feature_selection(train: EncodedMatrix, test: EncodedMatrix,
                           learner: LearnerParams | None = None,
                           cfg: FeatureSelectionConfig | None = None,
                           seed: int = 0) -> SelectionTrace:
    """Iteratively drop the features that let a classifier separate train
    from test.

    Each pass fits an adversarial classifier; while its held-out AUC
    exceeds ``theta_auc``, the features ranked within the top
    ceil(x_pct * d_remaining) by gain share AND above ``theta_imp`` are
    removed (falling back to the single top-share feature so every pass
    makes progress). Stops at AUC <= theta_auc, at ``max_iter`` passes,
    or when ``min_features`` would be breached; in the latter two cases
    the trace is flagged unresolved rather than raising.
    """
    learner = learner or default_learner()
    cfg = cfg or FeatureSelectionConfig()
    remaining = list(train.feature_names)
    if len(remaining) < cfg.min_features:
        raise ConfigError(
            f"{len(remaining)} features is fewer than min_features={cfg.min_features}"
        )
    max_iter = cfg.max_iter if cfg.max_iter is not None else len(remaining)
    seeds = spawn_seeds(seed, max_iter + 1)

    iterations: list[SelectionIteration] = []
    final_auc = float("nan")
    unresolved = False
    for it in range(max_iter + 1):
        verdict = detect_drift(train.select_features(remaining),
                               test.select_features(remaining),
                               learner, theta_auc=cfg.theta_auc,
                               seed=seeds[it] if it < len(seeds) else seeds[-1])
        final_auc = verdict.auc
        if verdict.auc <= cfg.theta_auc:
            break
        if len(remaining) <= cfg.min_features or it == max_iter:
            unresolved = True
            break

        ranked = verdict.top_features  # descending gain share
        top_k = int(np.ceil(cfg.x_pct * len(remaining)))
        candidates = [(f, s) for f, s in ranked[:top_k] if s > cfg.theta_imp]
        if not candidates:
            candidates = [ranked[0]]
        allowed = len(remaining) - cfg.min_features
        candidates = candidates[:allowed]
        iterations.append(SelectionIteration(auc=verdict.auc,
                                             removed=list(candidates)))
        removed_names = {f for f, _ in candidates}
        remaining = [f for f in remaining if f not in removed_names]

    return SelectionTrace(
        iterations=iterations,
        final_features=remaining,
        final_auc=float(final_auc),
        unresolved=unresolved,
    )


def _logit(p: np.ndarray) -> np.ndarray:
    q = np.clip(p, LOGIT_EPS, 1.0 - LOGIT_EPS)
    return np.log(q / (1.0 - q))


def _column_smd(train: EncodedMatrix, test: EncodedMatrix,
                matched: np.ndarray, j: int) -> float:
    a = train.values[matched, j]
    a = a[~(train.missing_mask[matched, j] | np.isnan(a))]
    b = test.values[:, j]
    b = b[~(test.missing_mask[:, j] | np.isnan(b))]
    if len(a) == 0 or len(b) == 0:
        return float("nan")
    return smd(a, b)


def _nearest_alive(sorted_logits, alive, target):
    """(index into the sorted order, distance) of the nearest alive
    entry, or (-1, inf). The array is sorted, so only the first alive
    neighbour on each side of the insertion point can be nearest; exact
    ties go to the left one."""
    n = len(sorted_logits)
    pos = int(np.searchsorted(sorted_logits, target))
    lo, hi = pos - 1, pos
    while lo >= 0 and not alive[lo]:
        lo -= 1
    while hi < n and not alive[hi]:
        hi += 1
    d_lo = target - sorted_logits[lo] if lo >= 0 else np.inf
    d_hi = sorted_logits[hi] - target if hi < n else np.inf
    if d_lo == d_hi == np.inf:
        return -1, np.inf
    return (lo, d_lo) if d_lo <= d_hi else (hi, d_hi)


def psm_validation_select(train: EncodedMatrix, test: EncodedMatrix,
                          ps, target_frac: float = 0.2,
                          caliper_mult: float = 0.2,
                          smd_limit: float = 0.1,
                          seed: int = 0) -> MatchResult:
    """Pick a validation slice of the training data whose feature
    distribution matches the test data.

    Test rows are greedily 1-NN matched (without replacement, in
    descending test propensity order) to training rows on the logit of
    the propensity score, within a caliper of ``caliper_mult`` times the
    logit's standard deviation over all rows. If the matched set is large
    enough and balanced on propensity (|SMD| < ``smd_limit``), it becomes
    the validation set (seeded subsample down to ``target_frac`` of the
    training rows if larger); otherwise the fallback takes the training
    rows with the highest propensity scores.
    """
    p_train = np.asarray(ps.train_scores, dtype=np.float64)
    p_test = np.asarray(ps.test_scores, dtype=np.float64)
    if len(p_train) != train.n_rows or len(p_test) != test.n_rows:
        raise FitError("propensity scores do not cover all rows")
    n_train = train.n_rows
    target_n = max(1, int(round(target_frac * n_train)))
    rng = np.random.default_rng(spawn_seeds(seed, 1)[0])

    logit_all = _logit(np.concatenate([p_train, p_test]))
    sd_logit = float(logit_all.std(ddof=1)) if len(logit_all) > 1 else 0.0
    caliper = caliper_mult * sd_logit

    if sd_logit == 0.0:
        warnings.warn("degenerate propensities (all equal): "
                      "falling back to a seeded random validation slice")
        val = np.sort(rng.choice(n_train, size=min(target_n, n_train),
                                 replace=False))
        remaining = np.setdiff1d(np.arange(n_train), val)
        return MatchResult(pairs=[], caliper=caliper, balance=[],
                           val_indices=val, remaining_train_indices=remaining,
                           fallback_used=True, degenerate_propensity=True)

    train_logit = _logit(p_train)
    test_logit = _logit(p_test)
    order_train = np.argsort(train_logit, kind="stable")
    sorted_logits = train_logit[order_train]
    alive = np.ones(n_train, dtype=bool)
    # Hardest-to-match test rows (highest propensity) go first.
    test_order = np.lexsort((np.arange(test.n_rows), -p_test))

    pairs: list[tuple[int, int]] = []
    for t in test_order:
        k, dist = _nearest_alive(sorted_logits, alive, test_logit[t])
        if k >= 0 and dist <= caliper:
            alive[k] = False
            pairs.append((int(order_train[k]), int(t)))

    matched = np.array(sorted(i for i, _ in pairs), dtype=np.int64)
    balance: list[BalanceRow] = []
    prop_smd = float("nan")
    if len(matched) > 0:
        prop_smd = smd(p_train[matched], p_test)
        balance.append(BalanceRow(PROPENSITY_ROW, prop_smd))
        for j, name in enumerate(train.feature_names):
            balance.append(BalanceRow(name, _column_smd(train, test, matched, j)))

    if len(matched) >= target_n and abs(prop_smd) < smd_limit:
        val = matched
        if len(val) > target_n:
            val = np.sort(rng.choice(val, size=target_n, replace=False))
        fallback = False
    else:
        # Highest-propensity training rows, ties to the lower index.
        by_p = np.lexsort((np.arange(n_train), -p_train))
        val = np.sort(by_p[:target_n])
        fallback = True

    remaining = np.setdiff1d(np.arange(n_train), val)
    return MatchResult(pairs=pairs, caliper=caliper, balance=balance,
                       val_indices=val, remaining_train_indices=remaining,
                       fallback_used=fallback)


def ipw_weights(ps, p_max: float = 0.95) -> WeightVector:
    """Training-row weights p/(1-p) with propensities capped at ``p_max``
    (so the maximum weight is p_max/(1-p_max)). A warning is raised when
    more than half the rows have near-zero propensity."""
    if not 0.0 < p_max < 1.0:
        raise ConfigError("p_max must lie in (0, 1)")
    p = np.clip(np.asarray(ps.train_scores, dtype=np.float64), 0.0, p_max)
    w = p / (1.0 - p)
    total = w.sum()
    ess = float(total * total / (w * w).sum()) if total > 0 else 0.0
    low_overlap = bool(np.mean(np.asarray(ps.train_scores) < LOGIT_EPS) > 0.5)
    if low_overlap:
        warnings.warn("over half the training rows have near-zero "
                      "propensity; IPW will ignore most of the data")
    return WeightVector(weights=w, p_max=p_max,
                        effective_sample_size=ess, low_overlap=low_overlap)


def train_outcome(train: EncodedMatrix, y, adaptation: str,
                  gbdt: GBDTParams | None = None, seed: int = 0,
                  trace: SelectionTrace | None = None,
                  match: MatchResult | None = None,
                  weights: WeightVector | None = None) -> OutcomeModel:
    """Fit the outcome classifier under one adaptation.

    baseline: seeded internal 25% early-stopping split. feature_selection:
    same, restricted to the trace's surviving features. validation_
    selection: fit on the unmatched training rows with the matched
    validation slice as the early-stopping holdout. ipw: weighted fit.
    """
    gbdt = gbdt or GBDTParams()
    y = np.asarray(y)
    fit_seed = spawn_seeds(seed, 1)[0]
    params = replace(gbdt, seed=fit_seed)

    if adaptation == "baseline":
        model = fit_gbdt(train, y, params=params)
        meta = {"features": list(train.feature_names)}
    elif adaptation == "feature_selection":
        if trace is None:
            raise ConfigError("feature_selection needs a SelectionTrace")
        if not trace.final_features:
            raise FitError("selection trace left no features to train on")
        sub = train.select_features(trace.final_features)
        model = fit_gbdt(sub, y, params=params)
        meta = {"features": list(trace.final_features),
                "removed": trace.removed_features}
    elif adaptation == "validation_selection":
        if match is None:
            raise ConfigError("validation_selection needs a MatchResult")
        fit_idx = match.remaining_train_indices
        val_idx = match.val_indices
        if len(fit_idx) == 0:
            raise FitError("no training rows left outside the validation slice")
        model = fit_gbdt(train.select_rows(fit_idx), y[fit_idx], params=params,
                         val=(train.select_rows(val_idx), y[val_idx]))
        meta = {"features": list(train.feature_names),
                "n_fit": int(len(fit_idx)), "n_val": int(len(val_idx)),
                "validation_source": "psm_fallback" if match.fallback_used
                                     else "psm_matched"}
    elif adaptation == "ipw":
        if weights is None:
            raise ConfigError("ipw needs a WeightVector")
        model = fit_gbdt(train, y, w=weights.weights, params=params)
        meta = {"features": list(train.feature_names),
                "weight_min": float(weights.weights.min()),
                "weight_max": float(weights.weights.max()),
                "effective_sample_size": weights.effective_sample_size}
    else:
        raise ConfigError(f"unknown adaptation: {adaptation!r}")

    return OutcomeModel(model=model, adaptation=adaptation, metadata=meta)
