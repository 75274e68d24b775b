"""Ranking and balance metrics: AUC, standardized mean difference, and
the repeated-run mean with a 95% Student-t confidence interval."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DataError

# Two samples count as balanced when |SMD| is below this.
SMD_BALANCE_LIMIT = 0.1


@dataclass(frozen=True)
class BalanceRow:
    feature: str
    smd: float

    @property
    def balanced(self) -> bool:
        return abs(self.smd) < SMD_BALANCE_LIMIT


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney statistic.

    Ties contribute half a win per tied pair (midrank convention), so
    integer-coded scores are handled exactly. Requires both classes.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise DataError("scores and labels must have the same length")
    pos = labels == 1
    n1 = int(pos.sum())
    n0 = len(labels) - n1
    if n1 == 0 or n0 == 0:
        raise DataError("AUC needs both classes present")

    # Midranks: a value with c copies and k smaller values gets rank
    # k + (c + 1) / 2 (1-based, averaged over its tie group).
    _, inverse, counts = np.unique(scores, return_inverse=True,
                                   return_counts=True)
    below = np.concatenate(([0], np.cumsum(counts)[:-1]))
    ranks = (below + (counts + 1) / 2.0)[inverse]
    rank_sum_pos = ranks[pos].sum()
    u = rank_sum_pos - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def smd(x_match, x_test) -> float:
    """Standardized mean difference between two samples.

    Mean difference over the pooled standard deviation
    sqrt((var(match) + var(test)) / 2), with n-1 sample variances.
    Zero pooled variance resolves to 0 for equal means and +/-inf
    otherwise (reported as unbalanced).
    """
    a = np.asarray(x_match, dtype=np.float64)
    b = np.asarray(x_test, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise DataError("smd needs nonempty samples")
    mean_a, mean_b = a.mean(), b.mean()
    var_a = a.var(ddof=1) if len(a) > 1 else 0.0
    var_b = b.var(ddof=1) if len(b) > 1 else 0.0
    pooled = np.sqrt(0.5 * (var_a + var_b))
    diff = mean_a - mean_b
    if pooled == 0.0:
        if diff == 0.0:
            return 0.0
        return float(np.copysign(np.inf, diff))
    return float(diff / pooled)


def mean_ci(values, level: float = 0.95) -> tuple[float, float]:
    """Mean and Student-t half-width of the confidence interval
    across repeated runs. Needs at least two values."""
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) < 2:
        raise DataError("mean_ci needs at least two values")
    n = len(arr)
    sd = arr.std(ddof=1)
    t = stats.t.ppf(0.5 + level / 2.0, df=n - 1)
    return float(arr.mean()), float(t * sd / np.sqrt(n))
