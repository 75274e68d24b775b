"""CART decision tree (weighted Gini) and bootstrap random forest.

Split search is exhaustive over midpoint thresholds; the accepted split
maximizes the weighted impurity decrease

    (W_node / W_total) * (imp - W_L/W_node * imp_L - W_R/W_node * imp_R)

and must clear ``min_impurity_decrease`` with both children holding at
least ``min_samples_leaf`` rows. Ties break toward the lowest feature
index, then the lowest threshold. Rows missing the split feature follow
a learned default direction (both routings are tried; left wins ties).
"""

from __future__ import annotations

import numpy as np

from ..data_model import EncodedMatrix
from ..errors import FitError
from .model import Tree, TreeEnsembleModel
from .params import DTParams, RFParams


def _gini(w1: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted two-class Gini impurity, elementwise; 0 where w == 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = np.where(w > 0, w1 / w, 0.0)
    return 2.0 * p1 * (1.0 - p1)


def _best_split_feature(x, miss, y, w, w_total_root, msl):
    """Best legal split of one feature's node column.

    Returns (decrease, threshold, missing_left) or None. ``x``/``miss``
    are the node rows' values and missing flags for this feature.
    """
    nm = ~miss
    xs = x[nm]
    if len(xs) < 2:
        return None
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    ws = w[nm][order]
    wys = (w[nm] * y[nm])[order]

    cut = xs[:-1] < xs[1:]
    if not cut.any():
        return None
    pos = np.nonzero(cut)[0]         # split after sorted position pos
    thr = 0.5 * (xs[pos] + xs[pos + 1])
    # Guard against midpoints rounding up to the right value.
    thr = np.where(thr < xs[pos + 1], thr, xs[pos])

    cw = np.cumsum(ws)
    cwy = np.cumsum(wys)
    w_node = cw[-1] + w[miss].sum()
    w1_node = cwy[-1] + (w[miss] * y[miss]).sum()
    n_node = len(x)
    n_miss = int(miss.sum())
    w_miss = w[miss].sum()
    w1_miss = (w[miss] * y[miss]).sum()

    imp_node = _gini(np.array([w1_node]), np.array([w_node]))[0]

    best = None
    base_wl = cw[pos]
    base_w1l = cwy[pos]
    base_nl = pos + 1
    for missing_left in (True, False):
        wl = base_wl + (w_miss if missing_left else 0.0)
        w1l = base_w1l + (w1_miss if missing_left else 0.0)
        nl = base_nl + (n_miss if missing_left else 0)
        wr = w_node - wl
        w1r = w1_node - w1l
        nr = n_node - nl
        legal = (nl >= msl) & (nr >= msl) & (wl > 0) & (wr > 0)
        if not legal.any():
            continue
        dec = (w_node / w_total_root) * (
            imp_node
            - (wl / w_node) * _gini(w1l, wl)
            - (wr / w_node) * _gini(w1r, wr)
        )
        dec = np.where(legal, dec, -np.inf)
        k = int(np.argmax(dec))  # first max = lowest threshold
        cand = (float(dec[k]), float(thr[k]), missing_left)
        if best is None or cand[0] > best[0] or (
            cand[0] == best[0] and cand[1] < best[1]
        ):
            # Left routing was evaluated first, so equal-gain equal-threshold
            # candidates keep missing_left=True.
            best = cand
    return best


def _grow_cart(values, mask, y, w, params: DTParams, rng=None,
               n_split_features: int | None = None):
    """Grow one CART tree; returns (Tree, per-feature gain array)."""
    n, d = values.shape
    gain = np.zeros(d, dtype=np.float64)
    w_total_root = w.sum()

    feature, threshold, default_left = [], [], []
    left, right, value = [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        default_left.append(True)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        wn = w[idx]
        w_node = wn.sum()
        w1_node = (wn * yn).sum()
        value[node] = float(w1_node / w_node) if w_node > 0 else 0.5

        depth_ok = params.max_depth is None or depth < params.max_depth
        pure = w1_node == 0.0 or w1_node == w_node
        if not depth_ok or pure or len(idx) < 2 * params.min_samples_leaf:
            continue

        if n_split_features is not None and n_split_features < d:
            feats = np.sort(rng.choice(d, size=n_split_features, replace=False))
        else:
            feats = np.arange(d)

        best = None
        for f in feats:
            x = values[idx, f]
            miss = mask[idx, f] | np.isnan(x)
            cand = _best_split_feature(x, miss, yn, wn, w_total_root,
                                       params.min_samples_leaf)
            if cand is None:
                continue
            dec, thr, miss_left = cand
            if best is None or dec > best[0]:
                best = (dec, int(f), thr, miss_left)

        if best is None or best[0] < params.min_impurity_decrease:
            continue

        dec, f, thr, miss_left = best
        gain[f] += dec
        x = values[idx, f]
        miss = mask[idx, f] | np.isnan(x)
        go_left = np.where(miss, miss_left, x <= thr)
        lnode, rnode = new_node(), new_node()
        feature[node] = f
        threshold[node] = thr
        default_left[node] = miss_left
        left[node] = lnode
        right[node] = rnode
        stack.append((rnode, idx[~go_left], depth + 1))
        stack.append((lnode, idx[go_left], depth + 1))

    tree = Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        default_left=np.asarray(default_left, dtype=bool),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )
    return tree, gain


def _check_fit_inputs(X: EncodedMatrix, y, w):
    y = np.asarray(y, dtype=np.float64)
    if X.n_rows < 1:
        raise FitError("cannot fit on empty data")
    if len(y) != X.n_rows:
        raise FitError(f"y has length {len(y)}, expected {X.n_rows}")
    if not np.isin(y, (0.0, 1.0)).all():
        raise FitError("labels must be binary 0/1")
    if w is None:
        w = np.ones(X.n_rows, dtype=np.float64)
    else:
        w = np.asarray(w, dtype=np.float64)
        if len(w) != X.n_rows:
            raise FitError("weights length mismatch")
        if (w < 0).any():
            raise FitError("weights must be nonnegative")
        if w.sum() == 0:
            raise FitError("weights must not be all zero")
        if np.all(w == w[0]):
            # Uniform weights are mathematically an unweighted fit; make
            # the reduction exact rather than up-to-rounding.
            w = np.ones(X.n_rows, dtype=np.float64)
    return y, w


def fit_decision_tree(X: EncodedMatrix, y, w=None,
                      params: DTParams | None = None) -> TreeEnsembleModel:
    """Single CART tree; leaf values are weighted class-1 probabilities.
    All-one-class data fits a single leaf."""
    params = params or DTParams()
    y, w = _check_fit_inputs(X, y, w)
    tree, gain = _grow_cart(X.values, X.missing_mask, y, w, params)
    return TreeEnsembleModel(
        kind="dt",
        feature_names=list(X.feature_names),
        trees=[tree],
        raw_gain=gain,
        params={
            "min_samples_leaf": params.min_samples_leaf,
            "min_impurity_decrease": params.min_impurity_decrease,
            "max_depth": params.max_depth,
        },
    )


def _fit_forest_tree(values, mask, y, w, params: RFParams, child_seed,
                     n_split_features):
    rng = np.random.default_rng(child_seed)
    n = values.shape[0]
    if params.bootstrap:
        idx = np.sort(rng.integers(0, n, size=n))
    else:
        idx = np.arange(n)
    return _grow_cart(values[idx], mask[idx], y[idx], w[idx], params.dt,
                      rng=rng, n_split_features=n_split_features)


def fit_random_forest(X: EncodedMatrix, y, w=None,
                      params: RFParams | None = None,
                      n_jobs: int = 1) -> TreeEnsembleModel:
    """Bootstrap-aggregated CART trees with ceil(sqrt(d)) features per
    split. Per-tree seeds come from the master seed, so results do not
    depend on ``n_jobs``."""
    from joblib import Parallel, delayed

    params = params or RFParams()
    y, w = _check_fit_inputs(X, y, w)
    d = X.n_features
    n_split_features = int(np.ceil(np.sqrt(d)))
    child_seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)

    results = Parallel(n_jobs=n_jobs)(
        delayed(_fit_forest_tree)(
            X.values, X.missing_mask, y, w, params, child_seeds[t],
            n_split_features,
        )
        for t in range(params.n_trees)
    )
    trees = [r[0] for r in results]
    gain = np.sum([r[1] for r in results], axis=0)
    return TreeEnsembleModel(
        kind="rf",
        feature_names=list(X.feature_names),
        trees=trees,
        raw_gain=gain,
        params={
            "n_trees": params.n_trees,
            "bootstrap": params.bootstrap,
            "min_samples_leaf": params.dt.min_samples_leaf,
            "min_impurity_decrease": params.dt.min_impurity_decrease,
            "max_depth": params.dt.max_depth,
            "seed": params.seed,
        },
    )
