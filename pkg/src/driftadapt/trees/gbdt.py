"""Gradient-boosted trees: histogram split search, binary log-loss,
row/feature subsampling, L1/L2-regularized leaf values, native missing
routing, and early stopping on a holdout.

Leaf values are -lr * soft_threshold(G, l1) / (H + l2) and thus already
include shrinkage; a tree's prediction is the raw log-odds step. The
holdout loss is tracked per round including round 0 (prior only), and
``best_iteration`` is the earliest round with minimal holdout loss.

Sample weights are scale-free: uniform weights reduce exactly to the
unweighted fit, and general weights are normalized to mean 1 so the
regularization constants keep the same meaning as in an unweighted fit.
"""

from __future__ import annotations

import heapq
import warnings

import numpy as np

from ..data_model import EncodedMatrix
from ..errors import FitError
from .cart import _check_fit_inputs
from .model import Tree, TreeEnsembleModel, _sigmoid
from .params import GBDTParams

# Floors on child row count and hessian mass, per common boosted-tree
# library defaults.
MIN_CHILD_SAMPLES = 20
MIN_CHILD_WEIGHT = 1e-3

HOLDOUT_FRACTION = 0.25
PROB_EPS = 1e-15


def _bin_features(values, mask, max_bins):
    """Quantile-bin every feature. Returns (bins, n_bins, edges) where
    ``edges[f]`` holds the candidate thresholds (bin upper boundaries)
    and bin index ``n_bins[f]`` is reserved for missing values."""
    n, d = values.shape
    bins = np.zeros((n, d), dtype=np.int32)
    n_bins = np.zeros(d, dtype=np.int64)
    edges_list: list[np.ndarray] = []
    for f in range(d):
        x = values[:, f]
        miss = mask[:, f] | np.isnan(x)
        finite = x[~miss]
        uniq = np.unique(finite)
        if len(uniq) <= 1:
            edges = np.empty(0, dtype=np.float64)
            nb = len(uniq)
        elif len(uniq) <= max_bins:
            mid = 0.5 * (uniq[:-1] + uniq[1:])
            # Midpoints must stay strictly below the right neighbour so
            # "x <= threshold" reproduces the bin partition.
            edges = np.where(mid < uniq[1:], mid, uniq[:-1])
            nb = len(uniq)
        else:
            qs = np.quantile(finite, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
            edges = np.unique(qs)
            nb = len(edges) + 1
        if len(edges):
            b = np.searchsorted(edges, np.where(miss, 0.0, x), side="left")
        else:
            b = np.zeros(n, dtype=np.int64)
        bins[:, f] = np.where(miss, nb, b)
        n_bins[f] = nb
        edges_list.append(edges)
    return bins, n_bins, edges_list


def _shrunk(g, l1):
    return np.sign(g) * np.maximum(np.abs(g) - l1, 0.0)


def _score(g, h, l1, l2):
    t = _shrunk(g, l1)
    return t * t / (h + l2)


def _best_split_node(bins, n_bins, edges, rows, feats, g, h,
                     G, H, C, l1, l2):
    """Best histogram split of one node.

    Returns (gain, feature, threshold, missing_left) or None. Ties break
    toward the lowest feature index, then lowest threshold, then routing
    missing left.
    """
    parent = _score(np.float64(G), np.float64(H), l1, l2)
    best = None
    for f in feats:
        E = edges[f]
        if len(E) == 0:
            continue
        nb = int(n_bins[f])
        b = bins[rows, f]
        hist_g = np.bincount(b, weights=g[rows], minlength=nb + 1)
        hist_h = np.bincount(b, weights=h[rows], minlength=nb + 1)
        hist_c = np.bincount(b, minlength=nb + 1)
        g_miss, h_miss, c_miss = hist_g[nb], hist_h[nb], hist_c[nb]
        cg = np.cumsum(hist_g[:nb])[:-1]
        ch = np.cumsum(hist_h[:nb])[:-1]
        cc = np.cumsum(hist_c[:nb])[:-1]
        for missing_left in (True, False):
            gl = cg + (g_miss if missing_left else 0.0)
            hl = ch + (h_miss if missing_left else 0.0)
            cl = cc + (c_miss if missing_left else 0)
            gr, hr, cr = G - gl, H - hl, C - cl
            legal = (
                (cl >= MIN_CHILD_SAMPLES) & (cr >= MIN_CHILD_SAMPLES)
                & (hl >= MIN_CHILD_WEIGHT) & (hr >= MIN_CHILD_WEIGHT)
            )
            if not legal.any():
                continue
            gains = np.where(
                legal, _score(gl, hl, l1, l2) + _score(gr, hr, l1, l2) - parent,
                -np.inf,
            )
            t = int(np.argmax(gains))  # first max = lowest threshold
            cand = (float(gains[t]), int(f), float(E[t]), missing_left)
            if best is None or cand[0] > best[0] or (
                cand[0] == best[0] and cand[1] == best[1] and cand[2] < best[2]
            ):
                best = cand
    if best is None or best[0] <= 0.0:
        return None
    return best


class _TreeGrower:
    """Grows one boosting tree over a row subsample, depth-wise under a
    depth cap or best-first under a leaf cap."""

    def __init__(self, bins, n_bins, edges, params: GBDTParams):
        self.bins = bins
        self.n_bins = n_bins
        self.edges = edges
        self.p = params

    def grow(self, rows, feats, g, h, gain_out):
        p = self.p
        feature, threshold, default_left = [-1], [0.0], [True]
        left, right, value = [-1], [-1], [0.0]

        def leaf_value(G, H):
            return float(-p.learning_rate * _shrunk(np.float64(G), p.l1_reg)
                         / (H + p.l2_reg))

        def node_stats(r):
            return g[r].sum(), h[r].sum(), len(r)

        def new_node():
            feature.append(-1)
            threshold.append(0.0)
            default_left.append(True)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            return len(feature) - 1

        def find_split(r, G, H, C):
            return _best_split_node(self.bins, self.n_bins, self.edges, r,
                                    feats, g, h, G, H, C, p.l1_reg, p.l2_reg)

        def apply_split(node, r, split):
            gain, f, thr, miss_left = split
            gain_out[f] += gain
            b = self.bins[r, f]
            nb = int(self.n_bins[f])
            t_bin = int(np.searchsorted(self.edges[f], thr, side="left"))
            is_missing = b == nb
            go_left = np.where(is_missing, miss_left, b <= t_bin)
            lnode, rnode = new_node(), new_node()
            feature[node] = f
            threshold[node] = thr
            default_left[node] = miss_left
            left[node] = lnode
            right[node] = rnode
            return lnode, rnode, r[go_left], r[~go_left]

        G0, H0, C0 = node_stats(rows)
        value[0] = leaf_value(G0, H0)

        if p.max_depth is not None:
            queue = [(0, rows, G0, H0, C0, 0)]
            while queue:
                node, r, G, H, C, depth = queue.pop(0)
                value[node] = leaf_value(G, H)
                if depth >= p.max_depth:
                    continue
                split = find_split(r, G, H, C)
                if split is None:
                    continue
                lnode, rnode, rl, rr = apply_split(node, r, split)
                queue.append((lnode, rl, *node_stats(rl), depth + 1))
                queue.append((rnode, rr, *node_stats(rr), depth + 1))
        else:
            # Best-first growth until the leaf cap.
            counter = 0
            heap = []
            value[0] = leaf_value(G0, H0)
            split = find_split(rows, G0, H0, C0)
            if split is not None:
                heapq.heappush(heap, (-split[0], counter, 0, rows, split))
                counter += 1
            n_leaves = 1
            while heap and n_leaves < p.num_leaves:
                _, _, node, r, split = heapq.heappop(heap)
                lnode, rnode, rl, rr = apply_split(node, r, split)
                for child, rc in ((lnode, rl), (rnode, rr)):
                    Gc, Hc, Cc = node_stats(rc)
                    value[child] = leaf_value(Gc, Hc)
                    child_split = find_split(rc, Gc, Hc, Cc)
                    if child_split is not None:
                        heapq.heappush(
                            heap, (-child_split[0], counter, child, rc, child_split)
                        )
                        counter += 1
                n_leaves += 1

        return Tree(
            feature=np.asarray(feature, dtype=np.int32),
            threshold=np.asarray(threshold, dtype=np.float64),
            default_left=np.asarray(default_left, dtype=bool),
            left=np.asarray(left, dtype=np.int32),
            right=np.asarray(right, dtype=np.int32),
            value=np.asarray(value, dtype=np.float64),
        )


def _weighted_logloss(y, prob, w):
    p = np.clip(prob, PROB_EPS, 1.0 - PROB_EPS)
    return float(-(w * (y * np.log(p) + (1.0 - y) * np.log1p(-p))).sum() / w.sum())


def _normalize_weights(w):
    if np.all(w == 1.0):
        return w
    # Mean-1 normalization keeps l1/l2 on the same scale as an
    # unweighted fit of the same size.
    return w * (len(w) / w.sum())


def fit_gbdt(X: EncodedMatrix, y, w=None, params: GBDTParams | None = None,
             val: tuple | None = None) -> TreeEnsembleModel:
    """Boosted trees with early stopping.

    Without an explicit ``val`` pair, a seeded 25% row holdout is carved
    out and the trees are fit on the remaining 75%. ``val`` may be
    (EncodedMatrix, labels) or (EncodedMatrix, labels, weights). A
    single-class holdout disables early stopping (fixed ``max_rounds``,
    with a warning recorded on the model).
    """
    params = params or GBDTParams()
    y, w = _check_fit_inputs(X, y, w)
    w = _normalize_weights(w)
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    notes: list[str] = []

    if val is None:
        n = X.n_rows
        if n < 2:
            raise FitError("internal holdout needs at least 2 rows")
        perm = rng.permutation(n)
        n_val = max(1, int(round(HOLDOUT_FRACTION * n)))
        val_idx, fit_idx = perm[:n_val], perm[n_val:]
        if len(fit_idx) == 0:
            raise FitError("no rows left to fit after the holdout split")
        fit_values = X.values[fit_idx]
        fit_mask = X.missing_mask[fit_idx]
        y_fit, w_fit = y[fit_idx], w[fit_idx]
        val_values = X.values[val_idx]
        val_mask = X.missing_mask[val_idx]
        y_val, w_val = y[val_idx], w[val_idx]
    else:
        X_val, y_val = val[0], np.asarray(val[1], dtype=np.float64)
        w_val = (np.asarray(val[2], dtype=np.float64) if len(val) > 2
                 else np.ones(len(y_val)))
        if list(X_val.feature_names) != list(X.feature_names):
            raise FitError("holdout feature set differs from training features")
        if len(y_val) != X_val.n_rows:
            raise FitError("holdout labels length mismatch")
        fit_values, fit_mask, y_fit, w_fit = X.values, X.missing_mask, y, w
        val_values, val_mask = X_val.values, X_val.missing_mask

    early_stop = True
    if len(np.unique(y_val)) < 2:
        early_stop = False
        msg = ("single-class early-stopping holdout: disabling early "
               "stopping, training fixed max_rounds")
        warnings.warn(msg)
        notes.append(msg)

    n_fit, d = fit_values.shape
    bins, n_bins, edges = _bin_features(fit_values, fit_mask, params.histogram_bins)
    grower = _TreeGrower(bins, n_bins, edges, params)

    y_mean = float(np.clip((w_fit * y_fit).sum() / w_fit.sum(),
                           PROB_EPS, 1.0 - PROB_EPS))
    base_score = float(np.log(y_mean / (1.0 - y_mean)))
    f_fit = np.full(n_fit, base_score)
    f_val = np.full(len(y_val), base_score)

    eval_history = [_weighted_logloss(y_val, _sigmoid(f_val), w_val)]
    best_loss, best_round = eval_history[0], 0

    n_sub = max(1, int(np.ceil(params.row_subsample * n_fit)))
    d_sub = max(1, int(np.ceil(params.feature_subsample_per_tree * d)))

    trees: list[Tree] = []
    per_tree_gain: list[np.ndarray] = []
    for rnd in range(params.max_rounds):
        prob = _sigmoid(f_fit)
        g = (prob - y_fit) * w_fit
        h = np.maximum(prob * (1.0 - prob), 1e-16) * w_fit
        rows = (np.sort(rng.choice(n_fit, size=n_sub, replace=False))
                if n_sub < n_fit else np.arange(n_fit))
        feats = (np.sort(rng.choice(d, size=d_sub, replace=False))
                 if d_sub < d else np.arange(d))
        gain = np.zeros(d, dtype=np.float64)
        tree = grower.grow(rows, feats, g, h, gain)
        trees.append(tree)
        per_tree_gain.append(gain)
        f_fit += tree.predict(fit_values, fit_mask)
        f_val += tree.predict(val_values, val_mask)
        loss = _weighted_logloss(y_val, _sigmoid(f_val), w_val)
        eval_history.append(loss)
        if loss < best_loss:
            best_loss, best_round = loss, rnd + 1
        elif early_stop and (rnd + 1 - best_round) >= params.early_stopping_rounds:
            break

    if not early_stop:
        best_round = int(np.argmin(eval_history))

    raw_gain = (np.sum(per_tree_gain[:best_round], axis=0)
                if best_round > 0 else np.zeros(d))
    return TreeEnsembleModel(
        kind="gbdt",
        feature_names=list(X.feature_names),
        trees=trees,
        raw_gain=np.asarray(raw_gain, dtype=np.float64),
        base_score=base_score,
        best_iteration=best_round,
        params={
            "max_depth": params.max_depth,
            "num_leaves": params.num_leaves,
            "learning_rate": params.learning_rate,
            "max_rounds": params.max_rounds,
            "row_subsample": params.row_subsample,
            "feature_subsample_per_tree": params.feature_subsample_per_tree,
            "l1_reg": params.l1_reg,
            "l2_reg": params.l2_reg,
            "early_stopping_rounds": params.early_stopping_rounds,
            "histogram_bins": params.histogram_bins,
            "seed": params.seed,
        },
        eval_history=eval_history,
        notes=notes,
    )
