"""Fitted tree-ensemble representation, prediction, importance and the
versioned JSON serialization (bit-exact round trip)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..data_model import EncodedMatrix
from ..errors import DataError

MODEL_FORMAT = "driftadapt-model/1"


@dataclass
class Tree:
    """One binary tree as parallel node arrays. ``feature[i] < 0`` marks a
    leaf; missing values at a split follow ``default_left``."""

    feature: np.ndarray      # int32, -1 for leaves
    threshold: np.ndarray    # float64, x <= threshold routes left
    default_left: np.ndarray # bool
    left: np.ndarray         # int32 child ids, -1 for leaves
    right: np.ndarray
    value: np.ndarray        # float64 leaf payload (prob for dt/rf, log-odds step for gbdt)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, values: np.ndarray, mask: np.ndarray) -> np.ndarray:
        out = np.empty(values.shape[0], dtype=np.float64)
        stack = [(0, np.arange(values.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if len(idx) == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[idx] = self.value[node]
                continue
            x = values[idx, f]
            miss = mask[idx, f] | np.isnan(x)
            go_left = np.where(miss, self.default_left[node], x <= self.threshold[node])
            stack.append((self.left[node], idx[go_left]))
            stack.append((self.right[node], idx[~go_left]))
        return out


@dataclass
class TreeEnsembleModel:
    """A fitted dt / rf / gbdt classifier over a fixed feature set.

    ``raw_gain`` accumulates per-feature split gain (the quantity each
    learner maximizes); features never split on stay at 0. For gbdt,
    ``best_iteration`` is the tree count selected by early stopping and
    both prediction and gain use only that prefix of ``trees``.
    """

    kind: str
    feature_names: list[str]
    trees: list[Tree]
    raw_gain: np.ndarray
    base_score: float = 0.0
    best_iteration: int | None = None
    params: dict = field(default_factory=dict)
    eval_history: list[float] | None = None
    notes: list[str] = field(default_factory=list)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_features(model: TreeEnsembleModel, X: EncodedMatrix) -> None:
    if list(X.feature_names) != list(model.feature_names):
        raise DataError(
            "feature set mismatch: model was fit on "
            f"{model.feature_names}, got {X.feature_names}"
        )


def predict_proba(model: TreeEnsembleModel, X: EncodedMatrix) -> np.ndarray:
    """Per-row P(y=1). dt/rf average leaf probabilities; gbdt applies the
    logistic function to the prior plus the first best_iteration trees."""
    _check_features(model, X)
    values, mask = X.values, X.missing_mask
    if model.kind in ("dt", "rf"):
        acc = np.zeros(X.n_rows, dtype=np.float64)
        for tree in model.trees:
            acc += tree.predict(values, mask)
        return acc / len(model.trees)
    if model.kind == "gbdt":
        used = model.trees if model.best_iteration is None \
            else model.trees[: model.best_iteration]
        score = np.full(X.n_rows, model.base_score, dtype=np.float64)
        for tree in used:
            score += tree.predict(values, mask)
        return _sigmoid(score)
    raise DataError(f"unknown model kind: {model.kind!r}")


def gain_importance(model: TreeEnsembleModel) -> np.ndarray:
    """Per-feature gain shares normalized to sum 1; all zeros when the
    model never split."""
    total = model.raw_gain.sum()
    if total <= 0:
        return np.zeros_like(model.raw_gain)
    return model.raw_gain / total


def ranked_features(model: TreeEnsembleModel) -> list[tuple[str, float]]:
    """(feature, gain share) pairs, descending share, ties by feature
    position."""
    shares = gain_importance(model)
    order = np.lexsort((np.arange(len(shares)), -shares))
    return [(model.feature_names[i], float(shares[i])) for i in order]


def _tree_to_dict(tree: Tree) -> dict:
    return {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "default_left": tree.default_left.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def _tree_from_dict(d: dict) -> Tree:
    return Tree(
        feature=np.asarray(d["feature"], dtype=np.int32),
        threshold=np.asarray(d["threshold"], dtype=np.float64),
        default_left=np.asarray(d["default_left"], dtype=bool),
        left=np.asarray(d["left"], dtype=np.int32),
        right=np.asarray(d["right"], dtype=np.int32),
        value=np.asarray(d["value"], dtype=np.float64),
    )


def model_to_json(model: TreeEnsembleModel) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "params": model.params,
        "base_score": model.base_score,
        "best_iteration": model.best_iteration,
        "gain_importance": model.raw_gain.tolist(),
        "eval_history": model.eval_history,
        "notes": list(model.notes),
        "trees": [_tree_to_dict(t) for t in model.trees],
    }
    return json.dumps(doc)


def model_from_json(text: str) -> TreeEnsembleModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"unsupported model format: {doc.get('format')!r}")
    return TreeEnsembleModel(
        kind=doc["kind"],
        feature_names=list(doc["feature_names"]),
        trees=[_tree_from_dict(t) for t in doc["trees"]],
        raw_gain=np.asarray(doc["gain_importance"], dtype=np.float64),
        base_score=doc["base_score"],
        best_iteration=doc["best_iteration"],
        params=doc["params"],
        eval_history=doc["eval_history"],
        notes=list(doc["notes"]),
    )


def save_model(model: TreeEnsembleModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> TreeEnsembleModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read())
