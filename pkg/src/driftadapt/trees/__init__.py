"""Embedded tree learners: CART decision tree, random forest, and
histogram gradient-boosted trees, all with gain importances, missing
routing and a bit-exact JSON serialization."""

from .params import DTParams, RFParams, GBDTParams
from .model import (
    Tree,
    TreeEnsembleModel,
    predict_proba,
    gain_importance,
    ranked_features,
    model_to_json,
    model_from_json,
    save_model,
    load_model,
)
from .cart import fit_decision_tree, fit_random_forest
from .gbdt import fit_gbdt

__all__ = [
    "DTParams",
    "RFParams",
    "GBDTParams",
    "Tree",
    "TreeEnsembleModel",
    "predict_proba",
    "gain_importance",
    "ranked_features",
    "model_to_json",
    "model_from_json",
    "save_model",
    "load_model",
    "fit_decision_tree",
    "fit_random_forest",
    "fit_gbdt",
]
