"""Hyperparameter containers for the embedded tree learners."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError


@dataclass(frozen=True)
class DTParams:
    """CART decision tree controls (classification, weighted Gini)."""

    min_samples_leaf: int = 20
    min_impurity_decrease: float = 0.01
    max_depth: int | None = None

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.min_impurity_decrease < 0:
            raise ConfigError("min_impurity_decrease must be >= 0")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1 when set")


@dataclass(frozen=True)
class RFParams:
    """Random forest: bootstrapped CART trees with ceil(sqrt(d)) features
    sampled per split."""

    n_trees: int = 100
    bootstrap: bool = True
    dt: DTParams = field(default_factory=DTParams)
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")


@dataclass(frozen=True)
class GBDTParams:
    """Gradient-boosted trees with histogram split search.

    Exactly one of ``max_depth`` / ``num_leaves`` caps growth: depth-wise
    growth under a depth cap, best-first growth under a leaf cap.
    Learning rate 0 is accepted as a degenerate setting (every leaf
    contributes 0, predictions stay at the prior).
    """

    max_depth: int | None = 5
    num_leaves: int | None = None
    learning_rate: float = 0.1
    max_rounds: int = 500
    row_subsample: float = 0.5
    feature_subsample_per_tree: float = 0.8
    l1_reg: float = 1.0
    l2_reg: float = 1.0
    early_stopping_rounds: int = 10
    histogram_bins: int = 255
    seed: int = 0

    def __post_init__(self):
        if (self.max_depth is None) == (self.num_leaves is None):
            raise ConfigError(
                "exactly one of max_depth / num_leaves must be set"
            )
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.num_leaves is not None and self.num_leaves < 2:
            raise ConfigError("num_leaves must be >= 2")
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in [0, 1]")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        for name in ("row_subsample", "feature_subsample_per_tree"):
            frac = getattr(self, name)
            if not 0.0 < frac <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1]")
        if self.l1_reg < 0 or self.l2_reg < 0:
            raise ConfigError("regularization constants must be >= 0")
        if self.early_stopping_rounds < 1:
            raise ConfigError("early_stopping_rounds must be >= 1")
        if self.histogram_bins < 2:
            raise ConfigError("histogram_bins must be >= 2")
