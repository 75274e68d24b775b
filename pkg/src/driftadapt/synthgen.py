"""Seeded synthetic tabular data with known drift ground truth, plus the
brute-force oracles the test suite checks the fast paths against.

All randomness flows through numpy's PCG64 generator; per-feature child
seeds are spawned from the master seed so generation is reproducible
and order-independent across features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import Column, ColumnKind, Dataset
from .errors import ConfigError


@dataclass(frozen=True)
class Distribution:
    """One marginal: normal(mu, sigma), uniform(low, high), or
    categorical(p0, p1, ...)."""

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind == "normal":
            if len(self.params) != 2 or self.params[1] <= 0:
                raise ConfigError("normal needs (mu, sigma) with sigma > 0")
        elif self.kind == "uniform":
            if len(self.params) != 2 or self.params[0] >= self.params[1]:
                raise ConfigError("uniform needs (low, high) with low < high")
        elif self.kind == "categorical":
            probs = np.asarray(self.params, dtype=np.float64)
            if len(probs) < 2 or (probs < 0).any() or not np.isclose(probs.sum(), 1.0):
                raise ConfigError("categorical needs >= 2 probabilities summing to 1")
        else:
            raise ConfigError(f"unknown distribution kind: {self.kind!r}")

    def sample(self, n: int, rng: np.random.Generator):
        if self.kind == "normal":
            mu, sigma = self.params
            return rng.normal(mu, sigma, size=n)
        if self.kind == "uniform":
            low, high = self.params
            return rng.uniform(low, high, size=n)
        probs = np.asarray(self.params, dtype=np.float64)
        return rng.choice(len(probs), size=n, p=probs / probs.sum())

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}

    @staticmethod
    def from_dict(d: dict) -> "Distribution":
        return Distribution(d["kind"], tuple(d["params"]))


def normal(mu: float, sigma: float) -> Distribution:
    return Distribution("normal", (float(mu), float(sigma)))


def uniform(low: float, high: float) -> Distribution:
    return Distribution("uniform", (float(low), float(high)))


def categorical(*probs: float) -> Distribution:
    return Distribution("categorical", tuple(float(p) for p in probs))


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    train: Distribution
    test: Distribution | None = None  # None: identical to train (no drift)

    @property
    def test_dist(self) -> Distribution:
        return self.test if self.test is not None else self.train

    @property
    def drifted(self) -> bool:
        return self.test is not None and self.test != self.train


@dataclass(frozen=True)
class DriftSpec:
    """Generator recipe: marginals per side, a logistic label rule over
    stable features, and the declared drifted set."""

    name: str
    n_train: int
    n_test: int
    features: tuple[FeatureSpec, ...]
    label_coefficients: dict = field(default_factory=dict)
    label_intercept: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ConfigError("n_train and n_test must be >= 1")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate feature names")
        unknown = set(self.label_coefficients) - set(names)
        if unknown:
            raise ConfigError(f"label rule references unknown features: {sorted(unknown)}")

    @property
    def drifted(self) -> frozenset[str]:
        return frozenset(f.name for f in self.features if f.drifted)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "seed": self.seed,
            "features": [
                {
                    "name": f.name,
                    "train": f.train.to_dict(),
                    **({"test": f.test.to_dict()} if f.test is not None else {}),
                }
                for f in self.features
            ],
            "label": {
                "intercept": self.label_intercept,
                "coefficients": dict(self.label_coefficients),
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "DriftSpec":
        feats = tuple(
            FeatureSpec(
                name=f["name"],
                train=Distribution.from_dict(f["train"]),
                test=Distribution.from_dict(f["test"]) if "test" in f else None,
            )
            for f in d["features"]
        )
        label = d.get("label", {})
        return DriftSpec(
            name=d["name"],
            n_train=int(d["n_train"]),
            n_test=int(d["n_test"]),
            features=feats,
            label_coefficients=dict(label.get("coefficients", {})),
            label_intercept=float(label.get("intercept", 0.0)),
            seed=int(d.get("seed", 0)),
        )


@dataclass
class SynthData:
    train: Dataset            # labeled
    test: Dataset             # labels withheld
    test_labels: np.ndarray   # hidden, for evaluation only
    ground_truth: frozenset[str]


def _label_draw(numeric_view: dict[str, np.ndarray], spec: DriftSpec,
                n: int, rng: np.random.Generator) -> np.ndarray:
    z = np.full(n, spec.label_intercept, dtype=np.float64)
    for name, coef in spec.label_coefficients.items():
        z += coef * numeric_view[name]
    p = 1.0 / (1.0 + np.exp(-z))
    return (rng.random(n) < p).astype(np.int8)


def generate(spec: DriftSpec) -> SynthData:
    """Draw both sides of a drift scenario.

    Deterministic for a fixed spec; the test labels are generated from
    the same logistic rule but returned separately, never on the test
    Dataset.
    """
    d = len(spec.features)
    children = np.random.SeedSequence(spec.seed).spawn(2 * d + 2)

    sides = {}
    for s, (side, n) in enumerate((("train", spec.n_train), ("test", spec.n_test))):
        columns: list[Column] = []
        data: dict[str, np.ndarray] = {}
        numeric_view: dict[str, np.ndarray] = {}
        for j, f in enumerate(spec.features):
            rng = np.random.default_rng(children[2 * j + s])
            dist = f.train if side == "train" else f.test_dist
            draw = dist.sample(n, rng)
            if dist.kind == "categorical":
                columns.append(Column(f.name, ColumnKind.CATEGORICAL))
                arr = np.empty(n, dtype=object)
                for i, code in enumerate(draw):
                    arr[i] = f"c{int(code)}"
                data[f.name] = arr
                numeric_view[f.name] = draw.astype(np.float64)
            else:
                columns.append(Column(f.name, ColumnKind.NUMERICAL))
                data[f.name] = draw.astype(np.float64)
                numeric_view[f.name] = data[f.name]
        label_rng = np.random.default_rng(children[2 * d + s])
        labels = _label_draw(numeric_view, spec, n, label_rng)
        sides[side] = (columns, data, labels, n)

    tr_cols, tr_data, tr_labels, _ = sides["train"]
    te_cols, te_data, te_labels, _ = sides["test"]
    train = Dataset(name=f"{spec.name}-train", columns=tr_cols, data=tr_data,
                    n_rows=spec.n_train, label=tr_labels)
    test = Dataset(name=f"{spec.name}-test", columns=te_cols, data=te_data,
                   n_rows=spec.n_test, label=None)
    return SynthData(train=train, test=test, test_labels=te_labels,
                     ground_truth=spec.drifted)


def single_shift_spec(name: str, n_train: int, n_test: int, d: int,
                      shift: float, seed: int,
                      drifted_feature: int = 0) -> DriftSpec:
    """Common scenario: standard-normal features, one mean-shifted at
    test time, label logistic in two stable features."""
    feats = []
    for j in range(d):
        test_dist = normal(shift, 1.0) if j == drifted_feature else None
        feats.append(FeatureSpec(f"f{j}", normal(0.0, 1.0), test_dist))
    stable = [j for j in range(d) if j != drifted_feature]
    coefs = {f"f{stable[0]}": 1.0}
    if len(stable) > 1:
        coefs[f"f{stable[1]}"] = -0.5
    return DriftSpec(name=name, n_train=n_train, n_test=n_test,
                     features=tuple(feats), label_coefficients=coefs,
                     seed=seed)


def no_drift_spec(name: str, n_train: int, n_test: int, d: int,
                  seed: int) -> DriftSpec:
    """Identical marginals on both sides; the drifted set is empty."""
    shifted = single_shift_spec(name, n_train, n_test, d, shift=0.0,
                                seed=seed, drifted_feature=0)
    feats = tuple(FeatureSpec(f.name, f.train, None) for f in shifted.features)
    return DriftSpec(name=name, n_train=n_train, n_test=n_test,
                     features=feats,
                     label_coefficients=shifted.label_coefficients,
                     seed=seed)


# ---------------------------------------------------------------------------
# Verification oracles (intentionally naive).

def oracle_auc(scores, labels) -> float:
    """O(n^2) pairwise win/tie counter."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ConfigError("oracle_auc needs both classes")
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def _oracle_gini(y, w):
    total = w.sum()
    if total <= 0:
        return 0.0
    p1 = (w * y).sum() / total
    return 2.0 * p1 * (1.0 - p1)


def oracle_best_split(values, y, w=None, mask=None, min_samples_leaf=1):
    """Exhaustive enumeration of every (feature, midpoint threshold,
    missing routing) candidate; returns (feature, threshold, missing_left,
    decrease) or None. Ties break to the lowest feature index, then the
    lowest threshold, then missing-left."""
    values = np.asarray(values, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = values.shape
    w = np.ones(n) if w is None else np.asarray(w, dtype=np.float64)
    mask = np.zeros_like(values, dtype=bool) if mask is None else mask
    w_total = w.sum()
    best = None
    for f in range(d):
        miss = mask[:, f] | np.isnan(values[:, f])
        xs = np.unique(values[~miss, f])
        if len(xs) < 2:
            continue
        for i in range(len(xs) - 1):
            thr = 0.5 * (xs[i] + xs[i + 1])
            if thr >= xs[i + 1]:
                thr = xs[i]
            for missing_left in (True, False):
                go_left = np.where(miss, missing_left, values[:, f] <= thr)
                nl, nr = int(go_left.sum()), int((~go_left).sum())
                if nl < min_samples_leaf or nr < min_samples_leaf:
                    continue
                wl, wr = w[go_left], w[~go_left]
                if wl.sum() <= 0 or wr.sum() <= 0:
                    continue
                w_node = w.sum()
                dec = (w_node / w_total) * (
                    _oracle_gini(y, w)
                    - (wl.sum() / w_node) * _oracle_gini(y[go_left], wl)
                    - (wr.sum() / w_node) * _oracle_gini(y[~go_left], wr)
                )
                # Candidates are visited in (feature, threshold,
                # missing-left-first) order, so a strict comparison
                # realizes the tie-break rule.
                cand = (dec, f, thr, missing_left)
                if best is None or cand[0] > best[0]:
                    best = cand
    if best is None:
        return None
    dec, f, thr, missing_left = best
    return f, thr, missing_left, dec
