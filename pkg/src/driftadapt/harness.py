"""Execution harness behind the CLI verbs.

Every verb runs its method ``n_runs`` times; run i uses master seed
``seed + i`` (so any single run can be reproduced alone) and all
randomness inside a run derives from that master seed. Aggregates are
mean and 95% Student-t halfwidth across runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adversarial import (
    LearnerParams,
    detect_drift,
    propensity_oof,
)
from .data_model import (
    IMPUTE_ZERO,
    KEEP_MISSING,
    Dataset,
    align_codebooks,
    encode,
    extract_label,
    load_csv,
    load_schema,
    vstack_encoded,
    write_csv,
)
from .errors import ConfigError, DataError
from .metrics import auc, mean_ci
from .methods import (
    FeatureSelectionConfig,
    MatchResult,
    SelectionTrace,
    auto_feature_selection,
    ipw_weights,
    psm_validation_select,
    train_outcome,
)
from .reports import Report, save_report
from .seeding import spawn_seeds
from .synthgen import DriftSpec, generate
from .trees import DTParams, GBDTParams, RFParams, predict_proba

EXPERIMENT_METHODS = ("baseline", "feature_selection", "validation_selection", "ipw")


@dataclass
class RunConfig:
    method: str
    train_path: str | None = None
    test_paths: list[str] = field(default_factory=list)
    test_label_paths: list[str] = field(default_factory=list)
    schema_path: str | None = None
    label_column: str | None = None
    learner: str = "gbdt"  # adversarial learner: dt | rf | gbdt
    theta_auc: float = 0.6
    x_pct: float = 0.10
    theta_imp: float = 0.1
    min_features: int = 2
    max_iter: int | None = None
    folds: int = 5
    target_frac: float = 0.2
    caliper_mult: float = 0.2
    smd_limit: float = 0.1
    p_max: float = 0.95
    n_runs: int | None = None
    seed: int = 0
    out_path: str | None = None
    synth_spec_path: str | None = None
    synth_seed: int | None = None  # overrides the spec file's seed
    out_dir: str | None = None

    def runs(self) -> int:
        if self.n_runs is not None:
            if self.n_runs < 1:
                raise ConfigError("n_runs must be >= 1")
            return self.n_runs
        return 30 if self.method == "experiment" else 1

    def echo(self) -> dict:
        dataset_name = None
        if self.train_path:
            dataset_name = Path(self.train_path).stem
        return {
            "method": self.method,
            "dataset_name": dataset_name,
            "train": self.train_path,
            "tests": list(self.test_paths),
            "test_labels": list(self.test_label_paths),
            "schema": self.schema_path,
            "label_column": self.label_column,
            "learner": self.learner,
            "theta_auc": self.theta_auc,
            "x_pct": self.x_pct,
            "theta_imp": self.theta_imp,
            "min_features": self.min_features,
            "max_iter": self.max_iter,
            "folds": self.folds,
            "target_frac": self.target_frac,
            "caliper_mult": self.caliper_mult,
            "smd_limit": self.smd_limit,
            "p_max": self.p_max,
            "n_runs": self.runs(),
            "seed": self.seed,
        }


def build_learner(kind: str) -> LearnerParams:
    if kind == "gbdt":
        return GBDTParams()
    if kind == "rf":
        return RFParams()
    if kind == "dt":
        return DTParams()
    raise ConfigError(f"unknown learner {kind!r} (expected dt, rf or gbdt)")


def adversarial_policy(learner: LearnerParams):
    """Boosted trees route missing values natively; dt/rf need zeros."""
    return KEEP_MISSING if isinstance(learner, GBDTParams) else IMPUTE_ZERO


def _read_label_file(path) -> np.ndarray:
    """Labels-only file: one 0/1 per line, no header."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataError(f"cannot read label file {path}: {exc}") from exc
    try:
        values = [int(float(ln)) for ln in lines]
    except ValueError as exc:
        raise DataError(f"label file {path}: {exc}") from exc
    arr = np.asarray(values, dtype=np.int8)
    if not np.isin(arr, (0, 1)).all():
        raise DataError(f"label file {path} has non-binary values")
    return arr


@dataclass
class LoadedData:
    train: Dataset               # label extracted when a label column is known
    tests: list[Dataset]         # labels stripped
    test_labels: list[np.ndarray | None]


def _peek_header(path) -> list[str]:
    import csv

    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return next(csv.reader(fh), [])
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _schema_for(path, schema):
    """Restrict a schema to the columns actually present in the file, so
    one schema can describe files with and without the label column."""
    if schema is None:
        return None
    header = set(_peek_header(path))
    return {k: v for k, v in schema.items() if k in header}


def load_inputs(cfg: RunConfig) -> LoadedData:
    if not cfg.train_path:
        raise ConfigError(f"method {cfg.method!r} needs --train")
    if not cfg.test_paths:
        raise ConfigError(f"method {cfg.method!r} needs at least one --test")
    schema = load_schema(cfg.schema_path) if cfg.schema_path else None

    train = load_csv(cfg.train_path, schema=_schema_for(cfg.train_path, schema))
    if cfg.label_column:
        train = extract_label(train, cfg.label_column)

    if cfg.test_label_paths and len(cfg.test_label_paths) != len(cfg.test_paths):
        raise ConfigError("--test-labels must be given once per --test")

    tests, labels = [], []
    for i, path in enumerate(cfg.test_paths):
        ds = load_csv(path, schema=_schema_for(path, schema))
        y = None
        if cfg.label_column and cfg.label_column in ds.column_names:
            ds = extract_label(ds, cfg.label_column)
            y = ds.label
            ds = Dataset(name=ds.name, columns=ds.columns, data=ds.data,
                         n_rows=ds.n_rows, label=None)
        if cfg.test_label_paths:
            y = _read_label_file(cfg.test_label_paths[i])
            if len(y) != ds.n_rows:
                raise DataError(
                    f"label file {cfg.test_label_paths[i]} has {len(y)} rows, "
                    f"test file has {ds.n_rows}"
                )
        tests.append(ds)
        labels.append(y)
    return LoadedData(train=train, tests=tests, test_labels=labels)


def _encode_sides(train: Dataset, tests: list[Dataset], policy):
    train_em = encode(train, policy)
    test_ems = [align_codebooks(train_em, t, policy) for t in tests]
    concat = test_ems[0] if len(test_ems) == 1 else vstack_encoded(test_ems)
    return train_em, test_ems, concat


def _trace_dict(trace: SelectionTrace) -> dict:
    return {
        "iterations": [
            {"auc": it.auc, "removed": [[f, s] for f, s in it.removed]}
            for it in trace.iterations
        ],
        "final_features": list(trace.final_features),
        "removed_features": trace.removed_features,
        "final_auc": trace.final_auc,
        "unresolved": trace.unresolved,
    }


def _match_dict(match: MatchResult) -> dict:
    return {
        "n_pairs": len(match.pairs),
        "caliper": match.caliper,
        "fallback_used": match.fallback_used,
        "degenerate_propensity": match.degenerate_propensity,
        "n_val": int(len(match.val_indices)),
        "n_remaining": int(len(match.remaining_train_indices)),
        "balance": [
            {"feature": row.feature, "smd": row.smd, "balanced": row.balanced}
            for row in match.balance
        ],
    }


def _aggregate(values: list[float]) -> tuple[float, float | None]:
    if len(values) >= 2:
        return mean_ci(values)
    return float(values[0]), None


def run(cfg: RunConfig) -> Report:
    """Execute the configured method and assemble the report."""
    started = time.perf_counter()
    results: dict = {}
    if cfg.method == "synth":
        results["synth"] = _run_synth(cfg)
    elif cfg.method in ("detect", "features", "validation", "ipw", "experiment"):
        data = load_inputs(cfg)
        runner = {
            "detect": _run_detect,
            "features": _run_features,
            "validation": _run_validation,
            "ipw": _run_ipw,
            "experiment": _run_experiment,
        }[cfg.method]
        results[cfg.method] = runner(cfg, data)
    else:
        raise ConfigError(f"unknown method {cfg.method!r}")

    report = Report(
        config=cfg.echo(),
        results=results,
        timings={"wall_seconds": time.perf_counter() - started},
    )
    if cfg.out_path:
        save_report(report, cfg.out_path)
    return report


def _run_detect(cfg: RunConfig, data: LoadedData) -> dict:
    learner = build_learner(cfg.learner)
    train_em, _, concat = _encode_sides(data.train, data.tests,
                                        adversarial_policy(learner))
    runs = []
    for i in range(cfg.runs()):
        verdict = detect_drift(train_em, concat, learner,
                               theta_auc=cfg.theta_auc, seed=cfg.seed + i)
        runs.append({
            "seed": cfg.seed + i,
            "auc": verdict.auc,
            "drifted": verdict.drifted,
            "top_features": [[f, s] for f, s in verdict.top_features[:10]],
        })
    mean, ci = _aggregate([r["auc"] for r in runs])
    return {
        "runs": runs,
        "auc_mean": mean,
        "auc_ci": ci,
        "theta_auc": cfg.theta_auc,
        "drifted": mean > cfg.theta_auc,
    }


def _fs_config(cfg: RunConfig) -> FeatureSelectionConfig:
    return FeatureSelectionConfig(
        theta_auc=cfg.theta_auc,
        x_pct=cfg.x_pct,
        theta_imp=cfg.theta_imp,
        max_iter=cfg.max_iter,
        min_features=cfg.min_features,
    )


def _run_features(cfg: RunConfig, data: LoadedData) -> dict:
    learner = build_learner(cfg.learner)
    train_em, _, concat = _encode_sides(data.train, data.tests,
                                        adversarial_policy(learner))
    runs = []
    for i in range(cfg.runs()):
        trace = auto_feature_selection(train_em, concat, learner,
                                       _fs_config(cfg), seed=cfg.seed + i)
        runs.append({"seed": cfg.seed + i, **_trace_dict(trace)})
    mean, ci = _aggregate([r["final_auc"] for r in runs])
    return {"runs": runs, "final_auc_mean": mean, "final_auc_ci": ci}


def _run_validation(cfg: RunConfig, data: LoadedData) -> dict:
    learner = build_learner(cfg.learner)
    train_em, _, concat = _encode_sides(data.train, data.tests,
                                        adversarial_policy(learner))
    runs = []
    for i in range(cfg.runs()):
        seeds = spawn_seeds(cfg.seed + i, 2)
        ps = propensity_oof(train_em, concat, learner, k=cfg.folds,
                            seed=seeds[0])
        match = psm_validation_select(train_em, concat, ps,
                                      target_frac=cfg.target_frac,
                                      caliper_mult=cfg.caliper_mult,
                                      smd_limit=cfg.smd_limit, seed=seeds[1])
        runs.append({"seed": cfg.seed + i, "cv_auc": ps.cv_auc,
                     **_match_dict(match)})
    mean, ci = _aggregate([r["cv_auc"] for r in runs])
    return {"runs": runs, "cv_auc_mean": mean, "cv_auc_ci": ci}


def _run_ipw(cfg: RunConfig, data: LoadedData) -> dict:
    learner = build_learner(cfg.learner)
    train_em, _, concat = _encode_sides(data.train, data.tests,
                                        adversarial_policy(learner))
    runs = []
    for i in range(cfg.runs()):
        seeds = spawn_seeds(cfg.seed + i, 1)
        ps = propensity_oof(train_em, concat, learner, k=cfg.folds,
                            seed=seeds[0])
        wv = ipw_weights(ps, p_max=cfg.p_max)
        runs.append({
            "seed": cfg.seed + i,
            "cv_auc": ps.cv_auc,
            "weight_min": float(wv.weights.min()),
            "weight_max": float(wv.weights.max()),
            "effective_sample_size": wv.effective_sample_size,
            "low_overlap": wv.low_overlap,
        })
    mean, ci = _aggregate([r["effective_sample_size"] for r in runs])
    return {"runs": runs, "ess_mean": mean, "ess_ci": ci}


def _experiment_once(cfg: RunConfig, adv_learner, train_adv, concat_adv,
                     train_out, tests_out, y_train, test_labels, seed) -> dict:
    seeds = spawn_seeds(seed, 7)
    gbdt = GBDTParams()

    def snapshot_aucs(model, feature_subset=None):
        out = []
        for X, y in zip(tests_out, test_labels):
            Xs = X if feature_subset is None else X.select_features(feature_subset)
            out.append(float(auc(predict_proba(model.model, Xs), y)))
        return out

    per_method: dict[str, dict] = {}

    baseline = train_outcome(train_out, y_train, "baseline", gbdt, seed=seeds[0])
    per_method["baseline"] = {"snapshot_aucs": snapshot_aucs(baseline)}

    trace = auto_feature_selection(train_adv, concat_adv, adv_learner,
                                   _fs_config(cfg), seed=seeds[1])
    fs_model = train_outcome(train_out, y_train, "feature_selection", gbdt,
                             seed=seeds[2], trace=trace)
    per_method["feature_selection"] = {
        "snapshot_aucs": snapshot_aucs(fs_model, trace.final_features),
        "trace": _trace_dict(trace),
    }

    ps = propensity_oof(train_adv, concat_adv, adv_learner, k=cfg.folds,
                        seed=seeds[3])
    match = psm_validation_select(train_adv, concat_adv, ps,
                                  target_frac=cfg.target_frac,
                                  caliper_mult=cfg.caliper_mult,
                                  smd_limit=cfg.smd_limit, seed=seeds[4])
    vs_model = train_outcome(train_out, y_train, "validation_selection", gbdt,
                             seed=seeds[5], match=match)
    per_method["validation_selection"] = {
        "snapshot_aucs": snapshot_aucs(vs_model),
        "match": _match_dict(match),
    }

    wv = ipw_weights(ps, p_max=cfg.p_max)
    ipw_model = train_outcome(train_out, y_train, "ipw", gbdt,
                              seed=seeds[6], weights=wv)
    per_method["ipw"] = {
        "snapshot_aucs": snapshot_aucs(ipw_model),
        "effective_sample_size": wv.effective_sample_size,
        "cv_auc": ps.cv_auc,
    }
    return per_method


def _run_experiment(cfg: RunConfig, data: LoadedData) -> dict:
    if data.train.label is None:
        raise ConfigError("experiment needs --label naming the outcome column")
    if any(y is None for y in data.test_labels):
        raise ConfigError(
            "experiment needs labels for every test snapshot (a label "
            "column in the test CSV or --test-labels files)"
        )
    adv_learner = build_learner(cfg.learner)
    train_adv, _, concat_adv = _encode_sides(data.train, data.tests,
                                             adversarial_policy(adv_learner))
    train_out, tests_out, _ = _encode_sides(data.train, data.tests, KEEP_MISSING)
    y_train = data.train.label

    n_runs = cfg.runs()
    all_runs: list[dict] = []
    for i in range(n_runs):
        all_runs.append(
            _experiment_once(cfg, adv_learner, train_adv, concat_adv,
                             train_out, tests_out, y_train, data.test_labels,
                             seed=cfg.seed + i)
        )

    verdict = detect_drift(train_adv, concat_adv, adv_learner,
                           theta_auc=cfg.theta_auc, seed=cfg.seed)

    n_snapshots = len(data.tests)
    per_method: dict[str, dict] = {}
    for method in EXPERIMENT_METHODS:
        runs_aucs = [r[method]["snapshot_aucs"] for r in all_runs]
        snap_stats = []
        for s in range(n_snapshots):
            mean, ci = _aggregate([run[s] for run in runs_aucs])
            snap_stats.append({"mean": mean, "ci": ci})
        avg_per_run = [float(np.mean(run)) for run in runs_aucs]
        avg_mean, avg_ci = _aggregate(avg_per_run)
        per_method[method] = {
            "runs": runs_aucs,
            "per_snapshot": snap_stats,
            "avg": {"mean": avg_mean, "ci": avg_ci},
        }
    per_method["feature_selection"]["last_trace"] = \
        all_runs[-1]["feature_selection"]["trace"]
    per_method["validation_selection"]["last_match"] = \
        all_runs[-1]["validation_selection"]["match"]

    return {
        "adversarial": {"auc": verdict.auc, "drifted": verdict.drifted,
                        "top_features": [[f, s] for f, s in verdict.top_features[:10]]},
        "per_method": per_method,
        "n_runs": n_runs,
        "n_snapshots": n_snapshots,
    }


def _run_synth(cfg: RunConfig) -> dict:
    if not cfg.synth_spec_path:
        raise ConfigError("synth needs --spec pointing at a generator spec file")
    import json

    try:
        with open(cfg.synth_spec_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if cfg.synth_seed is not None:
            doc["seed"] = cfg.synth_seed
        spec = DriftSpec.from_dict(doc)
    except OSError as exc:
        raise DataError(f"cannot read spec {cfg.synth_spec_path}: {exc}") from exc
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"malformed generator spec: {exc}") from exc

    out_dir = Path(cfg.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    synth = generate(spec)

    train_path = out_dir / "train.csv"
    test_path = out_dir / "test.csv"
    labels_path = out_dir / "test_labels.csv"
    schema_path = out_dir / "schema.json"
    truth_path = out_dir / "truth.json"

    write_csv(synth.train, train_path, label_column="label")
    write_csv(synth.test, test_path)
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(str(int(v)) for v in synth.test_labels))
        fh.write("\n")
    schema = {c.name: c.kind.value for c in synth.train.columns}
    schema["label"] = "numerical"
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2)
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump({"drifted": sorted(synth.ground_truth),
                   "spec": spec.to_dict()}, fh, indent=2)

    return {
        "spec": spec.to_dict(),
        "drifted": sorted(synth.ground_truth),
        "files": {
            "train": str(train_path),
            "test": str(test_path),
            "test_labels": str(labels_path),
            "schema": str(schema_path),
            "truth": str(truth_path),
        },
    }
