"""Command-line interface.

Verbs: detect, features, validation, ipw, experiment, synth, compare.
Flags mirror RunConfig; a --config JSON file overrides flags. Relative
output paths resolve under $DRIFTADAPT_OUT_DIR when that is set.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, DataError, DriftAdaptError
from .harness import RunConfig, run
from .reports import Report, compare, format_comparison, load_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

OUT_DIR_ENV = "DRIFTADAPT_OUT_DIR"


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train", help="training CSV (header row required)")
    p.add_argument("--test", action="append", default=[],
                   help="test CSV; repeat for multiple snapshots")
    p.add_argument("--test-labels", action="append", default=[],
                   help="labels file for the matching --test (one 0/1 per line)")
    p.add_argument("--schema", help="JSON file mapping column name -> kind")
    p.add_argument("--label", help="outcome column name")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--learner", default="gbdt", choices=("dt", "rf", "gbdt"),
                   help="adversarial classifier (default gbdt)")
    p.add_argument("--theta-auc", type=float, default=0.6)
    p.add_argument("--runs", type=int, default=None,
                   help="repetitions (default 1; experiment defaults to 30)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report output path (JSON)")
    p.add_argument("--config", help="JSON config file; overrides flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftadapt",
        description="Detect train/test drift with an adversarial classifier "
                    "and adapt outcome-model training to it.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("detect", help="adversarial drift verdict")
    _add_data_args(p)
    _add_common_args(p)

    p = sub.add_parser("features", help="automated adversarial feature selection")
    _add_data_args(p)
    p.add_argument("--x-pct", type=float, default=0.10)
    p.add_argument("--theta-imp", type=float, default=0.1)
    p.add_argument("--min-features", type=int, default=2)
    p.add_argument("--max-iter", type=int, default=None)
    _add_common_args(p)

    p = sub.add_parser("validation", help="propensity-matched validation selection")
    _add_data_args(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--target-frac", type=float, default=0.2)
    p.add_argument("--caliper-mult", type=float, default=0.2)
    p.add_argument("--smd-limit", type=float, default=0.1)
    _add_common_args(p)

    p = sub.add_parser("ipw", help="inverse propensity weights for the training rows")
    _add_data_args(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--p-max", type=float, default=0.95)
    _add_common_args(p)

    p = sub.add_parser("experiment",
                       help="baseline + all three adaptations, repeated runs")
    _add_data_args(p)
    p.add_argument("--x-pct", type=float, default=0.10)
    p.add_argument("--theta-imp", type=float, default=0.1)
    p.add_argument("--min-features", type=int, default=2)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--target-frac", type=float, default=0.2)
    p.add_argument("--caliper-mult", type=float, default=0.2)
    p.add_argument("--smd-limit", type=float, default=0.1)
    p.add_argument("--p-max", type=float, default=0.95)
    _add_common_args(p)

    p = sub.add_parser("synth", help="generate a synthetic drift dataset")
    p.add_argument("--spec", required=True, help="generator spec JSON")
    p.add_argument("--out-dir", default=None,
                   help="directory for the generated files (default: cwd)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the spec's seed")
    p.add_argument("--out", help="report output path (JSON)")
    p.add_argument("--config", help="JSON config file; overrides flags")

    p = sub.add_parser("compare", help="align reports into a method x dataset table")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--out", help="comparison output path (JSON)")

    return parser


def _resolve_out(path: str | None) -> str | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        Path(base).mkdir(parents=True, exist_ok=True)
        return str(Path(base) / p)
    return str(p)


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        method=args.verb,
        train_path=getattr(args, "train", None),
        test_paths=list(getattr(args, "test", []) or []),
        test_label_paths=list(getattr(args, "test_labels", []) or []),
        schema_path=getattr(args, "schema", None),
        label_column=getattr(args, "label", None),
        learner=getattr(args, "learner", "gbdt"),
        theta_auc=getattr(args, "theta_auc", 0.6),
        x_pct=getattr(args, "x_pct", 0.10),
        theta_imp=getattr(args, "theta_imp", 0.1),
        min_features=getattr(args, "min_features", 2),
        max_iter=getattr(args, "max_iter", None),
        folds=getattr(args, "folds", 5),
        target_frac=getattr(args, "target_frac", 0.2),
        caliper_mult=getattr(args, "caliper_mult", 0.2),
        smd_limit=getattr(args, "smd_limit", 0.1),
        p_max=getattr(args, "p_max", 0.95),
        n_runs=getattr(args, "runs", None),
        seed=getattr(args, "seed", None) or 0,
        out_path=getattr(args, "out", None),
        synth_spec_path=getattr(args, "spec", None),
        synth_seed=getattr(args, "seed", None) if args.verb == "synth" else None,
        out_dir=getattr(args, "out_dir", None),
    )
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                overrides = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file {config_path}: {exc}") from exc
        valid = set(RunConfig.__dataclass_fields__)
        for key, value in overrides.items():
            if key not in valid:
                raise ConfigError(f"config file sets unknown field {key!r}")
            setattr(cfg, key, value)
    cfg.out_path = _resolve_out(cfg.out_path)
    if cfg.out_dir is None and cfg.method == "synth":
        cfg.out_dir = os.environ.get(OUT_DIR_ENV, ".")
    return cfg


def _pct(x: float | None) -> str:
    return "-" if x is None else f"{100 * x:.2f}"


def _summarize(report: Report) -> str:
    lines = []
    res = report.results
    if "detect" in res:
        d = res["detect"]
        verdict = "drift detected" if d["drifted"] else "no drift detected"
        ci = f" +/- {d['auc_ci']:.4f}" if d.get("auc_ci") is not None else ""
        lines.append(
            f"adversarial AUC {d['auc_mean']:.4f}{ci} "
            f"(threshold {d['theta_auc']:.2f}): {verdict}"
        )
        top = res["detect"]["runs"][0]["top_features"][:5]
        if top:
            lines.append("top features by gain share: "
                         + ", ".join(f"{f}={s:.3f}" for f, s in top))
    if "features" in res:
        f = res["features"]
        last = f["runs"][-1]
        lines.append(
            f"selection finished at AUC {last['final_auc']:.4f} "
            f"({len(last['removed_features'])} removed, "
            f"{len(last['final_features'])} kept"
            + (", UNRESOLVED drift remains)" if last["unresolved"] else ")")
        )
        for it in last["iterations"]:
            removed = ", ".join(f"{name}({share:.3f})" for name, share in it["removed"])
            lines.append(f"  pass at AUC {it['auc']:.4f}: removed {removed}")
    if "validation" in res:
        v = res["validation"]["runs"][-1]
        n_bal = sum(1 for row in v["balance"] if row["balanced"])
        lines.append(
            f"matched {v['n_pairs']} pairs (caliper {v['caliper']:.4f}); "
            f"{n_bal}/{len(v['balance'])} covariates balanced; "
            f"validation rows: {v['n_val']}"
            + (" [fallback: highest propensity]" if v["fallback_used"] else "")
        )
    if "ipw" in res:
        w = res["ipw"]["runs"][-1]
        lines.append(
            f"weights in [{w['weight_min']:.4f}, {w['weight_max']:.4f}], "
            f"effective sample size {w['effective_sample_size']:.1f}"
            + (" [low overlap warning]" if w["low_overlap"] else "")
        )
    if "experiment" in res:
        e = res["experiment"]
        lines.append(
            f"adversarial AUC {e['adversarial']['auc']:.4f} over "
            f"{e['n_snapshots']} snapshot(s), {e['n_runs']} run(s); "
            f"average test AUC (%):"
        )
        for method, stats in e["per_method"].items():
            avg = stats["avg"]
            ci = f" +/- {_pct(avg['ci'])}" if avg["ci"] is not None else ""
            lines.append(f"  {method:22s} {_pct(avg['mean'])}{ci}")
    if "synth" in res:
        s = res["synth"]
        lines.append(f"generated dataset with drifted features: {s['drifted']}")
        for kind, path in s["files"].items():
            lines.append(f"  {kind}: {path}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "compare":
            reports = [load_report(p) for p in args.reports]
            table = compare(reports)
            print(format_comparison(table))
            out = _resolve_out(args.out)
            if out:
                with open(out, "w", encoding="utf-8") as fh:
                    json.dump(table, fh, indent=2)
                print(f"comparison written to {out}")
            return EXIT_OK

        cfg = _config_from_args(args)
        report = run(cfg)
        print(_summarize(report))
        if cfg.out_path:
            print(f"report written to {cfg.out_path}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DriftAdaptError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
