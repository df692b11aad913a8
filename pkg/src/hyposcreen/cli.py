"""Command-line entry points.

Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.  Every
failure writes a single-line JSON record to stderr so callers can parse it.
Worker-pool width is taken from the ``HYPOSCREEN_THREADS`` environment
variable; all outputs are byte-identical regardless of its value.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .dataset import CONTINUOUS_DEMOGRAPHICS, read_feature_table, write_feature_table
from .ensemble import ensemble_predict, load_ensemble, save_ensemble, train_pipeline
from .errors import DataError, HyposcreenError, MissingFeature, UsageError
from .evaluate import run_cross_validation, summarize_bootstrap
from .explain import pca_project, silhouette_score, tree_shap
from .featurize import feature_names as canonical_feature_names
from .ingest import EXPRESSIONS, parse_manifest
from .parallel import parallel_map
from .preprocess import apply_scaler
from .reports import (
    write_json,
    write_json_lines,
    write_leaderboard_csv,
    write_predictions_csv,
    write_projection_csv,
    write_roc_csv,
    write_roc_svg,
    write_shap_csv,
)
from .stats import build_bias_report
from .synth import generate_synthetic_dataset
from .util import child_seed

EXPRESSION_SUBSETS = (
    ("smile",), ("disgust",), ("surprise",),
    ("smile", "disgust"), ("smile", "surprise"), ("disgust", "surprise"),
    ("smile", "disgust", "surprise"),
)


def _emit_error(kind: str, message) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)},
                                sort_keys=True) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("UsageError", message)
        raise SystemExit(2)


# --- shared helpers --------------------------------------------------------------

def _load_dataset(path):
    return read_feature_table(path)


def _expression_columns(feature_cols) -> dict:
    """Map expression -> its columns, for tables with canonical names."""
    out = {}
    for expr in EXPRESSIONS:
        cols = [c for c in feature_cols if c.startswith(expr + "_")]
        if cols:
            out[expr] = cols
    return out


def _apply_expression_filter(ds, config: PipelineConfig):
    """Reduce a canonical table to the configured expressions; tables without
    canonical names pass through untouched."""
    by_expr = _expression_columns(ds.feature_names)
    if not by_expr:
        return ds
    wanted = canonical_feature_names(config.expressions)
    missing = [c for c in wanted if c not in ds.feature_names]
    if missing:
        raise DataError(f"table lacks expected feature columns {missing[:3]}...")
    return ds.column_subset(wanted)


def _read_predictions(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"predictions file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise DataError(f"no prediction rows in {path}")
    header = rows[0]
    try:
        pid_i = header.index("participant_id")
        score_i = header.index("score")
    except ValueError:
        raise DataError("predictions need participant_id and score columns") from None
    ids, scores = [], []
    for cells in rows[1:]:
        ids.append(cells[pid_i])
        scores.append(float(cells[score_i]))
    return ids, np.array(scores)


def _parse_float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"cannot parse numeric list {text!r}") from None


def _config_from(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    return cfg


def _seed_from(args, cfg: PipelineConfig) -> int:
    return cfg.seed if args.seed is None else args.seed


# --- subcommand handlers ------------------------------------------------------------

def _cmd_featurize(args) -> int:
    manifest = parse_manifest(args.manifest)
    expressions = args.expressions.split(",") if args.expressions else None
    ds = build_feature_table_cli(manifest, expressions, args.index_map,
                                 args.min_confidence)
    write_feature_table(ds, args.out)
    print(f"featurized {ds.n_rows} participants x {len(ds.feature_names)} features"
          f" -> {args.out}")
    return 0


def build_feature_table_cli(manifest, expressions, index_map, min_confidence):
    from .dataset import build_feature_table
    return build_feature_table(manifest, expressions=expressions,
                               index_map_path=index_map,
                               min_confidence=min_confidence)


def _cmd_train(args) -> int:
    cfg = _config_from(args)
    ds = _apply_expression_filter(_load_dataset(args.features), cfg)
    seed = _seed_from(args, cfg)
    ensemble, _ = train_pipeline(ds, cfg, seed=seed)
    save_ensemble(ensemble, args.out)
    print(f"trained stacking ensemble: kept {len(ensemble.base_models)} of "
          f"{len(cfg.ensemble.grid)} candidates, "
          f"{len(ensemble.feature_names)} features -> {args.out}")
    return 0


def _cmd_cv(args) -> int:
    cfg = _config_from(args)
    ds = _apply_expression_filter(_load_dataset(args.features), cfg)
    folds = args.folds or cfg.cv_folds
    n_seeds = args.seeds or cfg.bootstrap_seeds
    master = _seed_from(args, cfg)

    def one(s: int):
        return run_cross_validation(ds, cfg, k=folds,
                                    seed=child_seed(master, "bootstrap", s))

    results = parallel_map(one, range(n_seeds))
    summary = summarize_bootstrap([r.pooled for r in results])
    report = {
        "n_rows": ds.n_rows,
        "n_features": len(ds.feature_names),
        "folds": folds,
        "seeds": n_seeds,
        "master_seed": master,
        "config": cfg.to_dict(),
        "bootstrap": summary.to_dict(),
        "primary": results[0].report_dict(),
    }
    write_json(report, args.out)
    if args.roc_out:
        write_roc_csv(results[0].roc_points, args.roc_out)
    if args.roc_svg:
        write_roc_svg(results[0].roc_points, args.roc_svg)
    if args.audit_log:
        records = []
        for s, res in enumerate(results):
            for rec in res.audit:
                records.append({"seed_index": s, **rec})
        write_json_lines(records, args.audit_log)
    au = summary.metrics.get("auroc")
    if au:
        print(f"pooled AUROC {au['mean']:.4f} "
              f"[{au['ci_lo']:.4f}, {au['ci_hi']:.4f}] over {n_seeds} seeds")
    return 0


def _cmd_predict(args) -> int:
    ensemble = load_ensemble(args.model)
    ds = _load_dataset(args.features)
    scores = ensemble_predict(ensemble, ds.X, ds.feature_names)
    write_predictions_csv(ds.participant_ids, scores, args.out,
                          threshold=ensemble.threshold, labels=ds.y)
    print(f"scored {ds.n_rows} rows -> {args.out}")
    return 0


def _cmd_bias(args) -> int:
    ids, scores = _read_predictions(args.preds)
    ds = _load_dataset(args.features)
    index = {pid: i for i, pid in enumerate(ds.participant_ids)}
    rows = []
    for pid in ids:
        if pid not in index:
            raise DataError(f"participant {pid!r} missing from features table")
        rows.append(index[pid])
    labels = ds.y[rows]
    demographics = {k: [v[i] for i in rows] for k, v in ds.demographics.items()}
    if args.group in CONTINUOUS_DEMOGRAPHICS and not args.bins:
        raise UsageError(f"column {args.group!r} is continuous; pass --bins")
    bins = _parse_float_list(args.bins) if args.bins else None
    report = build_bias_report(labels, scores, demographics, args.group,
                               threshold=args.threshold, bin_edges=bins,
                               seed=args.seed or 0)
    write_json(report.to_dict(), args.out)
    flagged = sum(1 for c in report.comparisons
                  if c["result"].get("p_value") is not None
                  and c["result"]["p_value"] < 0.05)
    print(f"bias report for {args.group!r}: {len(report.groups)} groups, "
          f"{len(report.comparisons)} comparisons, {flagged} with p < 0.05 "
          f"-> {args.out}")
    return 0


def _cmd_explain(args) -> int:
    ensemble = load_ensemble(args.model)
    ds = _load_dataset(args.features)
    for nm in ensemble.feature_names:
        if nm not in ds.feature_names:
            raise MissingFeature(nm)
    cols = [ds.feature_names.index(nm) for nm in ensemble.feature_names]
    raw = ds.X[:, cols]
    scaled = apply_scaler(ensemble.scaler, raw)
    model = ensemble.base_models[0]  # strongest candidate by inner-CV AUROC
    n_rows = ds.n_rows if args.max_rows is None else min(args.max_rows, ds.n_rows)
    rows = []
    for i in range(n_rows):
        attribution = tree_shap(model, scaled[i])
        for j, nm in enumerate(ensemble.feature_names):
            rows.append((ds.participant_ids[i], nm,
                         attribution.phi[j], raw[i, j]))
    write_shap_csv(rows, args.out)
    print(f"explained {n_rows} rows x {len(ensemble.feature_names)} features "
          f"-> {args.out}")
    return 0


def _cmd_project(args) -> int:
    ds = _load_dataset(args.features)
    proj = pca_project(ds.X, n_components=2)
    write_projection_csv(ds.participant_ids, proj.coords, ds.y, args.out)

    def sil(matrix) -> str:
        try:
            coords = pca_project(matrix, n_components=2).coords
            return f"{silhouette_score(coords, ds.y):.4f}"
        except HyposcreenError as exc:
            return f"undefined ({type(exc).__name__})"

    print(f"silhouette all: {sil(ds.X)}")
    for expr, cols in _expression_columns(ds.feature_names).items():
        idx = [ds.feature_names.index(c) for c in cols]
        print(f"silhouette {expr}: {sil(ds.X[:, idx])}")
    print(f"explained variance: "
          f"{', '.join(f'{v:.4f}' for v in proj.explained)} -> {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    ds = generate_synthetic_dataset(
        n_per_class=args.n, delta=args.delta, dims=args.dims,
        informative_dims=args.informative, seed=args.seed or 0,
        subgroup_column=args.subgroup_column,
        subgroup_value=args.subgroup_value,
        signal_scale=args.signal_scale)
    write_feature_table(ds, args.out)
    print(f"simulated {ds.n_rows} rows x {args.dims} features -> {args.out}")
    return 0


def _config_id(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:10]


def _cmd_sweep(args) -> int:
    base = _config_from(args)
    if args.preset == "expressions":
        overrides = [{"expressions": list(sub)} for sub in EXPRESSION_SUBSETS]
    elif args.grid:
        doc = json.loads(Path(args.grid).read_text())
        overrides = doc["configs"] if isinstance(doc, dict) else doc
        if not isinstance(overrides, list):
            raise DataError("grid must be a list of config overrides")
    else:
        raise UsageError("sweep needs --grid or --preset")
    ds_full = _load_dataset(args.features)
    master = _seed_from(args, base)

    entries = []
    for over in overrides:
        merged = base.to_dict()
        merged.update(over)
        cfg = PipelineConfig.from_dict(merged)
        ds = _apply_expression_filter(ds_full, cfg)
        folds = args.folds or cfg.cv_folds
        n_seeds = args.seeds or cfg.bootstrap_seeds
        results = [run_cross_validation(ds, cfg, k=folds,
                                        seed=child_seed(master, "bootstrap", s))
                   for s in range(n_seeds)]
        summary = summarize_bootstrap([r.pooled for r in results])
        au = summary.metrics.get("auroc") or {}
        acc = summary.metrics.get("accuracy") or {}
        entries.append({
            "config_id": _config_id(cfg.to_dict()),
            "expressions": "+".join(cfg.expressions),
            "scaler": cfg.scaler,
            "selection": cfg.selection.method,
            "auroc_mean": au.get("mean"),
            "auroc_lo": au.get("ci_lo"),
            "auroc_hi": au.get("ci_hi"),
            "accuracy_mean": acc.get("mean"),
            "folds": folds,
            "seeds": n_seeds,
        })
    entries.sort(key=lambda e: (-(e["auroc_mean"] or 0.0), e["config_id"]))
    columns = ["config_id", "expressions", "scaler", "selection", "auroc_mean",
               "auroc_lo", "auroc_hi", "accuracy_mean", "folds", "seeds"]
    write_leaderboard_csv(entries, args.out, columns)
    if entries:
        best = entries[0]
        print(f"best: {best['expressions']} (auroc {best['auroc_mean']:.4f}) "
              f"-> {args.out}")
    return 0


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyposcreen",
                description="Facial-expression screening pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("featurize", help="manifest -> feature table csv")
    f.add_argument("--manifest", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--index-map", default=None,
                   help="landmark index map JSON (default: packaged map)")
    f.add_argument("--min-confidence", type=float, default=None,
                   help="drop frames below this confidence")
    f.add_argument("--expressions", default=None,
                   help="comma-separated subset, e.g. smile,disgust")
    f.set_defaults(func=_cmd_featurize)

    t = sub.add_parser("train", help="fit the stacking ensemble")
    t.add_argument("--features", required=True)
    t.add_argument("--config", default=None)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=None)
    t.set_defaults(func=_cmd_train)

    c = sub.add_parser("cv", help="seeded stratified cross-validation")
    c.add_argument("--features", required=True)
    c.add_argument("--config", default=None)
    c.add_argument("--folds", type=int, default=None)
    c.add_argument("--seeds", type=int, default=None,
                   help="bootstrap repetitions of the full CV")
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--out", required=True)
    c.add_argument("--roc-out", default=None, help="ROC csv path")
    c.add_argument("--roc-svg", default=None, help="ROC svg path")
    c.add_argument("--audit-log", default=None, help="JSON-lines audit path")
    c.set_defaults(func=_cmd_cv)

    pr = sub.add_parser("predict", help="score a feature table")
    pr.add_argument("--model", required=True)
    pr.add_argument("--features", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=_cmd_predict)

    b = sub.add_parser("bias", help="subgroup error-rate report")
    b.add_argument("--preds", required=True)
    b.add_argument("--features", required=True)
    b.add_argument("--group", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--bins", default=None,
                   help="comma-separated edges for continuous columns")
    b.add_argument("--threshold", type=float, default=0.5)
    b.add_argument("--seed", type=int, default=None)
    b.set_defaults(func=_cmd_bias)

    e = sub.add_parser("explain", help="per-row SHAP attributions")
    e.add_argument("--model", required=True)
    e.add_argument("--features", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--max-rows", type=int, default=None)
    e.set_defaults(func=_cmd_explain)

    pj = sub.add_parser("project", help="2-component PCA embedding")
    pj.add_argument("--features", required=True)
    pj.add_argument("--out", required=True)
    pj.set_defaults(func=_cmd_project)

    s = sub.add_parser("simulate", help="synthetic labeled feature table")
    s.add_argument("--n", type=int, required=True, help="rows per class")
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--dims", type=int, default=10)
    s.add_argument("--informative", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.add_argument("--subgroup-column", default=None)
    s.add_argument("--subgroup-value", default=None)
    s.add_argument("--signal-scale", type=float, default=1.0)
    s.set_defaults(func=_cmd_simulate)

    w = sub.add_parser("sweep", help="leaderboard over config overrides")
    w.add_argument("--features", required=True)
    w.add_argument("--config", default=None)
    w.add_argument("--grid", default=None, help="JSON list of overrides")
    w.add_argument("--preset", choices=["expressions"], default=None)
    w.add_argument("--folds", type=int, default=None)
    w.add_argument("--seeds", type=int, default=None)
    w.add_argument("--seed", type=int, default=None)
    w.add_argument("--out", required=True)
    w.set_defaults(func=_cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        _emit_error("UsageError", exc)
        return 2
    except DataError as exc:
        _emit_error(type(exc).__name__, exc)
        return 3
    except HyposcreenError as exc:
        _emit_error(type(exc).__name__, exc)
        return 4
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        _emit_error("InternalError", f"{type(exc).__name__}: {exc}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
