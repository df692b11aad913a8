"""Classification metrics, ROC/AUROC, cross-validation driver, bootstrap CIs.

A metric whose denominator is zero is reported as ``None`` (JSON null), never
as 0.  Pooled out-of-fold metrics are the primary cross-validation readout;
per-fold means are reported alongside.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledDataset
from .errors import DataError, SingleClass
from .preprocess import FoldPlan, stratified_kfold
from .util import child_seed

METRIC_KEYS = ("accuracy", "sensitivity", "specificity", "ppv", "npv", "f1", "auroc")


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_counts(scores, labels, threshold: float = 0.5) -> ConfusionCounts:
    """Counts at a fixed threshold; a row is called positive when
    ``score >= threshold``."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape[0] != labels.shape[0]:
        raise DataError("scores and labels differ in length")
    if scores.shape[0] == 0:
        raise DataError("no rows to score")
    pred = scores >= threshold
    pos = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
        threshold=float(threshold),
    )


def _ratio(num: int, den: int):
    return None if den == 0 else num / den


def classification_metrics(counts: ConfusionCounts) -> dict:
    sens = _ratio(counts.tp, counts.tp + counts.fn)
    spec = _ratio(counts.tn, counts.tn + counts.fp)
    ppv = _ratio(counts.tp, counts.tp + counts.fp)
    npv = _ratio(counts.tn, counts.tn + counts.fn)
    if ppv is None or sens is None or (ppv + sens) == 0:
        f1 = None
    else:
        f1 = 2 * ppv * sens / (ppv + sens)
    return {
        "accuracy": _ratio(counts.tp + counts.tn, counts.n),
        "sensitivity": sens,
        "specificity": spec,
        "ppv": ppv,
        "npv": npv,
        "f1": f1,
    }


# --- ROC -----------------------------------------------------------------------

def roc_curve(scores, labels) -> list:
    """(fpr, tpr, threshold) points from (0,0) to (1,1), one step per unique
    score, descending.  Tied scores collapse into a single point."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos_total = int(np.sum(labels == 1))
    neg_total = int(np.sum(labels != 1))
    if pos_total == 0 or neg_total == 0:
        raise SingleClass()
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    is_pos = (labels[order] == 1)
    points = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    i = 0
    n = s.shape[0]
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        tp += int(np.sum(is_pos[i:j]))
        fp += (j - i) - int(np.sum(is_pos[i:j]))
        points.append((fp / neg_total, tp / pos_total, float(s[i])))
        i = j
    return points


def auroc_from_points(points) -> float:
    area = 0.0
    for (x0, y0, _), (x1, y1, _) in zip(points[:-1], points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return float(area)


def auroc(scores, labels) -> float:
    """Trapezoidal area under the tie-collapsed ROC polyline."""
    return auroc_from_points(roc_curve(scores, labels))


# --- cross-validation -------------------------------------------------------------

def row_identity(participant_id: str, row: np.ndarray) -> str:
    digest = hashlib.sha256(np.ascontiguousarray(row, dtype=float)
                            .tobytes()).hexdigest()[:12]
    return f"{participant_id}|{digest}"


@dataclass
class CVResult:
    fold_plan: FoldPlan
    fold_metrics: list
    pooled: dict
    per_fold_mean: dict
    oof_scores: np.ndarray
    roc_points: list
    audit: list

    def report_dict(self) -> dict:
        return {
            "pooled": dict(self.pooled),
            "per_fold_mean": dict(self.per_fold_mean),
            "fold_metrics": [dict(m) for m in self.fold_metrics],
            "folds": self.fold_plan.to_dict(),
        }


def _metrics_with_auroc(scores, labels, threshold) -> dict:
    out = classification_metrics(confusion_counts(scores, labels, threshold))
    out["auroc"] = auroc(scores, labels)
    return out


def run_cross_validation(ds: LabeledDataset, config, k: int | None = None,
                         seed: int = 0) -> CVResult:
    """Stratified k-fold evaluation of the full training pipeline.

    Every fold refits scaler, selection, oversampling, and ensemble on its
    training split only.  The audit log records row identities so that
    leakage (synthetic or scaler-fit rows inside an evaluation split) is
    checkable after the fact.
    """
    from .ensemble import ensemble_predict, train_pipeline  # deferred: cycle

    k = k or config.cv_folds
    plan = stratified_kfold(ds.y, k, seed=child_seed(seed, "folds"))
    n = ds.n_rows
    identities = [row_identity(ds.participant_ids[i], ds.X[i]) for i in range(n)]
    oof = np.empty(n)
    fold_metrics = []
    audit = []
    for fold in range(k):
        tr, ev = plan.fold_indices(fold)
        pipeline, train_audit = train_pipeline(
            ds.subset(tr), config, seed=child_seed(seed, "fold", fold))
        scores = ensemble_predict(pipeline, ds.X[ev], ds.feature_names)
        oof[ev] = scores
        fold_metrics.append(_metrics_with_auroc(scores, ds.y[ev],
                                                config.threshold))
        train_ids = [identities[i] for i in tr]
        audit.append({
            "fold": fold,
            "eval_ids": [identities[i] for i in ev],
            "train_ids": train_ids,
            "scaler_fit_ids": train_ids,
            "synthetic_ids": [f"synthetic|fold{fold}|{i}"
                              for i in range(train_audit["n_synthetic"])],
            "n_synthetic": train_audit["n_synthetic"],
        })

    pooled = _metrics_with_auroc(oof, ds.y, config.threshold)
    per_fold_mean = {}
    for key in METRIC_KEYS:
        vals = [m[key] for m in fold_metrics if m[key] is not None]
        per_fold_mean[key] = float(np.mean(vals)) if vals else None
    return CVResult(fold_plan=plan, fold_metrics=fold_metrics, pooled=pooled,
                    per_fold_mean=per_fold_mean, oof_scores=oof,
                    roc_points=roc_curve(oof, ds.y), audit=audit)


def verify_no_leakage(audit: list) -> bool:
    """True when no evaluation split shares a row with scaler-fit or
    synthetic sets."""
    for rec in audit:
        ev = set(rec["eval_ids"])
        if ev & set(rec["scaler_fit_ids"]):
            return False
        if ev & set(rec["synthetic_ids"]):
            return False
    return True


# --- bootstrap ---------------------------------------------------------------------

def percentile_interval(values, level: float = 0.95) -> tuple:
    """Percentile interval with linear interpolation between order statistics."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DataError("no values to summarize")
    alpha = (1.0 - level) / 2.0 * 100.0
    lo, hi = np.percentile(values, [alpha, 100.0 - alpha])
    return float(lo), float(hi)


@dataclass
class BootstrapSummary:
    n_seeds: int
    level: float
    metrics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"n_seeds": self.n_seeds, "level": self.level,
                "metrics": self.metrics}


def summarize_bootstrap(per_seed_metrics: list, level: float = 0.95) -> BootstrapSummary:
    """Aggregate per-seed metric dicts into mean, percentile CI, half-width."""
    if not per_seed_metrics:
        raise DataError("no per-seed metrics to summarize")
    out = BootstrapSummary(n_seeds=len(per_seed_metrics), level=level)
    keys = per_seed_metrics[0].keys()
    for key in keys:
        vals = [m[key] for m in per_seed_metrics if m.get(key) is not None]
        if not vals:
            out.metrics[key] = None
            continue
        lo, hi = percentile_interval(vals, level)
        out.metrics[key] = {
            "mean": float(np.mean(vals)),
            "ci_lo": lo,
            "ci_hi": hi,
            "half_width": (hi - lo) / 2.0,
            "n_defined": len(vals),
        }
    return out
