"""Labeled feature tables: in-memory container and csv round-trip."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    EmptyFile,
    MissingColumn,
    MissingFile,
    NonNumericCell,
)
from .featurize import featurize_recording, load_index_map
from .ingest import Manifest, load_recording

META_COLUMNS = ("participant_id", "label", "cohort", "sex", "age",
                "ethnicity", "disease_duration")
DEMOGRAPHIC_COLUMNS = ("cohort", "sex", "age", "ethnicity", "disease_duration")
CONTINUOUS_DEMOGRAPHICS = ("age", "disease_duration")


@dataclass(eq=False)
class LabeledDataset:
    """One row per participant: features, binary label, demographics."""

    feature_names: list[str]
    X: np.ndarray  # (n, d) float
    y: np.ndarray  # (n,) int, 1 = case
    participant_ids: list[str]
    demographics: dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise DataError("feature matrix must be 2-D")
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("feature matrix and labels disagree on row count")
        if self.X.shape[1] != len(self.feature_names):
            raise DataError("feature matrix and names disagree on column count")
        for col in DEMOGRAPHIC_COLUMNS:
            self.demographics.setdefault(col, [None] * len(self.y))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def subset(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows)
        return LabeledDataset(
            feature_names=list(self.feature_names),
            X=self.X[rows],
            y=self.y[rows],
            participant_ids=[self.participant_ids[i] for i in rows],
            demographics={k: [v[i] for i in rows]
                          for k, v in self.demographics.items()},
        )

    def column_subset(self, names) -> "LabeledDataset":
        idx = [self.feature_names.index(n) for n in names]
        return LabeledDataset(
            feature_names=list(names),
            X=self.X[:, idx],
            y=self.y,
            participant_ids=list(self.participant_ids),
            demographics={k: list(v) for k, v in self.demographics.items()},
        )


def build_feature_table(manifest: Manifest, expressions=None,
                        index_map_path=None,
                        min_confidence: float | None = None) -> LabeledDataset:
    """Featurize every participant in the manifest, in manifest order."""
    index_map = load_index_map(index_map_path)
    by_pid = manifest.by_participant()
    order = []
    for e in manifest.entries:
        if e.participant_id not in order:
            order.append(e.participant_id)

    names = None
    rows, labels, pids = [], [], []
    demo = {k: [] for k in DEMOGRAPHIC_COLUMNS}
    for pid in order:
        entries = by_pid[pid]
        series = {}
        for expr, entry in entries.items():
            series[expr] = load_recording(entry, manifest.base_dir,
                                          min_confidence=min_confidence)
        vec = featurize_recording(series, index_map, expressions=expressions)
        if names is None:
            names = list(vec.values)
        rows.append([vec.values[n] for n in names])
        first = entries[next(iter(entries))]
        labs = {e.label for e in entries.values()}
        if len(labs) != 1:
            raise DataError(f"participant {pid!r} has conflicting labels")
        labels.append(first.label)
        pids.append(pid)
        for col in DEMOGRAPHIC_COLUMNS:
            demo[col].append(getattr(first, col))
    if not rows:
        raise DataError("manifest contains no participants")
    return LabeledDataset(feature_names=names, X=np.array(rows),
                          y=np.array(labels), participant_ids=pids,
                          demographics=demo)


# --- csv round-trip -----------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_feature_table(ds: LabeledDataset, path) -> None:
    """Deterministic csv: the seven metadata columns, then features."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(META_COLUMNS) + list(ds.feature_names))
        for i in range(ds.n_rows):
            row = [ds.participant_ids[i], int(ds.y[i])]
            row += [_fmt(ds.demographics[c][i]) for c in DEMOGRAPHIC_COLUMNS]
            row += [repr(float(v)) for v in ds.X[i]]
            w.writerow(row)


def read_feature_table(path) -> LabeledDataset:
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r]
    if len(rows) < 2:
        raise EmptyFile(path)
    header = [h.strip() for h in rows[0]]
    pos = {h: i for i, h in enumerate(header)}
    for col in ("participant_id", "label"):
        if col not in pos:
            raise MissingColumn(col)
    meta_set = set(META_COLUMNS)
    feat_cols = [(h, i) for i, h in enumerate(header) if h not in meta_set]
    names = [h for h, _ in feat_cols]

    X = np.empty((len(rows) - 1, len(names)))
    y = np.empty(len(rows) - 1, dtype=np.int64)
    pids = []
    demo = {k: [] for k in DEMOGRAPHIC_COLUMNS}
    for r, cells in enumerate(rows[1:]):
        pids.append(cells[pos["participant_id"]])
        try:
            y[r] = int(float(cells[pos["label"]]))
        except ValueError:
            raise NonNumericCell(r, "label") from None
        for col in DEMOGRAPHIC_COLUMNS:
            if col not in pos or pos[col] >= len(cells) or cells[pos[col]] == "":
                demo[col].append(None)
            elif col in CONTINUOUS_DEMOGRAPHICS:
                try:
                    demo[col].append(float(cells[pos[col]]))
                except ValueError:
                    raise NonNumericCell(r, col) from None
            else:
                demo[col].append(cells[pos[col]])
        for j, (name, i) in enumerate(feat_cols):
            try:
                X[r, j] = float(cells[i])
            except (ValueError, IndexError):
                raise NonNumericCell(r, name) from None
    return LabeledDataset(feature_names=names, X=X, y=y,
                          participant_ids=pids, demographics=demo)
