"""Loading of recording manifests, action-unit tracks, and landmark tracks.

Input follows the usual video-toolchain conventions: one AU csv per recording
(``frame`` column plus ``AU##_r`` intensities in [0, 5] and ``AU##_c``
activations in {0, 1}) and one landmark csv per recording (``frame`` plus
``p000_x .. p477_z`` for 478 tracked points).  Column order in the header is
irrelevant; columns are located by name.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DuplicateEntry,
    EmptyFile,
    LengthMismatch,
    MissingColumn,
    MissingFile,
    NonNumericCell,
    OutOfRange,
    RaggedFrame,
    SchemaViolation,
)

EXPRESSIONS = ("smile", "disgust", "surprise")

# Per-expression action units tracked by the upstream AU extractor.
EXPRESSION_AUS = {
    "smile": ("AU01", "AU06", "AU12", "AU14", "AU25", "AU26", "AU45"),
    "disgust": ("AU04", "AU07", "AU09", "AU10", "AU25", "AU26", "AU45"),
    "surprise": ("AU01", "AU02", "AU04", "AU05", "AU25", "AU26", "AU45"),
}

N_POINTS = 478
LOW_CONFIDENCE = 0.75  # frames below this are counted, not dropped


@dataclass
class ManifestEntry:
    participant_id: str
    expression: str
    au_path: str
    landmark_path: str
    label: int
    cohort: str | None = None
    sex: str | None = None
    age: float | None = None
    ethnicity: str | None = None
    disease_duration: float | None = None


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    base_dir: Path = Path(".")

    def by_participant(self) -> dict[str, dict[str, ManifestEntry]]:
        """participant id -> expression -> entry."""
        out: dict[str, dict[str, ManifestEntry]] = {}
        for e in self.entries:
            out.setdefault(e.participant_id, {})[e.expression] = e
        return out


@dataclass(eq=False)
class RecordingSeries:
    """Per-frame tracks of one recording.

    ``au_intensity`` and ``au_activation`` map AU names to per-frame arrays;
    ``landmarks`` is (frame_count, 478, 3) when present.  All per-frame arrays
    share ``frame_count``.
    """

    participant_id: str
    expression: str
    frame_count: int
    au_intensity: dict[str, np.ndarray] = field(default_factory=dict)
    au_activation: dict[str, np.ndarray] = field(default_factory=dict)
    landmarks: np.ndarray | None = None
    confidence: np.ndarray | None = None


@dataclass
class ValidationReport:
    participant_id: str
    expression: str
    frame_count: int
    active_fraction: dict[str, float]
    zero_active: list[str]
    low_confidence_frames: int | None  # None when no confidence track

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "expression": self.expression,
            "frame_count": self.frame_count,
            "active_fraction": dict(self.active_fraction),
            "zero_active": list(self.zero_active),
            "low_confidence_frames": self.low_confidence_frames,
        }


# --- manifest -------------------------------------------------------------

_REQUIRED_FIELDS = ("participant_id", "expression", "au_path", "landmark_path", "label")
_OPTIONAL_FIELDS = ("cohort", "sex", "age", "ethnicity", "disease_duration")


def parse_manifest(path, check_paths: bool = True) -> Manifest:
    """Load and validate a manifest JSON file.

    Referenced csv paths are resolved relative to the manifest's directory
    and must exist when ``check_paths`` is set.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise DataError("manifest must be an object with an 'entries' list")
    base = path.parent
    entries = []
    seen = set()
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict):
            raise SchemaViolation("entries", i, "entry is not an object")
        for f in _REQUIRED_FIELDS:
            if f not in raw or raw[f] is None:
                raise SchemaViolation(f, i, "missing")
        if raw["expression"] not in EXPRESSIONS:
            raise SchemaViolation("expression", i,
                                  f"{raw['expression']!r} not one of {EXPRESSIONS}")
        if raw["label"] not in (0, 1):
            raise SchemaViolation("label", i, "label must be 0 or 1")
        age = raw.get("age")
        if age is not None:
            if not isinstance(age, (int, float)) or isinstance(age, bool):
                raise SchemaViolation("age", i, "age must be numeric")
            if not 18 <= age <= 120:
                raise SchemaViolation("age", i, f"age {age} outside [18, 120]")
        dur = raw.get("disease_duration")
        if dur is not None:
            if not isinstance(dur, (int, float)) or isinstance(dur, bool):
                raise SchemaViolation("disease_duration", i, "must be numeric")
            if dur < 0:
                raise SchemaViolation("disease_duration", i, "must be >= 0")
        key = (str(raw["participant_id"]), raw["expression"])
        if key in seen:
            raise DuplicateEntry(key)
        seen.add(key)
        entry = ManifestEntry(
            participant_id=str(raw["participant_id"]),
            expression=raw["expression"],
            au_path=str(raw["au_path"]),
            landmark_path=str(raw["landmark_path"]),
            label=int(raw["label"]),
            cohort=raw.get("cohort"),
            sex=raw.get("sex"),
            age=None if age is None else float(age),
            ethnicity=raw.get("ethnicity"),
            disease_duration=None if dur is None else float(dur),
        )
        if check_paths:
            for p in (entry.au_path, entry.landmark_path):
                if not (base / p).exists():
                    raise MissingFile(base / p)
        entries.append(entry)
    return Manifest(entries=entries, base_dir=base)


# --- csv helpers ----------------------------------------------------------

def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    if len(rows) < 2:
        raise EmptyFile(path)
    header = [h.strip() for h in rows[0]]
    return header, rows[1:]


def _cell_float(row_cells, row_idx, pos, name) -> float:
    if pos >= len(row_cells):
        raise MissingColumn(name)
    try:
        return float(row_cells[pos])
    except ValueError:
        raise NonNumericCell(row_idx, name) from None


# --- AU csv ---------------------------------------------------------------

def parse_au_csv(path, expression, participant_id: str = "") -> RecordingSeries:
    """Parse one AU track.  Intensities must lie in [0, 5], activations in {0, 1}.

    Row indices in error messages are 0-based data-row positions.  Rows are
    sorted by frame number, so header and row order never matter.
    """
    if expression not in EXPRESSION_AUS:
        raise DataError(f"unknown expression {expression!r}")
    aus = EXPRESSION_AUS[expression]
    header, data = _read_rows(path)
    pos = {name: i for i, name in enumerate(header)}
    if "frame" not in pos:
        raise MissingColumn("frame")
    for au in aus:
        for suffix in ("_r", "_c"):
            if au + suffix not in pos:
                raise MissingColumn(au + suffix)
    has_conf = "confidence" in pos

    n = len(data)
    frames = np.empty(n)
    intensity = {au: np.empty(n) for au in aus}
    activation = {au: np.empty(n, dtype=np.uint8) for au in aus}
    conf = np.empty(n) if has_conf else None
    for r, cells in enumerate(data):
        frames[r] = _cell_float(cells, r, pos["frame"], "frame")
        for au in aus:
            v = _cell_float(cells, r, pos[au + "_r"], au + "_r")
            if not 0.0 <= v <= 5.0:
                raise OutOfRange(r, au + "_r", v)
            intensity[au][r] = v
            a = _cell_float(cells, r, pos[au + "_c"], au + "_c")
            if a not in (0.0, 1.0):
                raise OutOfRange(r, au + "_c", a)
            activation[au][r] = int(a)
        if has_conf:
            c = _cell_float(cells, r, pos["confidence"], "confidence")
            if not 0.0 <= c <= 1.0:
                raise OutOfRange(r, "confidence", c)
            conf[r] = c

    order = np.argsort(frames, kind="stable")
    return RecordingSeries(
        participant_id=participant_id,
        expression=expression,
        frame_count=n,
        au_intensity={au: intensity[au][order] for au in aus},
        au_activation={au: activation[au][order] for au in aus},
        confidence=conf[order] if has_conf else None,
    )


def write_au_csv(series: RecordingSeries, path) -> None:
    """Serialize the AU tracks in canonical column order (round-trips exactly)."""
    aus = sorted(series.au_intensity)
    header = ["frame"] + [au + "_r" for au in aus] + [au + "_c" for au in aus]
    if series.confidence is not None:
        header.append("confidence")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in range(series.frame_count):
            row = [r]
            row += [repr(float(series.au_intensity[au][r])) for au in aus]
            row += [int(series.au_activation[au][r]) for au in aus]
            if series.confidence is not None:
                row.append(repr(float(series.confidence[r])))
            w.writerow(row)


# --- landmark csv ----------------------------------------------------------

_AXES = ("x", "y", "z")


def _landmark_columns() -> list[str]:
    return [f"p{i:03d}_{ax}" for i in range(N_POINTS) for ax in _AXES]


def parse_landmark_series(path, participant_id: str = "",
                          expression: str = "") -> RecordingSeries:
    """Parse one landmark track into a (frames, 478, 3) array."""
    header, data = _read_rows(path)
    pos = {name: i for i, name in enumerate(header)}
    if "frame" not in pos:
        raise MissingColumn("frame")
    cols = _landmark_columns()
    for c in cols:
        if c not in pos:
            raise MissingColumn(c)
    coord_pos = np.array([pos[c] for c in cols])

    n = len(data)
    frames = np.empty(n)
    pts = np.empty((n, N_POINTS * 3))
    width = len(header)
    for r, cells in enumerate(data):
        if len(cells) != width:
            complete = int(np.sum(coord_pos < len(cells))) // 3
            raise RaggedFrame(r, complete)
        frames[r] = _cell_float(cells, r, pos["frame"], "frame")
        for j, p in enumerate(coord_pos):
            pts[r, j] = _cell_float(cells, r, p, cols[j])

    order = np.argsort(frames, kind="stable")
    return RecordingSeries(
        participant_id=participant_id,
        expression=expression,
        frame_count=n,
        landmarks=pts[order].reshape(n, N_POINTS, 3),
    )


def write_landmark_csv(series: RecordingSeries, path) -> None:
    if series.landmarks is None:
        raise DataError("series has no landmarks to serialize")
    flat = series.landmarks.reshape(series.frame_count, -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame"] + _landmark_columns())
        for r in range(series.frame_count):
            w.writerow([r] + [repr(float(v)) for v in flat[r]])


# --- merge and validation ---------------------------------------------------

def merge_series(au: RecordingSeries, lm: RecordingSeries) -> RecordingSeries:
    if au.frame_count != lm.frame_count:
        raise LengthMismatch(
            f"AU track has {au.frame_count} frames, landmarks {lm.frame_count}")
    return RecordingSeries(
        participant_id=au.participant_id,
        expression=au.expression,
        frame_count=au.frame_count,
        au_intensity=au.au_intensity,
        au_activation=au.au_activation,
        landmarks=lm.landmarks,
        confidence=au.confidence,
    )


def load_recording(entry: ManifestEntry, base_dir,
                   min_confidence: float | None = None) -> RecordingSeries:
    base = Path(base_dir)
    au = parse_au_csv(base / entry.au_path, entry.expression, entry.participant_id)
    lm = parse_landmark_series(base / entry.landmark_path,
                               entry.participant_id, entry.expression)
    series = merge_series(au, lm)
    if min_confidence is not None:
        series = filter_low_confidence(series, min_confidence)
    return series


def filter_low_confidence(series: RecordingSeries, threshold: float) -> RecordingSeries:
    """Drop frames whose confidence falls below ``threshold``."""
    if series.confidence is None:
        return series
    keep = series.confidence >= threshold
    n = int(np.sum(keep))
    if n == 0:
        raise DataError(
            f"all {series.frame_count} frames fall below confidence {threshold}")
    return RecordingSeries(
        participant_id=series.participant_id,
        expression=series.expression,
        frame_count=n,
        au_intensity={k: v[keep] for k, v in series.au_intensity.items()},
        au_activation={k: v[keep] for k, v in series.au_activation.items()},
        landmarks=None if series.landmarks is None else series.landmarks[keep],
        confidence=series.confidence[keep],
    )


def validate_recording(series: RecordingSeries) -> ValidationReport:
    fractions = {}
    zero = []
    for au in sorted(series.au_activation):
        frac = float(np.mean(series.au_activation[au]))
        fractions[au] = frac
        if frac == 0.0:
            zero.append(au)
    low = None
    if series.confidence is not None:
        low = int(np.sum(series.confidence < LOW_CONFIDENCE))
    return ValidationReport(
        participant_id=series.participant_id,
        expression=series.expression,
        frame_count=series.frame_count,
        active_fraction=fractions,
        zero_active=zero,
        low_confidence_frames=low,
    )
