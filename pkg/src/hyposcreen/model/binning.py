"""Quantile binning of feature matrices for histogram-based tree growth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, EmptyMatrix, WidthMismatch


@dataclass(eq=False)
class BinMapper:
    """Per-feature ascending thresholds; feature f has len(thresholds[f]) + 1 bins."""

    thresholds: list
    max_bins: int

    @property
    def n_bins(self) -> np.ndarray:
        return np.array([len(t) + 1 for t in self.thresholds], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"max_bins": int(self.max_bins),
                "thresholds": [[float(v) for v in t] for t in self.thresholds]}

    @classmethod
    def from_dict(cls, d: dict) -> "BinMapper":
        return cls(thresholds=[np.array(t, dtype=float) for t in d["thresholds"]],
                   max_bins=int(d["max_bins"]))


def fit_bins(X, max_bins: int = 255) -> BinMapper:
    """Thresholds at midpoints of distinct values, or at empirical quantiles
    of the distinct values once a feature exceeds ``max_bins`` of them.
    """
    if not 2 <= max_bins <= 255:
        raise DataError(f"max_bins must be in [2, 255], got {max_bins}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix()
    thresholds = []
    for f in range(X.shape[1]):
        d = np.unique(X[:, f])
        m = d.size
        if m <= 1:
            thresholds.append(np.empty(0))
        elif m <= max_bins:
            thresholds.append((d[1:] + d[:-1]) / 2.0)
        else:
            ranks = np.unique((np.arange(1, max_bins) * m) // max_bins)
            thresholds.append((d[ranks - 1] + d[ranks]) / 2.0)
    return BinMapper(thresholds=thresholds, max_bins=max_bins)


def bin_matrix(mapper: BinMapper, X) -> np.ndarray:
    """Map raw values to bin indices; a value equal to a threshold bins left."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(mapper.thresholds):
        raise WidthMismatch(len(mapper.thresholds), X.shape[1])
    out = np.empty(X.shape, dtype=np.uint8)
    for f, thr in enumerate(mapper.thresholds):
        out[:, f] = np.searchsorted(thr, X[:, f], side="left")
    return out
