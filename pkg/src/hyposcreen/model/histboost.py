"""Gradient-boosted trees on binned features, for binary classification.

Trees are grown best-first on histograms of gradient/hessian sums.  One
sibling's histogram is always derived by subtracting the other's from the
parent's, which halves the accumulation work.  Split ties are broken toward
the lower feature index, then the lower bin, so fits are fully deterministic.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArtifactError, DataError, DegenerateParams, EmptyMatrix, SingleClass
from ..util import child_seed, log_loss, sigmoid
from .binning import BinMapper, bin_matrix, fit_bins

SCHEMA_VERSION = 1


@dataclass
class BoostParams:
    n_trees: int = 200
    learning_rate: float = 0.1
    max_leaves: int = 31
    max_depth: int | None = None  # None = unbounded
    min_samples_leaf: int = 20
    l2_leaf: float = 1.0
    max_bins: int = 255
    feature_fraction: float = 1.0

    def validate(self) -> None:
        if self.n_trees < 1:
            raise DegenerateParams(f"n_trees must be >= 1, got {self.n_trees}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise DegenerateParams(
                f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.max_leaves < 2:
            raise DegenerateParams(f"max_leaves must be >= 2, got {self.max_leaves}")
        if self.max_depth is not None and self.max_depth < 1:
            raise DegenerateParams("max_depth must be >= 1 or None")
        if self.min_samples_leaf < 1:
            raise DegenerateParams("min_samples_leaf must be >= 1")
        if self.l2_leaf < 0:
            raise DegenerateParams("l2_leaf must be >= 0")
        if not 2 <= self.max_bins <= 255:
            raise DegenerateParams(f"max_bins must be in [2, 255], got {self.max_bins}")
        if not 0.0 < self.feature_fraction <= 1.0:
            raise DegenerateParams("feature_fraction must be in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "learning_rate": self.learning_rate,
            "max_leaves": self.max_leaves,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "l2_leaf": self.l2_leaf,
            "max_bins": self.max_bins,
            "feature_fraction": self.feature_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostParams":
        return cls(**{k: d[k] for k in cls().to_dict() if k in d})


@dataclass(eq=False)
class Tree:
    """Flat arrays; ``feature[i] == -1`` marks a leaf.  A sample goes left
    when its bin index is <= ``split_bin`` at the node."""

    feature: np.ndarray
    split_bin: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    cover: np.ndarray  # training rows that reached the node

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def to_dict(self) -> dict:
        return {
            "feature": [int(v) for v in self.feature],
            "split_bin": [int(v) for v in self.split_bin],
            "left": [int(v) for v in self.left],
            "right": [int(v) for v in self.right],
            "value": [float(v) for v in self.value],
            "cover": [int(v) for v in self.cover],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(feature=np.array(d["feature"], dtype=np.int64),
                   split_bin=np.array(d["split_bin"], dtype=np.int64),
                   left=np.array(d["left"], dtype=np.int64),
                   right=np.array(d["right"], dtype=np.int64),
                   value=np.array(d["value"], dtype=float),
                   cover=np.array(d["cover"], dtype=float))


@dataclass(eq=False)
class BoostedModel:
    params: BoostParams
    mapper: BinMapper
    base_score: float
    trees: list
    train_loss: list
    n_features: int

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "histgbm",
            "params": self.params.to_dict(),
            "bins": self.mapper.to_dict(),
            "base_score": float(self.base_score),
            "trees": [t.to_dict() for t in self.trees],
            "train_loss": [float(v) for v in self.train_loss],
            "n_features": int(self.n_features),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedModel":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ArtifactError(f"unsupported schema_version {d.get('schema_version')!r}")
        if d.get("kind") != "histgbm":
            raise ArtifactError(f"unexpected model kind {d.get('kind')!r}")
        return cls(params=BoostParams.from_dict(d["params"]),
                   mapper=BinMapper.from_dict(d["bins"]),
                   base_score=float(d["base_score"]),
                   trees=[Tree.from_dict(t) for t in d["trees"]],
                   train_loss=[float(v) for v in d["train_loss"]],
                   n_features=int(d["n_features"]))


def build_histograms(binned: np.ndarray, idx: np.ndarray, g: np.ndarray,
                     h: np.ndarray, stride: int):
    """Per-feature (gradient, hessian, count) histograms for one node.

    Single bincount pass over flattened (row, feature) bin codes; exposed so
    that the histogram-subtraction identity can be checked directly.
    """
    d = binned.shape[1]
    flat = (binned[idx] + np.arange(d, dtype=np.int64) * stride).ravel()
    length = d * stride
    C = np.bincount(flat, minlength=length).reshape(d, stride).astype(float)
    G = np.bincount(flat, weights=np.repeat(g[idx], d),
                    minlength=length).reshape(d, stride)
    H = np.bincount(flat, weights=np.repeat(h[idx], d),
                    minlength=length).reshape(d, stride)
    return G, H, C


def _grow_tree(binned, g, h, params: BoostParams, active: np.ndarray,
               n_bins: np.ndarray, stride: int) -> Tree:
    n = binned.shape[0]
    lam = params.l2_leaf
    min_leaf = params.min_samples_leaf
    # split candidate b is valid for feature f only when b < n_bins[f] - 1
    bins_ok = np.arange(stride - 1)[None, :] < (n_bins[:, None] - 1)
    bins_ok &= active[:, None]

    feature, split_bin = [], []
    left, right, value, cover = [], [], [], []

    def new_node(idx) -> int:
        feature.append(-1)
        split_bin.append(-1)
        left.append(-1)
        right.append(-1)
        gt = float(np.sum(g[idx]))
        ht = float(np.sum(h[idx]))
        denom = ht + lam
        value.append(0.0 if denom <= 0.0 else -gt / denom)
        cover.append(int(idx.size))
        return len(feature) - 1

    def best_split(G, H, C):
        GL = np.cumsum(G, axis=1)[:, :-1]
        HL = np.cumsum(H, axis=1)[:, :-1]
        CL = np.cumsum(C, axis=1)[:, :-1]
        Gt = G.sum(axis=1, keepdims=True)
        Ht = H.sum(axis=1, keepdims=True)
        Ct = C.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (GL * GL / (HL + lam)
                          + (Gt - GL) ** 2 / (Ht - HL + lam)
                          - Gt * Gt / (Ht + lam))
        valid = bins_ok & (CL >= min_leaf) & (Ct - CL >= min_leaf)
        gain = np.where(valid & np.isfinite(gain), gain, -np.inf)
        pos = int(np.argmax(gain))  # first max: lowest feature, then lowest bin
        f, b = divmod(pos, gain.shape[1])
        return float(gain.flat[pos]), int(f), int(b)

    heap = []
    tiebreak = itertools.count()

    def consider(node_id, idx, hists, depth) -> None:
        if params.max_depth is not None and depth >= params.max_depth:
            return
        if idx.size < 2 * min_leaf:
            return
        gain, f, b = best_split(*hists)
        if gain > 0.0:
            heapq.heappush(heap, (-gain, next(tiebreak), node_id, idx, hists,
                                  depth, f, b))

    idx_all = np.arange(n)
    root_hists = build_histograms(binned, idx_all, g, h, stride)
    root = new_node(idx_all)
    consider(root, idx_all, root_hists, 0)

    n_leaves = 1
    while heap and n_leaves < params.max_leaves:
        _, _, node_id, idx, (G, H, C), depth, f, b = heapq.heappop(heap)
        go_left = binned[idx, f] <= b
        li, ri = idx[go_left], idx[~go_left]
        # accumulate the smaller child, subtract for the sibling
        if li.size <= ri.size:
            Gl, Hl, Cl = build_histograms(binned, li, g, h, stride)
            Gr, Hr, Cr = G - Gl, H - Hl, C - Cl
        else:
            Gr, Hr, Cr = build_histograms(binned, ri, g, h, stride)
            Gl, Hl, Cl = G - Gr, H - Hr, C - Cr
        lid = new_node(li)
        rid = new_node(ri)
        feature[node_id] = f
        split_bin[node_id] = b
        left[node_id] = lid
        right[node_id] = rid
        value[node_id] = 0.0
        n_leaves += 1
        consider(lid, li, (Gl, Hl, Cl), depth + 1)
        consider(rid, ri, (Gr, Hr, Cr), depth + 1)

    return Tree(feature=np.array(feature, dtype=np.int64),
                split_bin=np.array(split_bin, dtype=np.int64),
                left=np.array(left, dtype=np.int64),
                right=np.array(right, dtype=np.int64),
                value=np.array(value, dtype=float),
                cover=np.array(cover, dtype=float))


def _tree_outputs(tree: Tree, binned: np.ndarray) -> np.ndarray:
    out = np.empty(binned.shape[0])
    stack = [(0, np.arange(binned.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if tree.feature[node] < 0:
            out[idx] = tree.value[node]
            continue
        go_left = binned[idx, tree.feature[node]] <= tree.split_bin[node]
        stack.append((int(tree.left[node]), idx[go_left]))
        stack.append((int(tree.right[node]), idx[~go_left]))
    return out


def fit_histgbm(X, y, params: BoostParams | None = None,
                seed: int = 0) -> BoostedModel:
    """Fit the boosted classifier; records training log-loss per round."""
    params = params or BoostParams()
    params.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix()
    if X.shape[0] != y.shape[0]:
        raise DataError("row count of X and y differ")
    if np.unique(y).size < 2:
        raise SingleClass()

    n, d = X.shape
    mapper = fit_bins(X, params.max_bins)
    n_bins = mapper.n_bins
    stride = int(n_bins.max())
    binned = bin_matrix(mapper, X).astype(np.int64)

    p_mean = float(np.mean(y))
    base_score = float(np.log(p_mean / (1.0 - p_mean)))
    raw = np.full(n, base_score)

    n_active = max(1, int(np.ceil(params.feature_fraction * d)))
    trees = []
    losses = []
    for t in range(params.n_trees):
        p = sigmoid(raw)
        g = p - y
        h = p * (1.0 - p)
        active = np.ones(d, dtype=bool)
        if n_active < d:
            rng = np.random.default_rng(child_seed(seed, "tree", t))
            active = np.zeros(d, dtype=bool)
            active[np.sort(rng.choice(d, size=n_active, replace=False))] = True
        tree = _grow_tree(binned, g, h, params, active, n_bins, stride)
        trees.append(tree)
        raw = raw + params.learning_rate * _tree_outputs(tree, binned)
        losses.append(log_loss(y, sigmoid(raw)))

    return BoostedModel(params=params, mapper=mapper, base_score=base_score,
                        trees=trees, train_loss=losses, n_features=d)


def predict_raw(model: BoostedModel, X) -> np.ndarray:
    """base_score plus the learning-rate-scaled sum of tree outputs."""
    binned = bin_matrix(model.mapper, X).astype(np.int64)
    raw = np.full(binned.shape[0], model.base_score)
    for tree in model.trees:
        raw += model.params.learning_rate * _tree_outputs(tree, binned)
    return raw


def predict_proba(model: BoostedModel, X) -> np.ndarray:
    return sigmoid(predict_raw(model, X))


def save_model(model: BoostedModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True)


def load_model(path) -> BoostedModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(str(exc)) from exc
    return BoostedModel.from_dict(doc)
