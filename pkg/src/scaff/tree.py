"""Greedy depth-limited probabilistic trees grown by criterion gain.

Every sample in a node is scored with the node's P(Y+). A split is scored
by how much the criterion improves when the node's samples are rescored
with their child's P(Y+), using only the samples of that node. The best
split is taken only when its gain is strictly positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import kernels
from .criteria import (
    Kind,
    SplitCriterion,
    faht,
    fairness_gain,
    info_gain,
    kamiran_div,
    kamiran_sub,
    parse_criterion,
    scaff_gain,
)
from .dataset import Dataset, SensitiveView, as_generator
from .errors import ConfigError, DataError
from .metrics import auc, ovr_sensitive_auc


@dataclass(frozen=True)
class Leaf:
    p_pos: float
    n_samples: int
    # why growth stopped: "depth", "exhausted" (no candidate) or "nonpositive"
    stop: str = "depth"
    best_gain: float | None = None
    features: tuple[int, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: int
    gain: float
    n_samples: int
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: int
    n_left: int
    n_right: int


@dataclass(frozen=True)
class SplitEvaluation:
    gain: float
    auc_y_child: float | None = None
    auc_s_child_max: float | None = None
    ig_y: float | None = None
    ig_s: float | None = None
    fg: float | None = None


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 4
    criterion: SplitCriterion = SplitCriterion.scaff(0.5)
    min_samples_leaf: int = 1
    features_per_split: int | None = None
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.criterion, str):
            object.__setattr__(self, "criterion", parse_criterion(self.criterion))
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ConfigError(f"features_per_split must be >= 1, got {self.features_per_split}")

    def n_features(self, m: int) -> int:
        if self.features_per_split is None:
            return max(1, math.ceil(math.sqrt(m)))
        if self.features_per_split > m:
            raise ConfigError(f"features_per_split={self.features_per_split} exceeds the {m} features")
        return self.features_per_split

    def to_dict(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "criterion": str(self.criterion),
            "min_samples_leaf": self.min_samples_leaf,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeConfig":
        return cls(
            max_depth=int(data.get("max_depth", 4)),
            criterion=parse_criterion(data.get("criterion", "scaff:0.5")),
            min_samples_leaf=int(data.get("min_samples_leaf", 1)),
            features_per_split=data.get("features_per_split"),
            seed=int(data.get("seed", 0)),
        )


def kernel_groups(view: SensitiveView, criterion: SplitCriterion) -> np.ndarray:
    """Group-membership matrix the kernel needs for ``criterion``."""
    if criterion.kind is Kind.AUC:
        return np.zeros((0, view.n), dtype=np.uint8)
    if criterion.kind is not Kind.SCAFF and len(view) != 1:
        raise ConfigError(
            f"{criterion.name} supports a single binary sensitive attribute; the view has {len(view)} groups"
        )
    return view.masks()


# --------------------------------------------------------------------------
# candidate enumeration and evaluation (reference path)

def enumerate_splits(
    node_samples: Sequence[int],
    dataset: Dataset,
    feature_subset: Sequence[int],
    min_samples_leaf: int = 1,
) -> list[SplitCandidate]:
    """One candidate per gap between adjacent occupied ordinals of each feature."""
    idx = np.asarray(node_samples, dtype=np.intp)
    if idx.size == 0:
        raise DataError("cannot enumerate splits of an empty node")
    out = []
    for f in sorted(int(f) for f in feature_subset):
        codes = dataset.features[idx, f]
        counts = np.bincount(codes, minlength=int(dataset.n_bins[f]))
        occupied = np.flatnonzero(counts)
        n_left = np.cumsum(counts)
        for t in occupied[:-1]:
            nl = int(n_left[t])
            nr = idx.size - nl
            if nl >= min_samples_leaf and nr >= min_samples_leaf:
                out.append(SplitCandidate(f, int(t), nl, nr))
    return out


def node_scores(labels: np.ndarray, left: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Parent scores (constant node P(Y+)) and child scores for a left/right mask."""
    n = labels.size
    z_parent = np.full(n, labels.sum() / n)
    z_child = np.empty(n)
    z_child[left] = labels[left].sum() / left.sum()
    z_child[~left] = labels[~left].sum() / (~left).sum()
    return z_parent, z_child


def evaluate_split(
    candidate: SplitCandidate,
    node_samples: Sequence[int],
    dataset: Dataset,
    criterion: SplitCriterion,
) -> SplitEvaluation:
    """Score one candidate from explicit score vectors.

    Slow but direct; the grower uses the count-based kernels instead, and the
    test-suite checks the two against each other.
    """
    idx = np.asarray(node_samples, dtype=np.intp)
    y = dataset.labels[idx].astype(np.int64)
    left = dataset.features[idx, candidate.feature] <= candidate.threshold
    if left.all() or not left.any():
        raise DataError("candidate does not split the node into two nonempty parts")
    view = dataset.sensitive.subset(idx)
    z_parent, z_child = node_scores(y, left)

    if criterion.kind is Kind.SCAFF:
        gain = scaff_gain(z_parent, z_child, y, view, criterion.theta)
        auc_s_max, _ = ovr_sensitive_auc(z_child, view)
        return SplitEvaluation(gain, auc_y_child=auc(z_child, y), auc_s_child_max=auc_s_max)
    if criterion.kind is Kind.AUC:
        auc_y = auc(z_child, y)
        return SplitEvaluation(auc_y - auc(z_parent, y), auc_y_child=auc_y)

    if len(view) != 1:
        raise ConfigError(f"{criterion.name} supports a single binary sensitive attribute")
    s = view.groups[0].mask.astype(np.int64)
    ig_y = info_gain(y, [y[left], y[~left]])
    if criterion.kind is Kind.FAHT:
        fg = fairness_gain(s, [s[left], s[~left]], y, [y[left], y[~left]])
        return SplitEvaluation(faht(ig_y, fg), ig_y=ig_y, fg=fg)
    ig_s = info_gain(s, [s[left], s[~left]])
    fn = kamiran_sub if criterion.kind is Kind.KAMIRAN_SUB else kamiran_div
    return SplitEvaluation(fn(ig_y, ig_s), ig_y=ig_y, ig_s=ig_s)


# --------------------------------------------------------------------------
# growth and prediction

def grow(
    dataset: Dataset,
    sample_indices: Sequence[int],
    config: TreeConfig,
    rng: np.random.Generator | int | None = None,
) -> TreeNode:
    """Grow a tree on ``sample_indices`` (duplicates allowed, e.g. a bootstrap)."""
    idx = np.asarray(sample_indices, dtype=np.intp)
    if idx.size == 0:
        raise DataError("cannot grow a tree on zero samples")
    rng = as_generator(config.seed if rng is None else rng)
    X = dataset.features
    y = dataset.labels
    n_bins = dataset.n_bins
    groups = kernel_groups(dataset.sensitive, config.criterion)
    kind = int(config.criterion.kind)
    theta = config.criterion.theta
    m = dataset.m
    k = config.n_features(m) if m else 0

    def _grow(rows: np.ndarray, depth: int) -> TreeNode:
        n = rows.size
        p_pos = int(y[rows].sum()) / n
        if depth >= config.max_depth:
            return Leaf(p_pos, n, "depth")
        if k == 0:
            return Leaf(p_pos, n, "exhausted")
        feats = np.sort(rng.choice(m, size=k, replace=False))
        f, t, gain = kernels.best_split(X, rows, feats, n_bins, y, groups, kind, theta, config.min_samples_leaf)
        feats_t = tuple(int(v) for v in feats)
        if f < 0:
            return Leaf(p_pos, n, "exhausted", None, feats_t)
        if not gain > 0.0:
            return Leaf(p_pos, n, "nonpositive", gain, feats_t)
        go_left = X[rows, f] <= t
        return Split(f, t, gain, n, _grow(rows[go_left], depth + 1), _grow(rows[~go_left], depth + 1))

    return _grow(idx, 0)


@dataclass
class FlatTree:
    """Array form of a tree for vectorized routing."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @classmethod
    def from_node(cls, root: TreeNode) -> "FlatTree":
        feature, threshold, left, right, value = [], [], [], [], []

        def visit(node: TreeNode) -> int:
            i = len(feature)
            feature.append(-1)
            threshold.append(0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if isinstance(node, Leaf):
                value[i] = node.p_pos
            else:
                feature[i] = node.feature
                threshold[i] = node.threshold
                left[i] = visit(node.left)
                right[i] = visit(node.right)
            return i

        visit(root)
        return cls(np.asarray(feature, dtype=np.intp), np.asarray(threshold, dtype=np.int64),
                   np.asarray(left, dtype=np.intp), np.asarray(right, dtype=np.intp),
                   np.asarray(value, dtype=np.float64))

    def apply(self, codes: np.ndarray) -> np.ndarray:
        node = np.zeros(codes.shape[0], dtype=np.intp)
        rows = np.arange(codes.shape[0])
        while True:
            f = self.feature[node]
            active = f >= 0
            if not active.any():
                return node
            a = rows[active]
            go_left = codes[a, f[active]] <= self.threshold[node[a]]
            node[a] = np.where(go_left, self.left[node[a]], self.right[node[a]])

    def predict(self, codes: np.ndarray) -> np.ndarray:
        return self.value[self.apply(codes)]


def predict_scores(tree: TreeNode | FlatTree, rows: np.ndarray, n_features: int | None = None) -> np.ndarray:
    """Route binned rows to leaves and return the leaf P(Y+)."""
    codes = np.asarray(rows)
    if codes.ndim != 2:
        raise DataError("rows must be a 2-D matrix of bin ordinals")
    flat = tree if isinstance(tree, FlatTree) else FlatTree.from_node(tree)
    needed = int(flat.feature.max(initial=-1)) + 1
    if n_features is not None and codes.shape[1] != n_features:
        raise DataError(f"rows have {codes.shape[1]} features, model expects {n_features}")
    if codes.shape[1] < needed:
        raise DataError(f"rows have {codes.shape[1]} features, tree uses feature {needed - 1}")
    return flat.predict(codes)


def leaves(node: TreeNode, depth: int = 0):
    """Yield ``(leaf, depth)`` pairs in left-to-right order."""
    if isinstance(node, Leaf):
        yield node, depth
    else:
        yield from leaves(node.left, depth + 1)
        yield from leaves(node.right, depth + 1)


def depth(node: TreeNode) -> int:
    return max((d for _, d in leaves(node)), default=0)


def node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        out = {"p_pos": node.p_pos, "n": node.n_samples, "stop": node.stop}
        if node.best_gain is not None:
            out["best_gain"] = node.best_gain
        return out
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "gain": node.gain,
        "n": node.n_samples,
        "left": node_to_dict(node.left),
        "right": node_to_dict(node.right),
    }


def node_from_dict(data: dict) -> TreeNode:
    if "p_pos" in data:
        return Leaf(float(data["p_pos"]), int(data["n"]), data.get("stop", "depth"), data.get("best_gain"))
    return Split(int(data["feature"]), int(data["threshold"]), float(data["gain"]), int(data["n"]),
                 node_from_dict(data["left"]), node_from_dict(data["right"]))
