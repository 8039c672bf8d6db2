"""Isolation forest anomaly scoring on raw (undiscretized) features.

Each tree isolates a random subsample with uniformly random axis-aligned
cuts; anomalous rows isolate quickly. The score 2^(-E[h(x)] / c(psi))
lands in (0, 1), higher meaning more anomalous. No labels are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_EULER_GAMMA = 0.5772156649015329


def average_path_length(n: int) -> float:
    """c(n): mean unsuccessful-search path length in a BST of n points."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    h = math.log(n - 1) + _EULER_GAMMA
    return 2.0 * h - 2.0 * (n - 1) / n


@dataclass
class _IsoTree:
    # Flat arrays; feature < 0 marks a leaf whose size sits in `size`.
    # adjust = depth + c(size) precomputed per node for fast scoring.
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray
    adjust: np.ndarray


@dataclass
class IsolationForestModel:
    trees: list[_IsoTree]
    subsample: int
    n_features: int

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        n = len(X)
        path_sum = np.zeros(n)
        for t in self.trees:
            node = np.zeros(n, dtype=np.int64)
            while True:
                at_split = t.feature[node] >= 0
                if not at_split.any():
                    break
                idx = np.flatnonzero(at_split)
                f = t.feature[node[idx]]
                go_left = X[idx, f] < t.threshold[node[idx]]
                node[idx] = np.where(go_left, t.left[node[idx]], t.right[node[idx]])
            path_sum += t.adjust[node]
        expected = path_sum / len(self.trees)
        return np.power(2.0, -expected / average_path_length(self.subsample))


def train_iforest(X: np.ndarray, n_trees: int = 100, subsample: int = 256,
                  seed: int = 0) -> IsolationForestModel:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("need at least 2 rows to fit an isolation forest")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 17])))
    psi = min(subsample, len(X))
    height_cap = math.ceil(math.log2(psi)) if psi > 1 else 0
    trees = []
    for _ in range(n_trees):
        rows = rng.choice(len(X), size=psi, replace=False)
        trees.append(_build_tree(X[rows], rng, height_cap))
    return IsolationForestModel(trees=trees, subsample=psi, n_features=X.shape[1])


def score_iforest(model: IsolationForestModel, x) -> float | np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return float(model.predict_scores(x[None, :])[0])
    return model.predict_scores(x)


def _build_tree(S: np.ndarray, rng, height_cap: int) -> _IsoTree:
    feature, threshold, left, right, size, depth = [], [], [], [], [], []

    def add_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        size.append(0)
        depth.append(0)
        return len(feature) - 1

    def build(rows: np.ndarray, h: int) -> int:
        idx = add_node()
        depth[idx] = h
        if h >= height_cap or len(rows) <= 1:
            size[idx] = len(rows)
            return idx
        lo = S[rows].min(axis=0)
        hi = S[rows].max(axis=0)
        usable = np.flatnonzero(hi > lo)
        if len(usable) == 0:
            size[idx] = len(rows)
            return idx
        f = int(usable[rng.integers(0, len(usable))])
        split = rng.uniform(lo[f], hi[f])
        mask = S[rows, f] < split
        feature[idx] = f
        threshold[idx] = split
        left[idx] = build(rows[mask], h + 1)
        right[idx] = build(rows[~mask], h + 1)
        return idx

    build(np.arange(len(S)), 0)
    size_arr = np.array(size, dtype=np.int64)
    depth_arr = np.array(depth, dtype=np.int64)
    adjust = depth_arr + np.array([average_path_length(int(s)) for s in size_arr])
    return _IsoTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        size=size_arr,
        depth=depth_arr,
        adjust=adjust,
    )
