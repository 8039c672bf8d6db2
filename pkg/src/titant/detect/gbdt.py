"""Gradient-boosted regression trees under a squared-error objective.

Labels in {0,1} are treated as regression targets; each tree fits the
current residuals on a row subsample with a per-tree column subsample,
depth-capped at max_depth, and the ensemble adds shrinkage * tree(x) to a
base score equal to the training-label mean. Split candidates come from
per-feature quantile bins (up to 255), so split search is histogram
accumulation; the chosen split is stored as a raw-value threshold and
prediction never touches the binning. Variance-reduction gain:
sum_L^2/n_L + sum_R^2/n_R - sum_P^2/n_P.

Reported scores are clipped to [0, 1]; raw ensemble sums stay available
through predict_raw for residual computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MAX_HIST_BINS = 255


@dataclass
class _RegressionTree:
    feature: np.ndarray    # < 0 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            at_split = self.feature[node] >= 0
            if not at_split.any():
                break
            idx = np.flatnonzero(at_split)
            f = self.feature[node[idx]]
            go_left = X[idx, f] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
        return self.value[node]


@dataclass
class GbdtModel:
    trees: list[_RegressionTree]
    base_score: float
    shrinkage: float
    n_features: int
    train_losses: list[float] = field(default_factory=list)

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        out = np.full(len(X), self.base_score)
        for t in self.trees:
            out += self.shrinkage * t.predict(X)
        return out

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        return np.clip(self.predict_raw(X), 0.0, 1.0)


def train_gbdt(X: np.ndarray, y: np.ndarray, n_trees: int = 400, depth: int = 3,
               subsample: float = 0.4, shrinkage: float = 0.1,
               seed: int = 0) -> GbdtModel:
    """Row and column subsampling share the single `subsample` rate."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("need a non-empty 2D matrix")
    if len(y) != len(X):
        raise ValueError("labels must align with rows")
    if not 0.0 < subsample <= 1.0:
        raise ValueError("subsample must be in (0, 1]")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 23])))
    n, p = X.shape
    binned, thresholds = _quantize(X)

    base = float(y.mean())
    current = np.full(n, base)
    trees: list[_RegressionTree] = []
    losses = []
    n_rows = max(1, int(round(subsample * n)))
    n_cols = max(1, int(round(subsample * p)))

    for _ in range(n_trees):
        residual = y - current
        losses.append(float(np.mean(residual ** 2)))
        rows = rng.choice(n, size=n_rows, replace=False) if n_rows < n else np.arange(n)
        cols = np.sort(rng.choice(p, size=n_cols, replace=False)) if n_cols < p else np.arange(p)
        tree = _grow_tree(binned, thresholds, residual, rows, cols, depth)
        trees.append(tree)
        current += shrinkage * tree.predict(X)
    losses.append(float(np.mean((y - current) ** 2)))
    return GbdtModel(trees=trees, base_score=base, shrinkage=shrinkage,
                     n_features=p, train_losses=losses)


def _quantize(X: np.ndarray):
    """Per-feature quantile bins; thresholds[j][b] is the raw upper edge of
    bin b, so `x <= thresholds[j][b]` reproduces `bin(x) <= b` exactly."""
    n, p = X.shape
    binned = np.empty((n, p), dtype=np.int32)
    thresholds = []
    qs = np.arange(1, _MAX_HIST_BINS) / _MAX_HIST_BINS
    for j in range(p):
        col = X[:, j]
        edges = np.unique(np.quantile(col, qs))
        edges = edges[edges < col.max()]
        # side="left": bin(x) <= b exactly when x <= edges[b], matching the
        # `x <= threshold` rule prediction uses.
        binned[:, j] = np.searchsorted(edges, col, side="left")
        thresholds.append(np.concatenate([edges, [np.inf]]))
    return binned, thresholds


def _grow_tree(binned, thresholds, residual, rows, cols, max_depth) -> _RegressionTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def add_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def build(node_rows: np.ndarray, depth: int) -> int:
        idx = add_node()
        r = residual[node_rows]
        total = float(r.sum())
        n_node = len(node_rows)
        value[idx] = total / n_node
        if depth >= max_depth or n_node < 2:
            return idx

        best = None  # (gain, col, bin)
        parent_score = total * total / n_node
        for j in cols:
            b = binned[node_rows, j]
            sums = np.bincount(b, weights=r)
            counts = np.bincount(b)
            csum = np.cumsum(sums)[:-1]
            ccnt = np.cumsum(counts)[:-1]
            valid = (ccnt > 0) & (ccnt < n_node)
            if not valid.any():
                continue
            ls = csum[valid]
            ln = ccnt[valid]
            gain = ls * ls / ln + (total - ls) ** 2 / (n_node - ln) - parent_score
            k = int(np.argmax(gain))
            if gain[k] > 1e-12 and (best is None or gain[k] > best[0]):
                best = (float(gain[k]), int(j), int(np.flatnonzero(valid)[k]))

        if best is None:
            return idx
        _, col, split_bin = best
        go_left = binned[node_rows, col] <= split_bin
        feature[idx] = col
        threshold[idx] = float(thresholds[col][split_bin])
        left[idx] = build(node_rows[go_left], depth + 1)
        right[idx] = build(node_rows[~go_left], depth + 1)
        return idx

    build(rows, 0)
    return _RegressionTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )
