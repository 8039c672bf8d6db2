"""Multiway decision trees on discretized features.

Two modes share one grower: "information_gain" (plain top-down induction,
no pruning) and "gain_ratio" (gain normalized by split information, plus
bottom-up pessimistic-error pruning with the usual CF=0.25 confidence).
Splits are multiway on bin values; a bin unseen at a node during training
falls back to that node's own fraud probability at predict time.

A node becomes a leaf when it is pure, the depth cap is hit, or no column
improves the criterion. A zero-gain split is still taken when the node is
impure and some column has more than one value (ties broken by lowest
column index): parity-style targets where every single column is
uninformative but combinations are not would otherwise be unlearnable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_DEPTH = 16

# Normal quantile for the C4.5-style CF=0.25 pessimistic error bound.
_Z_CF25 = 0.6744897501960817


@dataclass
class TreeNode:
    n: int
    n_pos: int
    probability: float
    column: int | None = None
    children: dict[int, "TreeNode"] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.column is None


@dataclass
class DecisionTree:
    root: TreeNode
    criterion: str
    n_columns: int

    def predict_scores(self, X_binned: np.ndarray) -> np.ndarray:
        X_binned = np.asarray(X_binned)
        out = np.empty(len(X_binned), dtype=np.float64)
        for i in range(len(X_binned)):
            node = self.root
            while not node.is_leaf:
                child = node.children.get(int(X_binned[i, node.column]))
                if child is None:
                    break
                node = child
            out[i] = node.probability
        return out


def _entropy(n_pos: int, n: int) -> float:
    if n == 0 or n_pos == 0 or n_pos == n:
        return 0.0
    p = n_pos / n
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def train_tree(X_binned: np.ndarray, y: np.ndarray, criterion: str = "gain_ratio",
               max_depth: int = DEFAULT_MAX_DEPTH) -> DecisionTree:
    """Greedy top-down induction; gain_ratio mode prunes pessimistically."""
    if criterion not in ("information_gain", "gain_ratio"):
        raise ValueError(f"unknown criterion {criterion!r}")
    X_binned = np.asarray(X_binned, dtype=np.int32)
    y = np.asarray(y, dtype=bool)
    if X_binned.ndim != 2 or len(X_binned) == 0:
        raise ValueError("need a non-empty 2D binned matrix")
    if len(y) != len(X_binned):
        raise ValueError("labels must align with rows")

    n_bins = int(X_binned.max()) + 1 if X_binned.size else 1
    root = _grow(X_binned, y, np.arange(len(y)), criterion, 0, max_depth, n_bins)
    if criterion == "gain_ratio":
        _prune(root)
    return DecisionTree(root=root, criterion=criterion, n_columns=X_binned.shape[1])


def _grow(X, y, rows, criterion, depth, max_depth, n_bins) -> TreeNode:
    n = len(rows)
    n_pos = int(y[rows].sum())
    node = TreeNode(n=n, n_pos=n_pos, probability=n_pos / n)
    if n_pos == 0 or n_pos == n or depth >= max_depth or n < 2:
        return node

    col, score = _best_split(X, y, rows, criterion, n_bins)
    if col is None:
        return node

    node.column = col
    bins = X[rows, col]
    order = np.argsort(bins, kind="stable")
    sorted_rows = rows[order]
    sorted_bins = bins[order]
    starts = np.flatnonzero(np.concatenate([[True], sorted_bins[1:] != sorted_bins[:-1]]))
    bounds = np.concatenate([starts, [n]])
    for k in range(len(starts)):
        child_rows = sorted_rows[bounds[k]:bounds[k + 1]]
        node.children[int(sorted_bins[starts[k]])] = _grow(
            X, y, child_rows, criterion, depth + 1, max_depth, n_bins)
    return node


def _best_split(X, y, rows, criterion, n_bins):
    """Best (column, criterion value); zero-gain multi-valued columns are a
    last resort for impure nodes, never preferred over positive gain."""
    n = len(rows)
    n_pos = int(y[rows].sum())
    parent_h = _entropy(n_pos, n)
    yb = y[rows].astype(np.int64)

    best_col, best_score = None, 0.0
    fallback_col = None
    for j in range(X.shape[1]):
        counts = np.bincount(X[rows, j] * 2 + yb, minlength=n_bins * 2).reshape(-1, 2)
        totals = counts.sum(axis=1)
        present = totals > 0
        if present.sum() < 2:
            continue  # single-valued here: splitting is a no-op
        if fallback_col is None:
            fallback_col = j
        tot = totals[present].astype(np.float64)
        pos = counts[present, 1].astype(np.float64)
        frac = tot / n
        child_h = np.zeros(len(tot))
        inner = (pos > 0) & (pos < tot)
        if inner.any():
            p = pos[inner] / tot[inner]
            child_h[inner] = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
        gain = parent_h - float((frac * child_h).sum())
        if criterion == "gain_ratio":
            split_info = float(-(frac * np.log2(frac)).sum())
            if split_info <= 0.0:
                continue  # zero split information: never selectable
            score = gain / split_info if gain > 0 else 0.0
        else:
            score = gain
        if score > best_score:
            best_col, best_score = j, score
    if best_col is not None:
        return best_col, best_score
    return (fallback_col, 0.0) if fallback_col is not None else (None, 0.0)


def _pessimistic_errors(n_errors: int, n: int) -> float:
    """Upper confidence bound on the error count of a leaf (CF=0.25)."""
    if n == 0:
        return 0.0
    z = _Z_CF25
    f = n_errors / n
    ub = (f + z * z / (2 * n)
          + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return ub * n


def _prune(node: TreeNode) -> float:
    """Collapse subtrees whose pessimistic error is no better than a leaf."""
    leaf_errors = _pessimistic_errors(min(node.n_pos, node.n - node.n_pos), node.n)
    if node.is_leaf:
        return leaf_errors
    subtree_errors = sum(_prune(c) for c in node.children.values())
    if leaf_errors <= subtree_errors:
        node.column = None
        node.children = {}
        return leaf_errors
    return subtree_errors
