"""Equal-frequency discretization for the rule-based and linear detectors.

Each column gets up to ``bins`` quantile bins; duplicate quantile edges
collapse, so skewed or constant columns end up with fewer effective bins.
Values outside the training range clamp to the first or last bin, making
the mapping total.
"""

from __future__ import annotations

import numpy as np


class Discretizer:
    """Per-column ascending interior edges; bin id = count of edges <= x."""

    def __init__(self, edges: list[np.ndarray], bins: int):
        self.edges = [np.asarray(e, dtype=np.float64) for e in edges]
        self.bins = bins

    @property
    def n_columns(self) -> int:
        return len(self.edges)

    @property
    def bins_per_column(self) -> np.ndarray:
        return np.array([len(e) + 1 for e in self.edges], dtype=np.int64)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_columns:
            raise ValueError(f"expected {self.n_columns} columns, got {X.shape[1]}")
        out = np.empty(X.shape, dtype=np.int32)
        for j, e in enumerate(self.edges):
            out[:, j] = np.searchsorted(e, X[:, j], side="right")
        return out[0] if single else out


def fit_discretizer(X: np.ndarray, bins: int = 200) -> Discretizer:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("need a non-empty 2D matrix to fit bins")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    qs = np.arange(1, bins) / bins
    edges = []
    for j in range(X.shape[1]):
        col = X[:, j]
        e = np.unique(np.quantile(col, qs)) if bins > 1 else np.array([])
        # An edge equal to the column maximum would leave its last bin
        # empty on the training data; drop it so ids stay dense.
        e = e[e < col.max()] if len(e) else e
        edges.append(e)
    return Discretizer(edges, bins)


def apply_discretizer(disc: Discretizer, X: np.ndarray) -> np.ndarray:
    return disc.transform(X)
