"""Shared detector plumbing: feature layout and the uniform predict contract.

Every detector family scores rows of the same feature layout: 52 basic
features first, embedding dimensions second. Models are wrapped in
DetectorModel so the pipeline and the scoring server can treat all four
families identically (raw features in, score in [0, 1] out); the wrapper
owns the discretizer for the families that need binned input.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from ..ingest import N_BASIC_FEATURES


def concat_features(basic: np.ndarray, embedding: np.ndarray) -> np.ndarray:
    """Fixed layout: output[0..52) = basic, output[52..) = embedding."""
    basic = np.asarray(basic, dtype=np.float64)
    embedding = np.asarray(embedding, dtype=np.float64)
    if basic.shape[-1] != N_BASIC_FEATURES:
        raise ValueError(f"expected {N_BASIC_FEATURES} basic features, got {basic.shape[-1]}")
    if embedding.ndim != basic.ndim:
        raise ValueError("basic and embedding blocks must have matching rank")
    return np.concatenate([basic, embedding], axis=-1)


def split_features(x: np.ndarray, dim: int):
    """Inverse of concat_features for a known embedding size."""
    x = np.asarray(x)
    if x.shape[-1] != N_BASIC_FEATURES + dim:
        raise ValueError(
            f"expected arity {N_BASIC_FEATURES + dim}, got {x.shape[-1]}")
    return x[..., :N_BASIC_FEATURES], x[..., N_BASIC_FEATURES:]


@dataclass
class DetectorModel:
    """A trained detector plus the preprocessing it was trained with.

    kind is one of {"id3", "c50", "iforest", "lr", "gbdt"}. discretizer is
    set for the families trained on binned input (trees, lr) and None for
    the ones that split raw values (gbdt, iforest).
    """

    kind: str
    estimator: object
    feature_arity: int
    discretizer: object = None
    version_date: date | None = None

    def predict_scores(self, X) -> np.ndarray:
        """Fraud scores in [0, 1] for raw feature rows (1D or 2D input)."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.feature_arity:
            raise ValueError(
                f"model expects arity {self.feature_arity}, got {X.shape[1]}")
        if self.discretizer is not None:
            X = self.discretizer.transform(X)
        scores = self.estimator.predict_scores(X)
        return float(scores[0]) if single else scores


def predict(model: DetectorModel, x):
    """Score one feature vector (or a matrix of them) with any family."""
    return model.predict_scores(x)
