"""Detector families sharing one predict contract: score in [0, 1]."""

from .base import DetectorModel, concat_features, predict, split_features
from .discretize import Discretizer, apply_discretizer, fit_discretizer
from .gbdt import GbdtModel, train_gbdt
from .iforest import IsolationForestModel, score_iforest, train_iforest
from .io import deserialize_model, load_model, save_model, serialize_model
from .linear import LinearModel, train_lr
from .trees import DecisionTree, train_tree

__all__ = [
    "DetectorModel", "concat_features", "predict", "split_features",
    "Discretizer", "apply_discretizer", "fit_discretizer",
    "GbdtModel", "train_gbdt",
    "IsolationForestModel", "score_iforest", "train_iforest",
    "deserialize_model", "load_model", "save_model", "serialize_model",
    "LinearModel", "train_lr",
    "DecisionTree", "train_tree",
]
