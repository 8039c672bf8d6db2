"""T+1 orchestration, evaluation metrics, and the hyperparameter sweep.

A run slices the input records into network / train / test windows,
builds the transaction network from the long window, learns node
embeddings when the feature mode asks for them, trains the chosen
detector on the train window, scores the test day, and (optionally)
publishes per-user features + embeddings to a store version stamped with
the test date. Everything derives its randomness from the single pipeline
seed, so a run is replayable end to end.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass, field
from datetime import date
from importlib import resources

import numpy as np

from . import detect
from .detect import DetectorModel
from .embed import (EmbeddingMatrix, SkipGramConfig, WalkConfig, generate_walks,
                    train_skipgram, train_skipgram_distributed)
from .graph import build_network
from .ingest import (N_BASIC_FEATURES, RecordFrame, SyntheticConfig, WindowSpec,
                     as_frame, generate_synthetic_frame, slice_windows)
from .store import FeatureStore

FEATURE_MODES = ("basic_only", "basic_plus_embedding")
DETECTORS = ("gbdt", "lr", "id3", "c50", "iforest")


@dataclass(frozen=True)
class PipelineConfig:
    window: WindowSpec
    walk: WalkConfig = WalkConfig()
    sgns: SkipGramConfig = SkipGramConfig()
    detector: str = "gbdt"
    detector_params: dict = field(default_factory=dict)
    feature_mode: str = "basic_plus_embedding"
    bins: int = 200
    threshold: float = 0.5
    threshold_mode: str = "fixed"
    num_workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.detector not in DETECTORS:
            raise ValueError(f"detector must be one of {DETECTORS}")
        if self.feature_mode not in FEATURE_MODES:
            raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
        if self.threshold_mode not in ("fixed", "best"):
            raise ValueError("threshold_mode must be 'fixed' or 'best'")


@dataclass
class EvalReport:
    f1: float
    precision: float
    recall: float
    threshold: float
    threshold_mode: str
    tp: int
    fp: int
    fn: int
    tn: int
    rec_at_top_frac: dict = field(default_factory=dict)

    def counts_total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# Metrics


def f1_score(scores, labels, threshold: float = 0.5) -> EvalReport:
    """Precision/recall/F1 at `score >= threshold`; 0/0 ratios become 0."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    pred = scores >= threshold
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    tn = int(np.sum(~pred & ~labels))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(f1=f1, precision=precision, recall=recall,
                      threshold=threshold, threshold_mode="fixed",
                      tp=tp, fp=fp, fn=fn, tn=tn)


def recall_at_top_frac(scores, labels, frac: float = 0.01) -> float:
    """Recall restricted to the ceil(frac*n) highest-scored rows; ties are
    broken by stable input order. No fraud labels at all -> 0 + warning."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have equal length")
    if not 0.0 < frac <= 1.0:
        raise ValueError("frac must be in (0, 1]")
    total_fraud = int(labels.sum())
    if total_fraud == 0:
        warnings.warn("recall_at_top_frac: no fraud labels; defining recall as 0")
        return 0.0
    k = int(np.ceil(frac * len(scores)))
    top = np.argsort(-scores, kind="stable")[:k]
    return float(labels[top].sum() / total_fraud)


def evaluate(scores, labels, threshold: float = 0.5, threshold_mode: str = "fixed",
             top_fracs=(0.01,)) -> EvalReport:
    """Full report; threshold_mode="best" sweeps observed scores for max F1."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if threshold_mode == "best":
        candidates = np.unique(scores)
        best = None
        for t in candidates:
            r = f1_score(scores, labels, float(t))
            if best is None or r.f1 > best.f1:
                best = r
        report = best if best is not None else f1_score(scores, labels, threshold)
        report.threshold_mode = "best"
    else:
        report = f1_score(scores, labels, threshold)
    for frac in top_fracs:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report.rec_at_top_frac[float(frac)] = recall_at_top_frac(scores, labels, frac)
    return report


# ---------------------------------------------------------------------------
# Feature assembly


def assemble_features(frame: RecordFrame, embedding: EmbeddingMatrix | None,
                      feature_mode: str) -> np.ndarray:
    """Per-transaction vectors: the record's 52 basic features, plus the
    transferor's embedding row (zeros for users outside the network)."""
    if feature_mode == "basic_only":
        return frame.features.copy()
    if embedding is None:
        raise ValueError("basic_plus_embedding requires an embedding matrix")
    emb = np.zeros((len(frame), embedding.dim), dtype=np.float64)
    for i, u in enumerate(frame.transferors):
        r = embedding.row_of(u)
        if r is not None:
            emb[i] = embedding.rows[r]
    return np.concatenate([frame.features, emb], axis=1)


def user_basic_profile(users: list[str], frames: list[RecordFrame]) -> np.ndarray:
    """Mean 52-vector per user over their transferor rows; zeros if none."""
    index = {u: i for i, u in enumerate(users)}
    acc = np.zeros((len(users), N_BASIC_FEATURES))
    cnt = np.zeros(len(users))
    for frame in frames:
        rows = np.array([index.get(u, -1) for u in frame.transferors], dtype=np.int64)
        ok = rows >= 0
        np.add.at(acc, rows[ok], frame.features[ok])
        np.add.at(cnt, rows[ok], 1.0)
    nz = cnt > 0
    acc[nz] /= cnt[nz, None]
    return acc


# ---------------------------------------------------------------------------
# T+1 run


def _derive_seed(seed: int, stream: int) -> int:
    return (seed * 1_000_003 + stream * 7_777_777) % (2 ** 63)


def train_detector(X: np.ndarray, y: np.ndarray, cfg: PipelineConfig,
                   version_date: date | None = None) -> DetectorModel:
    """Train the configured family on raw features; owns discretization."""
    params = dict(cfg.detector_params)
    seed = _derive_seed(cfg.seed, 3)
    if cfg.detector == "gbdt":
        est = detect.train_gbdt(X, y, seed=params.pop("seed", seed), **params)
        disc = None
    elif cfg.detector == "iforest":
        est = detect.train_iforest(X, seed=params.pop("seed", seed), **params)
        disc = None
    elif cfg.detector == "lr":
        disc = detect.fit_discretizer(X, bins=cfg.bins)
        est = detect.train_lr(disc.transform(X), y, **params)
    elif cfg.detector in ("id3", "c50"):
        disc = detect.fit_discretizer(X, bins=cfg.bins)
        criterion = "information_gain" if cfg.detector == "id3" else "gain_ratio"
        est = detect.train_tree(disc.transform(X), y, criterion=criterion, **params)
    else:
        raise ValueError(f"unknown detector {cfg.detector!r}")
    return DetectorModel(kind=cfg.detector, estimator=est, feature_arity=X.shape[1],
                         discretizer=disc, version_date=version_date)


def run_t_plus_1(records, labels, cfg: PipelineConfig, store: FeatureStore | None = None,
                 model_path=None, embeddings_path=None):
    """One offline training cycle. Returns (model, embeddings?, report).

    Embeddings and the discretizer only ever see the network/train
    windows; the test window is touched exactly once, for scoring.
    """
    frame = as_frame(records)
    network_frame, train_frame, test_frame = slice_windows(frame, labels, cfg.window)

    net = build_network(network_frame)
    embedding = None
    if cfg.feature_mode == "basic_plus_embedding":
        walk_cfg = dataclasses.replace(cfg.walk, seed=_derive_seed(cfg.seed, 1))
        sgns_cfg = dataclasses.replace(cfg.sgns, seed=_derive_seed(cfg.seed, 2))
        corpus = generate_walks(net, walk_cfg)
        if cfg.num_workers == 1:
            embedding = train_skipgram(corpus, sgns_cfg)
        else:
            embedding = train_skipgram_distributed(corpus, sgns_cfg, cfg.num_workers)
        embedding.version_date = cfg.window.test_date

    X_train = assemble_features(train_frame, embedding, cfg.feature_mode)
    X_test = assemble_features(test_frame, embedding, cfg.feature_mode)

    model = train_detector(X_train, train_frame.y, cfg, version_date=cfg.window.test_date)
    scores = model.predict_scores(X_test)
    report = evaluate(scores, test_frame.y, threshold=cfg.threshold,
                      threshold_mode=cfg.threshold_mode)

    if store is not None:
        dim = embedding.dim if embedding is not None else cfg.sgns.dim
        basic = user_basic_profile(net.users, [network_frame, train_frame])
        emb_rows = embedding.rows if embedding is not None else np.zeros((net.n_nodes, dim), dtype=np.float32)
        rows = {u: (basic[i], np.asarray(emb_rows[i], dtype=np.float64))
                for i, u in enumerate(net.users)}
        store.publish_version(cfg.window.test_date, rows)
    if model_path is not None:
        detect.save_model(model, model_path)
    if embeddings_path is not None and embedding is not None:
        from .embed import save_embeddings
        save_embeddings(embedding, embeddings_path)
    return model, embedding, report


# ---------------------------------------------------------------------------
# Sweep harness


SWEEP_AXES = ("embedding_dim", "gbdt_trees", "samples_per_node")


@dataclass
class SweepRow:
    value: float
    mean_f1: float
    std_f1: float
    f1s: list[float]


def sweep(records, labels, cfg: PipelineConfig, axis: str, values,
          repeats: int = 10) -> list[SweepRow]:
    """Full pipeline per (value, repetition); repetitions reseed the run."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    if not len(values):
        raise ValueError("values must be non-empty")
    frame = as_frame(records)
    rows = []
    for v in values:
        f1s = []
        for r in range(repeats):
            run_cfg = _with_axis(cfg, axis, v)
            run_cfg = dataclasses.replace(run_cfg, seed=cfg.seed + 1000 * r)
            _, _, report = run_t_plus_1(frame, labels, run_cfg)
            f1s.append(report.f1)
        rows.append(SweepRow(value=v, mean_f1=float(np.mean(f1s)),
                             std_f1=float(np.std(f1s)), f1s=f1s))
    return rows


def _with_axis(cfg: PipelineConfig, axis: str, value) -> PipelineConfig:
    if axis == "embedding_dim":
        return dataclasses.replace(cfg, sgns=dataclasses.replace(cfg.sgns, dim=int(value)))
    if axis == "gbdt_trees":
        if cfg.detector != "gbdt":
            raise ValueError("gbdt_trees axis requires the gbdt detector")
        params = dict(cfg.detector_params)
        params["n_trees"] = int(value)
        return dataclasses.replace(cfg, detector_params=params)
    params = dataclasses.replace(cfg.walk, samples_per_node=int(value))
    return dataclasses.replace(cfg, walk=params)


def sweep_table(rows: list[SweepRow]) -> str:
    """Plot-ready delimited text with a header row."""
    lines = ["value\tmean_f1\tstd_f1\tn"]
    for r in rows:
        lines.append(f"{r.value}\t{r.mean_f1:.6f}\t{r.std_f1:.6f}\t{len(r.f1s)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# The checked-in standard dataset + pipeline configuration


def standard_synthetic_config(seed: int | None = None) -> SyntheticConfig:
    raw = _load_standard()["synthetic"]
    if seed is not None:
        raw = dict(raw, seed=seed)
    raw["start_date"] = date.fromisoformat(raw["start_date"])
    return SyntheticConfig(**raw)


def standard_pipeline_config(detector: str = "gbdt",
                             feature_mode: str = "basic_plus_embedding",
                             seed: int = 0, **overrides) -> PipelineConfig:
    raw = _load_standard()["pipeline"]
    window = WindowSpec(test_date=date.fromisoformat(raw["test_date"]),
                        network_days=raw["network_days"], train_days=raw["train_days"])
    walk = WalkConfig(walk_length=raw["walk_length"],
                      samples_per_node=raw["samples_per_node"])
    sgns = SkipGramConfig(dim=raw["dim"], context_window=raw["context_window"],
                          negatives_per_positive=raw["negatives_per_positive"],
                          learning_rate=raw["learning_rate"], epochs=raw["epochs"])
    cfg = PipelineConfig(window=window, walk=walk, sgns=sgns, detector=detector,
                         feature_mode=feature_mode, bins=raw["bins"], seed=seed)
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def standard_dataset(seed: int | None = None):
    """The acceptance fixture: generated on demand from the checked-in cfg."""
    return generate_synthetic_frame(standard_synthetic_config(seed))


def _load_standard() -> dict:
    with resources.files("titant").joinpath("configs/standard.json").open() as fh:
        return json.load(fh)
