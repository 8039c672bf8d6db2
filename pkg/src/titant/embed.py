"""Node embeddings: weighted random walks + skip-gram with negative sampling.

Walks run over the undirected view of the transaction network so the
2-hop neighbourhoods around a heavily-transacted-with account are visible
from both sides of an edge; transition probabilities are proportional to
edge weight (transfer count).

Training follows the word2vec conventions the walk corpus calls for:
center ("input") vectors initialized uniform in [-0.5/dim, +0.5/dim],
context vectors at zero, negatives drawn from the unigram distribution
raised to 0.75, learning rate decaying linearly to 1% of its start value
over all pairs, and only center vectors exported. The inner SGD loop is a
numba kernel; pair streams and negative draws are prepared in numpy so
all randomness flows from seeded Generators.

Multi-worker training simulates a parameter-server contract in process:
each round, every worker pulls the current matrices, trains on the next
slice of its walk shard, and pushes its rows back; the server replaces
each touched row with the mean over the workers that touched it. One
worker reduces exactly to plain sequential training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np
from numba import njit

from .graph import TransactionNetwork, as_undirected

_WALK_STREAM = 11
_INIT_STREAM = 13
_WORKER_STREAM = 101


@dataclass(frozen=True)
class WalkConfig:
    walk_length: int = 50
    samples_per_node: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.samples_per_node < 1:
            raise ValueError("samples_per_node must be >= 1")


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 32
    context_window: int = 5
    negatives_per_positive: int = 5
    learning_rate: float = 0.025
    epochs: int = 1
    seed: int = 0
    # Walks handed to a worker between two synchronization points. Also
    # the pair-buffer granularity in single-worker mode (no effect on the
    # result there: the kernel is sequential and draws are stream-stable).
    round_walks: int = 65536

    def __post_init__(self):
        if self.dim < 1 or self.context_window < 1 or self.negatives_per_positive < 1:
            raise ValueError("dim, context_window, negatives_per_positive must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


class WalkCorpus:
    """Fixed-width walk buffer; rows padded with -1 beyond their length."""

    def __init__(self, walks: np.ndarray, lengths: np.ndarray, users: list[str]):
        self.walks = walks
        self.lengths = lengths
        self.users = users
        self.n_nodes = len(users)

    def __len__(self):
        return len(self.walks)

    def n_pairs(self, window: int) -> int:
        """Ordered (center, context) pairs a window sweep will produce."""
        total = 0
        for d in range(1, window + 1):
            total += 2 * int(np.maximum(self.lengths - d, 0).sum())
        return total

    def token_counts(self) -> np.ndarray:
        flat = self.walks.ravel()
        return np.bincount(flat[flat >= 0], minlength=self.n_nodes)


def generate_walks(net: TransactionNetwork, cfg: WalkConfig) -> WalkCorpus:
    """samples_per_node walks from every node; next step ~ edge weight.

    Walks starting at an isolated node stop at length 1; in the undirected
    view no other dead ends exist. Deterministic given cfg.seed.
    """
    und = as_undirected(net)
    n = und.n_nodes
    if n == 0:
        raise ValueError("empty network")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, _WALK_STREAM])))

    aug = _row_cumulative(und)
    degree = np.diff(und.indptr)
    L = cfg.walk_length

    walks = np.full((n * cfg.samples_per_node, L), -1, dtype=np.int32)
    lengths = np.empty(n * cfg.samples_per_node, dtype=np.int32)

    for p in range(cfg.samples_per_node):
        starts = rng.permutation(n)
        block = slice(p * n, (p + 1) * n)
        walks[block, 0] = starts
        alive = np.flatnonzero(degree[starts] > 0)
        lengths[block] = np.where(degree[starts] > 0, L, 1)
        cur = starts[alive].astype(np.int64)
        for step in range(1, L):
            if len(cur) == 0:
                break
            keys = cur + rng.random(len(cur))
            pos = np.searchsorted(aug, keys, side="right")
            cur = und.indices[pos]
            walks[p * n + alive, step] = cur
    return WalkCorpus(walks, lengths, list(und.users))


def _row_cumulative(net: TransactionNetwork) -> np.ndarray:
    """aug[e] = row(e) + cumulative weight fraction, for O(log E) sampling.

    A draw for node u is found by searchsorted(aug, u + r) with r in [0,1):
    per-row fractions ascend to exactly 1.0, so keys stay inside row u.
    """
    w = net.weights
    indptr = net.indptr
    c = np.cumsum(w)
    starts = indptr[:-1]
    ends = indptr[1:]
    base = np.where(starts > 0, c[np.maximum(starts - 1, 0)], 0.0)
    totals = np.where(ends > starts, c[np.maximum(ends - 1, 0)] - base, 1.0)
    row_of = np.repeat(np.arange(net.n_nodes), np.diff(indptr))
    aug = row_of + (c - base[row_of]) / totals[row_of]
    nonempty = ends > starts
    aug[ends[nonempty] - 1] = np.flatnonzero(nonempty) + 1.0
    return aug


# ---------------------------------------------------------------------------
# Skip-gram with negative sampling


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -30.0, 30.0)))


def pair_loss(center_vec, other_vec, positive: bool) -> float:
    """-log sigma(x) for a co-occurring pair, -log sigma(-x) for a negative."""
    x = float(np.dot(center_vec, other_vec))
    if positive:
        return float(-np.log(sigmoid(x)))
    return float(-np.log(sigmoid(-x)))


def pair_grad(center_vec, other_vec, positive: bool):
    """(d loss / d center, d loss / d other) for the pair loss above."""
    x = float(np.dot(center_vec, other_vec))
    g = sigmoid(x) - (1.0 if positive else 0.0)
    return g * np.asarray(other_vec), g * np.asarray(center_vec)


@njit(cache=True, fastmath=False)
def _sgd_kernel(V, U, centers, contexts, negs, lr0, lr_min, pair_offset, total_pairs):
    """Sequential SGD over a pair stream; one positive and K negative steps
    per pair, skipping negatives that collide with the true context."""
    n_pairs = centers.shape[0]
    K = negs.shape[1]
    d = V.shape[1]
    loss = 0.0
    inv_total = 1.0 / total_pairs
    for i in range(n_pairs):
        lr = np.float32(lr0 + (lr_min - lr0) * ((pair_offset + i) * inv_total))
        c = centers[i]
        o = contexts[i]
        x = np.float32(0.0)
        for j in range(d):
            x += V[c, j] * U[o, j]
        xc = min(max(x, np.float32(-30.0)), np.float32(30.0))
        s = np.float32(1.0) / (np.float32(1.0) + np.float32(math.exp(-xc)))
        loss += -math.log(max(s, 1e-12))
        g = (s - np.float32(1.0)) * lr
        for j in range(d):
            dv = g * U[o, j]
            U[o, j] -= g * V[c, j]
            V[c, j] -= dv
        for k in range(K):
            nid = negs[i, k]
            if nid == o:
                continue
            x = np.float32(0.0)
            for j in range(d):
                x += V[c, j] * U[nid, j]
            xc = min(max(x, np.float32(-30.0)), np.float32(30.0))
            s = np.float32(1.0) / (np.float32(1.0) + np.float32(math.exp(-xc)))
            loss += -math.log(max(1.0 - s, 1e-12))
            g = s * lr
            for j in range(d):
                dv = g * U[nid, j]
                U[nid, j] -= g * V[c, j]
                V[c, j] -= dv
    return loss


@dataclass
class EmbeddingMatrix:
    """|V| x dim center-role vectors; row i represents node i of the source
    network. epoch_losses records the mean pair loss per training epoch."""

    rows: np.ndarray
    users: list[str]
    version_date: date | None = None
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        self._user_to_row = {u: i for i, u in enumerate(self.users)}

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def row_of(self, user: str):
        return self._user_to_row.get(user)


@dataclass(frozen=True)
class LookupResult:
    vector: np.ndarray
    cold_start: bool


def lookup_embedding(matrix: EmbeddingMatrix, user_id: str) -> LookupResult:
    """Row for a known user; zero vector with cold_start=True otherwise."""
    i = matrix.row_of(user_id)
    if i is None:
        return LookupResult(np.zeros(matrix.dim, dtype=matrix.rows.dtype), True)
    return LookupResult(matrix.rows[i], False)


def train_skipgram(corpus: WalkCorpus, cfg: SkipGramConfig) -> EmbeddingMatrix:
    if len(corpus) == 0:
        raise ValueError("empty walk corpus")
    return _train(corpus, cfg, num_workers=1)


def train_skipgram_distributed(corpus: WalkCorpus, cfg: SkipGramConfig,
                               num_workers: int) -> EmbeddingMatrix:
    if num_workers < 1:
        raise ValueError("num_workers must be >= 1")
    if num_workers > len(corpus):
        raise ValueError(
            f"cannot shard {len(corpus)} walks across {num_workers} workers"
        )
    return _train(corpus, cfg, num_workers=num_workers)


def _noise_cumulative(corpus: WalkCorpus) -> np.ndarray:
    p = corpus.token_counts().astype(np.float64) ** 0.75
    total = p.sum()
    if total <= 0:
        p = np.ones(corpus.n_nodes)
        total = p.sum()
    cum = np.cumsum(p / total)
    cum[-1] = 1.0
    return cum


def _chunk_pairs(walks: np.ndarray, lengths: np.ndarray, window: int):
    """All ordered (center, context) pairs of a walk block, offset-major."""
    L = walks.shape[1]
    cs, os_ = [], []
    for d in range(1, window + 1):
        if d >= L:
            break
        valid = np.arange(L - d) < (lengths - d)[:, None]
        a = walks[:, : L - d][valid]
        b = walks[:, d:][valid]
        cs.append(a)
        os_.append(b)
        cs.append(b)
        os_.append(a)
    if not cs:
        return (np.empty(0, dtype=np.int32),) * 2
    return np.concatenate(cs), np.concatenate(os_)


class _Worker:
    def __init__(self, walk_lo, walk_hi, seed, wid, corpus, cfg):
        self.lo, self.hi = walk_lo, walk_hi
        self.rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([seed, _WORKER_STREAM, wid])))
        shard_lengths = corpus.lengths[walk_lo:walk_hi]
        per_epoch = 0
        for d in range(1, cfg.context_window + 1):
            per_epoch += 2 * int(np.maximum(shard_lengths - d, 0).sum())
        self.total_pairs = max(per_epoch * cfg.epochs, 1)
        self.pairs_done = 0
        self.cursor = walk_lo

    def start_epoch(self):
        self.cursor = self.lo

    def next_chunk(self, corpus, cfg):
        if self.cursor >= self.hi:
            return None
        end = min(self.cursor + cfg.round_walks, self.hi)
        block = slice(self.cursor, end)
        self.cursor = end
        return _chunk_pairs(corpus.walks[block], corpus.lengths[block], cfg.context_window)


def _train(corpus: WalkCorpus, cfg: SkipGramConfig, num_workers: int) -> EmbeddingMatrix:
    n = corpus.n_nodes
    init_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([cfg.seed, _INIT_STREAM])))
    V = ((init_rng.random((n, cfg.dim)) - 0.5) / cfg.dim).astype(np.float32)
    U = np.zeros((n, cfg.dim), dtype=np.float32)

    noise_cum = _noise_cumulative(corpus)
    bounds = np.linspace(0, len(corpus), num_workers + 1).astype(np.int64)
    workers = [
        _Worker(int(bounds[w]), int(bounds[w + 1]), cfg.seed, w, corpus, cfg)
        for w in range(num_workers)
    ]
    lr0 = cfg.learning_rate
    lr_min = lr0 / 100.0

    epoch_losses = []
    for _ in range(cfg.epochs):
        loss_sum = 0.0
        pair_count = 0
        for w in workers:
            w.start_epoch()
        while True:
            active = []
            for w in workers:
                chunk = w.next_chunk(corpus, cfg)
                if chunk is not None:
                    active.append((w, chunk))
            if not active:
                break
            if num_workers == 1:
                # Pull/push with a single worker degenerates to training the
                # server state in place.
                pushes = [(workers[0], V, U, active[0][1])]
            else:
                pushes = [(w, V.copy(), U.copy(), chunk) for w, chunk in active]

            touched_v = np.zeros(n, dtype=bool) if num_workers > 1 else None
            acc = None
            for w, Vw, Uw, (centers, contexts) in pushes:
                if len(centers) == 0:
                    continue
                negs = np.searchsorted(
                    noise_cum, w.rng.random((len(centers), cfg.negatives_per_positive))
                ).astype(np.int32)
                loss = _sgd_kernel(
                    Vw, Uw, centers.astype(np.int32), contexts.astype(np.int32), negs,
                    lr0, lr_min, w.pairs_done, w.total_pairs,
                )
                w.pairs_done += len(centers)
                loss_sum += loss
                pair_count += len(centers) * (1 + cfg.negatives_per_positive)
                if num_workers > 1:
                    tv = np.zeros(n, dtype=bool)
                    tv[centers] = True
                    tu = np.zeros(n, dtype=bool)
                    tu[contexts] = True
                    tu[negs.ravel()] = True
                    if acc is None:
                        acc = (np.zeros((n, cfg.dim)), np.zeros(n, dtype=np.int64),
                               np.zeros((n, cfg.dim)), np.zeros(n, dtype=np.int64))
                    acc[0][tv] += Vw[tv]
                    acc[1][tv] += 1
                    acc[2][tu] += Uw[tu]
                    acc[3][tu] += 1
            if num_workers > 1 and acc is not None:
                accV, cntV, accU, cntU = acc
                sel = cntV > 0
                V[sel] = (accV[sel] / cntV[sel, None]).astype(np.float32)
                sel = cntU > 0
                U[sel] = (accU[sel] / cntU[sel, None]).astype(np.float32)
        epoch_losses.append(loss_sum / max(pair_count, 1))
    return EmbeddingMatrix(rows=V, users=list(corpus.users), epoch_losses=epoch_losses)


# ---------------------------------------------------------------------------
# Embedding file format: `<n> <dim> <version_date>` header, then one line
# per node `user_id v1 ... v_dim` with 6 decimal places.


def save_embeddings(matrix: EmbeddingMatrix, path) -> None:
    vd = matrix.version_date.isoformat() if matrix.version_date else "-"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(matrix.users)} {matrix.dim} {vd}\n")
        for i, u in enumerate(matrix.users):
            vals = " ".join(f"{v:.6f}" for v in matrix.rows[i].tolist())
            fh.write(f"{u} {vals}\n")


def load_embeddings(path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        n_s, dim_s, vd = fh.readline().split()
        n, dim = int(n_s), int(dim_s)
        rows = np.empty((n, dim), dtype=np.float32)
        users = []
        for i in range(n):
            parts = fh.readline().split()
            users.append(parts[0])
            rows[i] = [float(x) for x in parts[1:]]
    version = None if vd == "-" else date.fromisoformat(vd)
    return EmbeddingMatrix(rows=rows, users=users, version_date=version)
