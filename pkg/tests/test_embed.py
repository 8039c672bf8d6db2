import dataclasses

import numpy as np
import pytest

from titant.embed import (EmbeddingMatrix, SkipGramConfig, WalkConfig, WalkCorpus,
                          generate_walks, load_embeddings, lookup_embedding,
                          pair_grad, pair_loss, save_embeddings, train_skipgram,
                          train_skipgram_distributed)
from titant.graph import as_undirected, build_network, out_neighbors
from tests.test_graph import records_of


def two_clique_records(k=10):
    """Two disjoint k-cliques (one transfer per ordered pair)."""
    pairs = []
    for base in ("a", "b"):
        for i in range(k):
            for j in range(k):
                if i != j:
                    pairs.append((f"{base}{i}", f"{base}{j}"))
    return records_of(pairs)


class TestWalks:
    def test_two_node_forced_path(self):
        net = build_network(records_of([("A", "B")]))
        corpus = generate_walks(net, WalkConfig(walk_length=3, samples_per_node=1, seed=0))
        walks = {tuple(w) for w in corpus.walks.tolist()}
        a, b = net.node_id("A"), net.node_id("B")
        assert walks == {(a, b, a), (b, a, b)}

    def test_isolated_node_walk_length_one(self):
        net = build_network(records_of([("A", "A"), ("B", "C")]))
        corpus = generate_walks(net, WalkConfig(walk_length=5, samples_per_node=2, seed=0))
        a = net.node_id("A")
        for w, ln in zip(corpus.walks, corpus.lengths):
            if w[0] == a:
                assert ln == 1
                assert all(x == -1 for x in w[1:])

    def test_corpus_size_and_starts(self):
        net = build_network(records_of([("A", "B"), ("B", "C"), ("C", "A")]))
        cfg = WalkConfig(walk_length=4, samples_per_node=7, seed=1)
        corpus = generate_walks(net, cfg)
        assert len(corpus) == net.n_nodes * 7
        starts = corpus.walks[:, 0]
        assert np.bincount(starts, minlength=3).tolist() == [7, 7, 7]

    def test_walks_are_paths_in_undirected_view(self):
        net = build_network(records_of([("A", "B"), ("B", "C"), ("C", "D"), ("A", "D")]))
        und = as_undirected(net)
        nbrs = {u: {v for v, _ in out_neighbors(und, u)} for u in range(und.n_nodes)}
        corpus = generate_walks(net, WalkConfig(walk_length=6, samples_per_node=5, seed=2))
        for w, ln in zip(corpus.walks.tolist(), corpus.lengths.tolist()):
            assert all(x >= 0 for x in w[:ln])
            for a, b in zip(w[: ln - 1], w[1:ln]):
                assert b in nbrs[a]

    def test_transition_probability_tracks_weights(self):
        # Path A-B-C with weights 3 and 1: from B the next step is A with
        # probability 3/4; Monte-Carlo over 1e5 walks.
        records = records_of([("A", "B")] * 3 + [("B", "C")])
        net = build_network(records)
        corpus = generate_walks(net, WalkConfig(walk_length=2, samples_per_node=100_000, seed=3))
        b, a = net.node_id("B"), net.node_id("A")
        from_b = corpus.walks[corpus.walks[:, 0] == b]
        frac_a = np.mean(from_b[:, 1] == a)
        assert 0.74 <= frac_a <= 0.76

    def test_deterministic_given_seed(self):
        net = build_network(two_clique_records(5))
        c1 = generate_walks(net, WalkConfig(walk_length=5, samples_per_node=3, seed=9))
        c2 = generate_walks(net, WalkConfig(walk_length=5, samples_per_node=3, seed=9))
        assert np.array_equal(c1.walks, c2.walks)

    def test_pair_count_formula(self):
        net = build_network(records_of([("A", "B"), ("B", "C")]))
        corpus = generate_walks(net, WalkConfig(walk_length=5, samples_per_node=2, seed=0))
        window = 2
        expected = 0
        for ln in corpus.lengths.tolist():
            for d in range(1, window + 1):
                expected += 2 * max(ln - d, 0)
        assert corpus.n_pairs(window) == expected


class TestSkipGramMath:
    def test_gradient_matches_finite_differences(self):
        # Central differences at step 1e-5 in dim 4, both pair polarities.
        rng = np.random.default_rng(0)
        h = 1e-5
        for positive in (True, False):
            for _ in range(20):
                v = rng.normal(0, 0.8, 4)
                u = rng.normal(0, 0.8, 4)
                gv, gu = pair_grad(v, u, positive)
                for vec, grad, which in ((v, gv, "v"), (u, gu, "u")):
                    fd = np.empty(4)
                    for j in range(4):
                        hi = vec.copy(); hi[j] += h
                        lo = vec.copy(); lo[j] -= h
                        if which == "v":
                            fd[j] = (pair_loss(hi, u, positive) - pair_loss(lo, u, positive)) / (2 * h)
                        else:
                            fd[j] = (pair_loss(v, hi, positive) - pair_loss(v, lo, positive)) / (2 * h)
                    denom = max(np.linalg.norm(fd), 1e-12)
                    assert np.linalg.norm(grad - fd) / denom <= 1e-4

    def test_pair_loss_positive_is_neg_log_sigmoid(self):
        v = np.array([0.5, -0.2])
        u = np.array([0.3, 0.4])
        x = float(v @ u)
        assert pair_loss(v, u, True) == pytest.approx(-np.log(1 / (1 + np.exp(-x))))
        assert pair_loss(v, u, False) == pytest.approx(-np.log(1 / (1 + np.exp(x))))


def train_two_clique(seed, num_workers=1, k=10):
    net = build_network(two_clique_records(k))
    corpus = generate_walks(net, WalkConfig(walk_length=8, samples_per_node=20, seed=seed))
    cfg = SkipGramConfig(dim=8, context_window=2, negatives_per_positive=3,
                         learning_rate=0.05, epochs=3, seed=seed)
    if num_workers == 1:
        emb = train_skipgram(corpus, cfg)
    else:
        emb = train_skipgram_distributed(corpus, cfg, num_workers)
    return net, emb


def clique_cosine_stats(net, emb, k=10):
    rows = emb.rows / np.maximum(np.linalg.norm(emb.rows, axis=1, keepdims=True), 1e-12)
    ids_a = [net.node_id(f"a{i}") for i in range(k)]
    ids_b = [net.node_id(f"b{i}") for i in range(k)]
    sim = rows @ rows.T
    within = []
    for ids in (ids_a, ids_b):
        for i in ids:
            for j in ids:
                if i < j:
                    within.append(sim[i, j])
    cross = [sim[i, j] for i in ids_a for j in ids_b]
    return float(np.mean(within)), float(np.mean(cross))


class TestTraining:
    def test_output_shape_and_finite(self):
        net, emb = train_two_clique(seed=0)
        assert emb.rows.shape == (net.n_nodes, 8)
        assert np.isfinite(emb.rows).all()

    def test_two_cliques_separate(self):
        net, emb = train_two_clique(seed=1)
        within, cross = clique_cosine_stats(net, emb)
        assert within > cross

    def test_empty_corpus_rejected(self):
        corpus = WalkCorpus(np.empty((0, 4), dtype=np.int32),
                            np.empty(0, dtype=np.int32), [])
        with pytest.raises(ValueError):
            train_skipgram(corpus, SkipGramConfig())

    def test_bit_reproducible(self):
        _, e1 = train_two_clique(seed=7)
        _, e2 = train_two_clique(seed=7)
        assert np.array_equal(e1.rows, e2.rows)

    def test_epoch_loss_non_increasing(self):
        _, emb = train_two_clique(seed=3)
        losses = emb.epoch_losses
        assert len(losses) == 3
        for prev, nxt in zip(losses, losses[1:]):
            assert nxt <= prev * 1.05

    def test_single_worker_distributed_bit_identical(self):
        _, plain = train_two_clique(seed=5, num_workers=1)
        _, dist = train_two_clique(seed=5, num_workers=1)
        net = build_network(two_clique_records(10))
        corpus = generate_walks(net, WalkConfig(walk_length=8, samples_per_node=20, seed=5))
        cfg = SkipGramConfig(dim=8, context_window=2, negatives_per_positive=3,
                             learning_rate=0.05, epochs=3, seed=5)
        via_dist = train_skipgram_distributed(corpus, cfg, 1)
        assert np.array_equal(plain.rows, via_dist.rows)

    def test_four_workers_still_separate_cliques(self):
        net, emb = train_two_clique(seed=2, num_workers=4)
        within, cross = clique_cosine_stats(net, emb)
        assert within > cross

    def test_too_many_workers_rejected(self):
        net = build_network(records_of([("A", "B")]))
        corpus = generate_walks(net, WalkConfig(walk_length=3, samples_per_node=1, seed=0))
        with pytest.raises(ValueError):
            train_skipgram_distributed(corpus, SkipGramConfig(), num_workers=3)


class TestLookupAndFiles:
    def test_known_user_returns_row(self):
        net, emb = train_two_clique(seed=0, k=4)
        r = lookup_embedding(emb, "a1")
        assert not r.cold_start
        assert np.array_equal(r.vector, emb.rows[net.node_id("a1")])

    def test_unknown_user_zero_vector_cold_start(self):
        _, emb = train_two_clique(seed=0, k=4)
        r = lookup_embedding(emb, "nobody")
        assert r.cold_start
        assert r.vector.shape == (8,)
        assert not r.vector.any()

    def test_save_load_round_trip(self, tmp_path):
        from datetime import date
        _, emb = train_two_clique(seed=0, k=4)
        emb.version_date = date(2017, 4, 10)
        path = tmp_path / "emb.txt"
        save_embeddings(emb, path)
        back = load_embeddings(path)
        assert back.users == emb.users
        assert back.version_date == emb.version_date
        assert np.allclose(back.rows, emb.rows, atol=1e-6)
        header = path.read_text().splitlines()[0].split()
        assert header == [str(len(emb.users)), "8", "2017-04-10"]
