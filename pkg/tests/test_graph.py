import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from titant.graph import (as_undirected, build_network, dump_network, load_network,
                          out_neighbors)
from tests.test_ingest import make_record


def records_of(pairs):
    return [make_record(f"t{i}", 100 + i, a, b) for i, (a, b) in enumerate(pairs)]


def test_parallel_transfers_collapse():
    net = build_network(records_of([("A", "B"), ("A", "B"), ("B", "C")]))
    assert net.n_nodes == 3
    a, b, c = net.node_id("A"), net.node_id("B"), net.node_id("C")
    assert out_neighbors(net, a) == [(b, 2.0)]
    assert out_neighbors(net, b) == [(c, 1.0)]
    assert out_neighbors(net, c) == []


def test_single_record():
    net = build_network(records_of([("A", "B")]))
    assert net.n_nodes == 2
    assert net.n_edges == 1
    assert net.total_weight() == 1.0


def test_self_loop_only_is_error():
    with pytest.raises(ValueError, match="self-loop"):
        build_network(records_of([("A", "A")]))


def test_empty_input_is_error():
    with pytest.raises(ValueError):
        build_network([])


def test_self_loops_dropped_but_nodes_kept():
    net = build_network(records_of([("A", "A"), ("B", "C")]))
    assert net.n_nodes == 3
    assert net.total_weight() == 1.0  # only B->C
    assert out_neighbors(net, net.node_id("A")) == []


def test_first_appearance_numbering():
    net = build_network(records_of([("X", "A"), ("B", "X")]))
    assert [net.user_of(i) for i in range(3)] == ["X", "A", "B"]


def test_out_neighbors_range_check():
    net = build_network(records_of([("A", "B")]))
    with pytest.raises(ValueError):
        out_neighbors(net, 2)
    with pytest.raises(ValueError):
        out_neighbors(net, -1)


def test_undirected_single_direction():
    net = as_undirected(build_network(records_of([("A", "B"), ("A", "B")])))
    a, b = net.node_id("A"), net.node_id("B")
    assert out_neighbors(net, a) == [(b, 2.0)]
    assert out_neighbors(net, b) == [(a, 2.0)]


def test_undirected_sums_reciprocal_edges():
    net = as_undirected(build_network(records_of([("A", "B"), ("B", "A")])))
    a, b = net.node_id("A"), net.node_id("B")
    assert out_neighbors(net, a) == [(b, 2.0)]
    assert out_neighbors(net, b) == [(a, 2.0)]


def test_undirected_idempotent():
    net = build_network(records_of([("A", "B"), ("B", "C"), ("C", "A")]))
    once = as_undirected(net)
    twice = as_undirected(once)
    assert np.array_equal(once.indptr, twice.indptr)
    assert np.array_equal(once.indices, twice.indices)
    assert np.array_equal(once.weights, twice.weights)


@given(st.lists(st.tuples(st.sampled_from("ABCDEFG"), st.sampled_from("ABCDEFG")),
                min_size=1, max_size=40))
@settings(max_examples=60, deadline=None)
def test_invariants_on_random_record_lists(pairs):
    records = records_of(pairs)
    non_loops = sum(1 for a, b in pairs if a != b)
    if non_loops == 0:
        with pytest.raises(ValueError):
            build_network(records)
        return
    net = build_network(records)
    # |V| counts every user appearing on either side of a transfer.
    assert net.n_nodes == len({u for p in pairs for u in p})
    # Directed weights sum to the number of non-self-loop records.
    assert net.total_weight() == non_loops
    # node_index round-trips both ways.
    for i in range(net.n_nodes):
        assert net.node_id(net.user_of(i)) == i
    # Undirected view is symmetric.
    und = as_undirected(net)
    w = {}
    for u in range(und.n_nodes):
        for v, weight in out_neighbors(und, u):
            w[(u, v)] = weight
    for (u, v), weight in w.items():
        assert w[(v, u)] == weight


def test_dump_load_round_trip(tmp_path):
    net = build_network(records_of([("A", "B"), ("B", "C"), ("A", "B"), ("C", "A")]))
    path = tmp_path / "graph.txt"
    dump_network(net, path)
    back = load_network(path)
    assert back.users == net.users
    assert np.array_equal(back.indptr, net.indptr)
    assert np.array_equal(back.indices, net.indices)
    assert np.array_equal(back.weights, net.weights)
