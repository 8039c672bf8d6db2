"""Transaction network: directed weighted user graph over a record window.

Nodes are users numbered densely by first appearance; an edge (u, v)
carries the number of u -> v transfers in the window. Self-transfers are
dropped: they carry no counterparty relationship. Random walks run on the
undirected view, so the adjacency is stored CSR-style for fast
neighbourhood sampling.
"""

from __future__ import annotations

import numpy as np

from .ingest import RecordFrame, as_frame


class TransactionNetwork:
    """Immutable CSR adjacency plus user <-> dense-id bijection."""

    def __init__(self, users, indptr, indices, weights, undirected=False):
        self.users = list(users)
        self.user_to_id = {u: i for i, u in enumerate(self.users)}
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.undirected = undirected
        if len(self.indptr) != self.n_nodes + 1:
            raise ValueError("indptr length must be n_nodes + 1")

    @property
    def n_nodes(self) -> int:
        return len(self.users)

    @property
    def n_edges(self) -> int:
        return len(self.indices)

    def total_weight(self) -> float:
        return float(self.weights.sum())

    def node_id(self, user: str) -> int:
        return self.user_to_id[user]

    def user_of(self, node_id: int) -> str:
        return self.users[node_id]


def build_network(records) -> TransactionNetwork:
    """Build the directed network; parallel transfers collapse into weights.

    Node numbering follows first appearance (transferor before transferee,
    record order), so construction is deterministic for a fixed record
    order. Raises if the input is empty or contains no non-self-loop edge.
    """
    frame = as_frame(records)
    if len(frame) == 0:
        raise ValueError("cannot build a network from zero records")

    user_to_id: dict[str, int] = {}
    src_ids = np.empty(len(frame), dtype=np.int64)
    dst_ids = np.empty(len(frame), dtype=np.int64)
    for i in range(len(frame)):
        u = frame.transferors[i]
        v = frame.transferees[i]
        src_ids[i] = user_to_id.setdefault(u, len(user_to_id))
        dst_ids[i] = user_to_id.setdefault(v, len(user_to_id))

    n = len(user_to_id)
    keep = src_ids != dst_ids
    if not keep.any():
        raise ValueError("no non-self-loop edges; the network would be empty")

    keys = src_ids[keep] * n + dst_ids[keep]
    uniq, counts = np.unique(keys, return_counts=True)
    src = uniq // n
    dst = uniq % n
    # np.unique sorts keys, i.e. by (src, dst): rows are contiguous and
    # neighbours within a row come out ascending, which is the CSR we want.
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)

    users = [None] * n
    for u, i in user_to_id.items():
        users[i] = u
    return TransactionNetwork(users, indptr, dst, counts.astype(np.float64))


def out_neighbors(net: TransactionNetwork, node_id: int) -> list[tuple[int, float]]:
    """Outgoing (neighbor_id, weight) pairs in ascending neighbor order."""
    if not 0 <= node_id < net.n_nodes:
        raise ValueError(f"node id {node_id} out of range [0, {net.n_nodes})")
    lo, hi = net.indptr[node_id], net.indptr[node_id + 1]
    return [(int(j), float(w)) for j, w in zip(net.indices[lo:hi], net.weights[lo:hi])]


def as_undirected(net: TransactionNetwork) -> TransactionNetwork:
    """Symmetrize: weight(u,v) = weight(v,u) = w(u->v) + w(v->u). Idempotent."""
    if net.undirected:
        return net
    n = net.n_nodes
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(net.indptr))
    dst = net.indices
    keys = np.concatenate([src * n + dst, dst * n + src])
    w = np.concatenate([net.weights, net.weights])
    uniq, inv = np.unique(keys, return_inverse=True)
    summed = np.bincount(inv, weights=w)
    u_src = uniq // n
    u_dst = uniq % n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, u_src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return TransactionNetwork(net.users, indptr, u_dst, summed, undirected=True)


def dump_network(net: TransactionNetwork, path) -> None:
    """Write the edge list: header line, then `u_id v_id weight` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#nodes {net.n_nodes} #edges {net.n_edges}\n")
        for u in range(net.n_nodes):
            lo, hi = net.indptr[u], net.indptr[u + 1]
            for j, w in zip(net.indices[lo:hi], net.weights[lo:hi]):
                fh.write(f"{u} {int(j)} {repr(float(w))}\n")
        fh.write("#users " + " ".join(net.users) + "\n")


def load_network(path) -> TransactionNetwork:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        n, m = int(header[1]), int(header[3])
        src = np.empty(m, dtype=np.int64)
        dst = np.empty(m, dtype=np.int64)
        w = np.empty(m, dtype=np.float64)
        for i in range(m):
            parts = fh.readline().split()
            src[i], dst[i], w[i] = int(parts[0]), int(parts[1]), float(parts[2])
        tail = fh.readline().split()
        users = tail[1:] if tail and tail[0] == "#users" else [str(i) for i in range(n)]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return TransactionNetwork(users, indptr, dst, w)
