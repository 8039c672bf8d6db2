"""Self-describing text serialization for trained detector models.

Layout: a header line `model_type,version_date,feature_arity,discretizer`
followed by the discretizer section (when present) and a type-specific
body. Trees are written as preorder node records; the linear model as
sparse (index, weight) pairs. Floats are written with repr, so identical
models serialize to identical bytes and parse back bit-exactly.
"""

from __future__ import annotations

from datetime import date

import numpy as np

from .base import DetectorModel
from .discretize import Discretizer
from .gbdt import GbdtModel, _RegressionTree
from .iforest import IsolationForestModel, _IsoTree, average_path_length
from .linear import LinearModel
from .trees import DecisionTree, TreeNode


def save_model(model: DetectorModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_model(model))


def load_model(path) -> DetectorModel:
    with open(path, encoding="utf-8") as fh:
        return deserialize_model(fh.read())


def serialize_model(model: DetectorModel) -> str:
    out = []
    vd = model.version_date.isoformat() if model.version_date else "-"
    has_disc = "1" if model.discretizer is not None else "0"
    out.append(f"{model.kind},{vd},{model.feature_arity},{has_disc}")
    if model.discretizer is not None:
        out.extend(_disc_lines(model.discretizer))
    body = {
        "id3": _tree_lines, "c50": _tree_lines, "gbdt": _gbdt_lines,
        "lr": _lr_lines, "iforest": _iforest_lines,
    }[model.kind](model.estimator)
    out.extend(body)
    return "\n".join(out) + "\n"


def deserialize_model(text: str) -> DetectorModel:
    lines = text.splitlines()
    try:
        kind, vd, arity_s, has_disc = lines[0].split(",")
        arity = int(arity_s)
    except (ValueError, IndexError):
        raise ValueError("bad model header") from None
    pos = 1
    disc = None
    if has_disc == "1":
        disc, pos = _disc_parse(lines, pos)
    parser = {
        "id3": _tree_parse, "c50": _tree_parse, "gbdt": _gbdt_parse,
        "lr": _lr_parse, "iforest": _iforest_parse,
    }.get(kind)
    if parser is None:
        raise ValueError(f"unknown model type {kind!r}")
    estimator = parser(lines, pos, kind)
    return DetectorModel(
        kind=kind, estimator=estimator, feature_arity=arity, discretizer=disc,
        version_date=None if vd == "-" else date.fromisoformat(vd),
    )


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values, dtype=np.float64).tolist())


def _fmt_ints(values) -> str:
    return " ".join(str(int(v)) for v in np.asarray(values).tolist())


def _parse_floats(s: str) -> np.ndarray:
    return np.array([float(x) for x in s.split()] if s else [], dtype=np.float64)


def _parse_ints(s: str, dtype=np.int64) -> np.ndarray:
    return np.array([int(x) for x in s.split()] if s else [], dtype=dtype)


def _disc_lines(disc: Discretizer):
    yield f"discretizer {disc.n_columns} {disc.bins}"
    for e in disc.edges:
        yield _fmt(e)


def _disc_parse(lines, pos):
    _, n_cols_s, bins_s = lines[pos].split()
    n_cols = int(n_cols_s)
    edges = [_parse_floats(lines[pos + 1 + j]) for j in range(n_cols)]
    return Discretizer(edges, int(bins_s)), pos + 1 + n_cols


def _tree_lines(tree: DecisionTree):
    nodes = []

    def visit(node: TreeNode):
        nodes.append(node)
        for b in sorted(node.children):
            visit(node.children[b])

    visit(tree.root)
    yield f"tree {tree.criterion} {tree.n_columns} {len(nodes)}"
    for node in nodes:
        col = -1 if node.column is None else node.column
        bins = " ".join(str(b) for b in sorted(node.children))
        yield f"{col} {node.n} {node.n_pos} {repr(node.probability)} {bins}".rstrip()


def _tree_parse(lines, pos, kind):
    _, criterion, n_columns_s, n_nodes_s = lines[pos].split()
    n_nodes = int(n_nodes_s)
    cursor = pos + 1

    def read() -> TreeNode:
        nonlocal cursor
        parts = lines[cursor].split()
        cursor += 1
        node = TreeNode(
            n=int(parts[1]), n_pos=int(parts[2]), probability=float(parts[3]),
            column=None if parts[0] == "-1" else int(parts[0]),
        )
        if node.column is not None:
            for b in parts[4:]:
                node.children[int(b)] = read()
        return node

    root = read()
    assert cursor - pos - 1 == n_nodes
    return DecisionTree(root=root, criterion=criterion, n_columns=int(n_columns_s))


def _gbdt_lines(model: GbdtModel):
    yield (f"gbdt {len(model.trees)} {model.n_features} "
           f"{repr(model.base_score)} {repr(model.shrinkage)}")
    for t in model.trees:
        yield f"nodes {len(t.feature)}"
        yield _fmt_ints(t.feature)
        yield _fmt(t.threshold)
        yield _fmt_ints(t.left)
        yield _fmt_ints(t.right)
        yield _fmt(t.value)


def _gbdt_parse(lines, pos, kind):
    _, n_trees_s, n_features_s, base_s, shrink_s = lines[pos].split()
    cursor = pos + 1
    trees = []
    for _ in range(int(n_trees_s)):
        cursor += 1  # "nodes N"
        trees.append(_RegressionTree(
            feature=_parse_ints(lines[cursor], np.int32),
            threshold=_parse_floats(lines[cursor + 1]),
            left=_parse_ints(lines[cursor + 2]),
            right=_parse_ints(lines[cursor + 3]),
            value=_parse_floats(lines[cursor + 4]),
        ))
        cursor += 5
    return GbdtModel(trees=trees, base_score=float(base_s),
                     shrinkage=float(shrink_s), n_features=int(n_features_s))


def _lr_lines(model: LinearModel):
    nz = np.flatnonzero(model.weights)
    yield (f"lr {len(model.offsets) - 1} {len(model.weights)} {len(nz)} "
           f"{repr(model.bias)} {repr(model.l1_weight)} {model.iterations}")
    yield _fmt_ints(model.offsets)
    for i in nz:
        yield f"{i} {repr(float(model.weights[i]))}"


def _lr_parse(lines, pos, kind):
    _, n_cols_s, n_w_s, n_nz_s, bias_s, l1_s, iters_s = lines[pos].split()
    offsets = _parse_ints(lines[pos + 1])
    weights = np.zeros(int(n_w_s), dtype=np.float64)
    for k in range(int(n_nz_s)):
        i_s, w_s = lines[pos + 2 + k].split()
        weights[int(i_s)] = float(w_s)
    return LinearModel(weights=weights, bias=float(bias_s), offsets=offsets,
                       l1_weight=float(l1_s), iterations=int(iters_s))


def _iforest_lines(model: IsolationForestModel):
    yield f"iforest {len(model.trees)} {model.subsample} {model.n_features}"
    for t in model.trees:
        yield f"nodes {len(t.feature)}"
        yield _fmt_ints(t.feature)
        yield _fmt(t.threshold)
        yield _fmt_ints(t.left)
        yield _fmt_ints(t.right)
        yield _fmt_ints(t.size)
        yield _fmt_ints(t.depth)


def _iforest_parse(lines, pos, kind):
    _, n_trees_s, subsample_s, n_features_s = lines[pos].split()
    cursor = pos + 1
    trees = []
    for _ in range(int(n_trees_s)):
        cursor += 1
        size = _parse_ints(lines[cursor + 4])
        depth = _parse_ints(lines[cursor + 5])
        adjust = depth + np.array([average_path_length(int(s)) for s in size])
        trees.append(_IsoTree(
            feature=_parse_ints(lines[cursor], np.int32),
            threshold=_parse_floats(lines[cursor + 1]),
            left=_parse_ints(lines[cursor + 2]),
            right=_parse_ints(lines[cursor + 3]),
            size=size, depth=depth, adjust=adjust,
        ))
        cursor += 6
    return IsolationForestModel(trees=trees, subsample=int(subsample_s),
                                n_features=int(n_features_s))
