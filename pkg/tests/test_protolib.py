import itertools

import numpy as np
import pytest

from oracleboost.core import BitString, eval_tree, is_equality_tree, tree_depth
from oracleboost.errors import ConfigurationError, InputDomainError
from oracleboost.protolib import (
    TreeGraph,
    adjacency_tree,
    build_workload,
    greater_than,
    greater_than_tree,
    gt_depth_bound,
    hd1,
    hd1_bsearch_tree,
    hd1_depth_bound,
    hd1_tensor_tree,
)


def _all(n):
    return [BitString(v, n) for v in range(1 << n)]


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_greater_than_exhaustive(n):
    t = greater_than_tree(n)
    for x, y in itertools.product(_all(n), repeat=2):
        assert eval_tree(t, x, y).label == greater_than(x, y)
    assert tree_depth(t) <= gt_depth_bound(n)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_hd1_exhaustive(n):
    t = hd1_bsearch_tree(n)
    for x, y in itertools.product(_all(n), repeat=2):
        assert eval_tree(t, x, y).label == hd1(x, y)
    assert tree_depth(t) <= hd1_depth_bound(n)


def test_hd1_large_sparse():
    rng = np.random.default_rng(3)
    t = hd1_bsearch_tree(300)
    for _ in range(200):
        x = rng.integers(0, 2, 300).astype(np.uint8)
        y = x.copy()
        flips = rng.choice(300, size=rng.integers(0, 4), replace=False)
        y[flips] ^= 1
        bx, by = BitString.from_array(x), BitString.from_array(y)
        assert eval_tree(t, bx, by).label == int(len(flips) == 1)


def test_trees_use_only_equality():
    for t in (greater_than_tree(7), hd1_bsearch_tree(7), adjacency_tree(TreeGraph.path(4))):
        assert is_equality_tree(t)


def test_adjacency_every_pair_random_graphs():
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = TreeGraph.random(12, rng)
        t = adjacency_tree(g)
        for u in range(12):
            for v in range(12):
                assert eval_tree(t, u, v).label == int(g.adjacent(u, v))


def test_single_vertex_graph():
    g = TreeGraph((0,))
    assert eval_tree(adjacency_tree(g), 0, 0).label == 0


def test_graph_validation():
    with pytest.raises(InputDomainError):
        TreeGraph((1, 0))  # no root
    with pytest.raises(InputDomainError):
        TreeGraph((0, 2, 1))  # cycle off the root
    with pytest.raises(InputDomainError):
        TreeGraph((0, 5))


def test_random_graph_shape():
    g = TreeGraph.random(50, np.random.default_rng(1))
    assert g.n == 50
    assert sum(1 for v, p in enumerate(g.parent) if p == v) == 1


def test_tensor_labels():
    t = hd1_tensor_tree(3, 2)
    x = (BitString.from_str("100"), BitString.from_str("110"))
    y = (BitString.from_str("000"), BitString.from_str("000"))
    assert eval_tree(t, x, y).label == (1, 0)


def test_workload_errors():
    with pytest.raises(ConfigurationError):
        build_workload("nope", 4)
    with pytest.raises(ConfigurationError):
        build_workload("gt", 0)
    with pytest.raises(InputDomainError):
        greater_than_tree(0)
