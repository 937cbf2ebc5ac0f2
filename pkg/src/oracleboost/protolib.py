"""Concrete Equality-oracle protocol trees used as workloads."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BitMap,
    BitString,
    EqQueryLabeling,
    Leaf,
    Node,
    ProtocolTree,
    Slice,
    Table,
    TensorTree,
    hamming,
    tensor_tree,
)
from .errors import ConfigurationError, InputDomainError


@dataclass(frozen=True)
class TreeGraph:
    """Rooted tree on vertices ``0..n-1``; ``parent[root] == root``."""

    parent: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.parent)
        if n < 1:
            raise InputDomainError("a tree needs at least one vertex")
        roots = [v for v, p in enumerate(self.parent) if p == v]
        if len(roots) != 1:
            raise InputDomainError(f"expected exactly one root, found {len(roots)}")
        for v, p in enumerate(self.parent):
            if not 0 <= p < n:
                raise InputDomainError(f"parent {p} of vertex {v} out of range")
        # every vertex must reach the root without revisiting
        for v in range(n):
            seen = set()
            while self.parent[v] != v:
                if v in seen:
                    raise InputDomainError("parent pointers contain a cycle")
                seen.add(v)
                v = self.parent[v]

    @property
    def n(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return next(v for v, p in enumerate(self.parent) if p == v)

    def adjacent(self, u: int, v: int) -> bool:
        return u != v and (self.parent[u] == v or self.parent[v] == u)

    @classmethod
    def path(cls, n: int) -> TreeGraph:
        return cls(tuple([0] + list(range(n - 1))))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> TreeGraph:
        """Random recursive tree with vertex names shuffled."""
        order = rng.permutation(n)
        parent = [0] * n
        root = int(order[0])
        parent[root] = root
        for pos in range(1, n):
            parent[int(order[pos])] = int(order[rng.integers(0, pos)])
        return cls(tuple(parent))


def adjacency_tree(g: TreeGraph) -> ProtocolTree:
    """Two Equality queries: ``x = p(y)?`` then ``y = p(x)?``.

    Both answering 1 only happens for the root paired with itself (``p(root) =
    root``), so that leaf is labeled 0.
    """
    ident = Table(tuple(range(g.n)))
    par = Table(g.parent)
    x_is_parent_of_y = EqQueryLabeling(ident, par)
    y_is_parent_of_x = EqQueryLabeling(par, ident)
    return ProtocolTree(
        Node(
            x_is_parent_of_y,
            Node(y_is_parent_of_x, Leaf(0), Leaf(1)),
            Node(y_is_parent_of_x, Leaf(1), Leaf(0)),
        )
    )


def greater_than_tree(n: int) -> ProtocolTree:
    """Strict big-endian ``x > y`` by binary search for the first differing bit.

    After the full-equality root, each query compares a prefix; the final
    query asks ``[x_m = 1 and y_m = 0]`` at the first differing index ``m``
    as ``Eq(a(x), b(y))`` with ``a(x) = 1 if x_m else 2`` and
    ``b(y) = 1 if not y_m else 3``.
    """
    if n < 1:
        raise InputDomainError("greater_than_tree needs n >= 1")

    def search(lo: int, hi: int):
        # prefix [0:lo] agrees and prefix [0:hi] differs
        if hi - lo == 1:
            m = lo
            return Node(EqQueryLabeling(BitMap(m, 2, 1), BitMap(m, 1, 3)), Leaf(1), Leaf(0))
        mid = (lo + hi) // 2
        prefix = EqQueryLabeling(Slice(0, mid), Slice(0, mid))
        return Node(prefix, search(mid, hi), search(lo, mid))

    whole = EqQueryLabeling(Slice(0, n), Slice(0, n))
    return ProtocolTree(Node(whole, Leaf(0), search(0, n)))


def hd1_bsearch_tree(n: int) -> ProtocolTree:
    """Decide ``dist(x, y) == 1`` with half-interval Equality queries.

    Invariant inside ``interval(lo, hi)``: every difference lies in
    ``[lo, hi)`` and at least one exists. Odd lengths split unevenly, which is
    the same as padding with equal bits.
    """
    if n < 1:
        raise InputDomainError("hd1_bsearch_tree needs n >= 1")

    def interval(lo: int, hi: int):
        if hi - lo == 1:
            return Leaf(1)
        mid = (lo + hi) // 2
        left_eq = EqQueryLabeling(Slice(lo, mid), Slice(lo, mid))
        right_eq = EqQueryLabeling(Slice(mid, hi), Slice(mid, hi))
        return Node(left_eq, interval(mid, hi), Node(right_eq, interval(lo, mid), Leaf(0)))

    whole = EqQueryLabeling(Slice(0, n), Slice(0, n))
    return ProtocolTree(Node(whole, Leaf(0), interval(0, n)))


def hd1_tensor_tree(n: int, k: int) -> TensorTree:
    if k < 1:
        raise InputDomainError("hd1_tensor_tree needs k >= 1")
    base = hd1_bsearch_tree(n)
    return tensor_tree([base] * k)


def hd1_depth_bound(n: int) -> int:
    return 1 + 2 * math.ceil(math.log2(n)) if n > 1 else 1


def gt_depth_bound(n: int) -> int:
    return math.ceil(math.log2(n)) + 2 if n > 1 else 2


# Brute-force predicates the trees are checked against.

def greater_than(x: BitString, y: BitString) -> int:
    return int(x.value > y.value)


def hd1(x: BitString, y: BitString) -> int:
    return int(hamming(x, y) == 1)


WORKLOADS = ("adj-tree", "gt", "hd1-bsearch", "hd1-tensor")


def build_workload(name: str, n: int, k: int = 1, *, graph_seed: int = 0):
    """Return ``(tree, graph_or_None)`` for a CLI workload name."""
    if n is None or n < 1:
        raise ConfigurationError("workload size n must be >= 1")
    if name == "adj-tree":
        g = TreeGraph.random(n, np.random.default_rng(graph_seed))
        return adjacency_tree(g), g
    if name == "gt":
        return greater_than_tree(n), None
    if name == "hd1-bsearch":
        return hd1_bsearch_tree(n), None
    if name == "hd1-tensor":
        if k is None or k < 1:
            raise ConfigurationError("hd1-tensor needs k >= 1")
        return hd1_tensor_tree(n, k), None
    raise ConfigurationError(f"unknown workload {name!r}; expected one of {', '.join(WORKLOADS)}")
