"""Oracle protocol trees and their exact evaluation.

Inner nodes hold a query; the left child is taken when the query answers 1
("equal"), the right child otherwise. Leaves carry opaque output labels.
Node objects compare by identity, so structurally identical subtrees in
different places stay distinct positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, NamedTuple, Sequence, Union

from ..errors import InputDomainError
from .queries import EqQueryLabeling, Query, exact_answer, project


@dataclass(frozen=True, eq=False)
class Leaf:
    label: Any


@dataclass(frozen=True, eq=False)
class Node:
    query: Query
    left: Union[Node, Leaf]
    right: Union[Node, Leaf]


TreeNode = Union[Node, Leaf]
Oracle = Callable[[Query, Any, Any], bool]


class Step(NamedTuple):
    position: Any
    answer: bool


class EvalResult(NamedTuple):
    label: Any
    path: tuple[Step, ...]

    @property
    def answers(self) -> tuple[bool, ...]:
        return tuple(s.answer for s in self.path)


def _depth(node: TreeNode) -> int:
    # iterative: generated trees can be deep enough to hit the recursion limit
    best = 0
    stack = [(node, 0)]
    while stack:
        cur, d = stack.pop()
        if isinstance(cur, Leaf):
            best = max(best, d)
        else:
            stack.append((cur.left, d + 1))
            stack.append((cur.right, d + 1))
    return best


class ProtocolTree:
    """Explicit binary protocol tree; positions are the node objects themselves."""

    def __init__(self, root: TreeNode) -> None:
        if not isinstance(root, (Node, Leaf)):
            raise TypeError(f"tree root must be a Node or Leaf, got {type(root).__name__}")
        self.root = root
        self._depth: int | None = None

    @property
    def depth(self) -> int:
        if self._depth is None:
            self._depth = _depth(self.root)
        return self._depth

    def is_leaf(self, pos: TreeNode) -> bool:
        return isinstance(pos, Leaf)

    def query(self, pos: TreeNode) -> Query:
        return pos.query

    def child(self, pos: TreeNode, answer: bool) -> TreeNode:
        return pos.left if answer else pos.right

    def label(self, pos: TreeNode) -> Any:
        return pos.label

    def nodes(self) -> Iterator[TreeNode]:
        stack = [self.root]
        while stack:
            cur = stack.pop()
            yield cur
            if isinstance(cur, Node):
                stack.append(cur.right)
                stack.append(cur.left)

    def leaves(self) -> list[Leaf]:
        return [n for n in self.nodes() if isinstance(n, Leaf)]

    def queries(self) -> Iterator[Query]:
        for n in self.nodes():
            if isinstance(n, Node):
                yield n.query

    def __repr__(self) -> str:
        return f"ProtocolTree(depth={self.depth})"


@dataclass(frozen=True)
class TensorPos:
    index: int
    done: tuple = ()
    node: Any = field(default=None, compare=False)
    # identity of the component node, kept separately so equality is positional
    node_id: int = 0


class TensorTree(ProtocolTree):
    """Implicit tree computing every component tree in sequence.

    Inputs are tuples ``(x_1, ..., x_k)``; component ``c`` only looks at
    ``x_c``. The output label is the tuple of component labels. The tree is
    never materialized: its size is the product of component leaf counts.
    """

    def __init__(self, components: Sequence[ProtocolTree]) -> None:
        if not components:
            raise InputDomainError("tensor of zero trees")
        self.components = tuple(components)
        self._projected: dict[tuple[int, int], Query] = {}
        self.root = self._enter(0, ())
        self._depth = sum(t.depth for t in self.components)

    def _enter(self, index: int, done: tuple) -> TensorPos:
        while index < len(self.components) and isinstance(self.components[index].root, Leaf):
            done = done + (self.components[index].root.label,)
            index += 1
        if index == len(self.components):
            return TensorPos(index, done)
        node = self.components[index].root
        return TensorPos(index, done, node, id(node))

    @property
    def depth(self) -> int:
        return self._depth

    def is_leaf(self, pos: TensorPos) -> bool:
        return pos.index == len(self.components)

    def query(self, pos: TensorPos) -> Query:
        key = (pos.index, pos.node_id)
        q = self._projected.get(key)
        if q is None:
            q = project(pos.node.query, pos.index)
            self._projected[key] = q
        return q

    def child(self, pos: TensorPos, answer: bool) -> TensorPos:
        nxt = pos.node.left if answer else pos.node.right
        if isinstance(nxt, Leaf):
            return self._enter(pos.index + 1, pos.done + (nxt.label,))
        return TensorPos(pos.index, pos.done, nxt, id(nxt))

    def label(self, pos: TensorPos) -> tuple:
        return pos.done

    def nodes(self) -> Iterator[TreeNode]:
        raise TypeError("tensor trees are implicit; iterate the components instead")

    def queries(self) -> Iterator[Query]:
        for idx, comp in enumerate(self.components):
            for q in comp.queries():
                yield project(q, idx)

    def __repr__(self) -> str:
        return f"TensorTree(k={len(self.components)}, depth={self.depth})"


def eval_tree(tree: ProtocolTree, i: Any, j: Any, oracle: Oracle = exact_answer) -> EvalResult:
    """Follow exact query answers from the root; return the leaf label and the path."""
    pos = tree.root
    path = []
    while not tree.is_leaf(pos):
        ans = bool(oracle(tree.query(pos), i, j))
        path.append(Step(pos, ans))
        pos = tree.child(pos, ans)
    return EvalResult(tree.label(pos), tuple(path))


def tree_depth(tree: ProtocolTree) -> int:
    return tree.depth


def tensor_tree(trees: Sequence[ProtocolTree]) -> TensorTree:
    flat: list[ProtocolTree] = []
    for t in trees:
        if isinstance(t, TensorTree):
            raise InputDomainError("nested tensor trees are not supported; pass the components")
        flat.append(t)
    return TensorTree(flat)


def is_equality_tree(tree: ProtocolTree) -> bool:
    return all(isinstance(q, EqQueryLabeling) for q in tree.queries())
