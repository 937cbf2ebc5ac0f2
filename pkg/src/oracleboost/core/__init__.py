"""Data model: bit strings, queries, protocol trees, shared randomness, cost metering."""

from .bits import BitString, hamming
from .queries import (
    BitMap,
    Component,
    Const,
    EqQueryLabeling,
    Labeling,
    Predicate,
    Query,
    Slice,
    Table,
    exact_answer,
    project,
)
from .randomness import CostMeter, SharedRandomness, mix
from .serialize import dumps, loads, tree_from_dict, tree_to_dict
from .tree import (
    EvalResult,
    Leaf,
    Node,
    ProtocolTree,
    Step,
    TensorPos,
    TensorTree,
    eval_tree,
    is_equality_tree,
    tensor_tree,
    tree_depth,
)

__all__ = [
    "BitMap",
    "BitString",
    "Component",
    "Const",
    "CostMeter",
    "EqQueryLabeling",
    "EvalResult",
    "Labeling",
    "Leaf",
    "Node",
    "Predicate",
    "ProtocolTree",
    "Query",
    "SharedRandomness",
    "Slice",
    "Step",
    "Table",
    "TensorPos",
    "TensorTree",
    "dumps",
    "eval_tree",
    "exact_answer",
    "hamming",
    "is_equality_tree",
    "loads",
    "mix",
    "project",
    "tensor_tree",
    "tree_depth",
    "tree_from_dict",
    "tree_to_dict",
]
