"""JSON text format for protocol trees.

Document layout (``version`` 1)::

    {"format": "oracleboost-tree", "version": 1, "root": NODE}
    {"format": "oracleboost-tree", "version": 1, "tensor": [DOCUMENT, ...]}

    NODE     = {"leaf": LABEL}
             | {"query": QUERY, "left": NODE, "right": NODE}
    QUERY    = {"type": "eq", "a": LABELING, "b": LABELING}
             | {"type": "predicate", "name": "eq"|"hd1"|"hd", "k": int, "component": int|null}
    LABELING = {"kind": "table", "values": [int, ...]}
             | {"kind": "slice", "lo": int, "hi": int}
             | {"kind": "bitmap", "pos": int, "if_zero": int, "if_one": int}
             | {"kind": "const", "value": int}
             | {"kind": "component", "index": int, "inner": LABELING}
    LABEL    = JSON scalar | {"tuple": [LABEL, ...]} | {"bits": "0101"}

``left`` is the branch taken when the query answers 1. Keys are written in
sorted order with two-space indentation so files diff cleanly.
"""

from __future__ import annotations

import json
from typing import Any

from ..errors import InputDomainError
from .bits import BitString
from .queries import BitMap, Component, Const, EqQueryLabeling, Predicate, Slice, Table
from .tree import Leaf, Node, ProtocolTree, TensorTree

FORMAT = "oracleboost-tree"
VERSION = 1


def _label_out(label: Any) -> Any:
    if isinstance(label, tuple):
        return {"tuple": [_label_out(v) for v in label]}
    if isinstance(label, BitString):
        return {"bits": str(label)}
    if label is None or isinstance(label, (bool, int, float, str)):
        return label
    raise InputDomainError(f"label {label!r} is not serializable")


def _label_in(obj: Any) -> Any:
    if isinstance(obj, dict):
        if "tuple" in obj:
            return tuple(_label_in(v) for v in obj["tuple"])
        if "bits" in obj:
            return BitString.from_str(obj["bits"])
        raise InputDomainError(f"bad label object {obj!r}")
    return obj


def _labeling_out(lab) -> dict:
    if isinstance(lab, Table):
        return {"kind": "table", "values": list(lab.values)}
    if isinstance(lab, Slice):
        return {"kind": "slice", "lo": lab.lo, "hi": lab.hi}
    if isinstance(lab, BitMap):
        return {"kind": "bitmap", "pos": lab.pos, "if_zero": lab.if_zero, "if_one": lab.if_one}
    if isinstance(lab, Const):
        return {"kind": "const", "value": lab.value}
    if isinstance(lab, Component):
        return {"kind": "component", "index": lab.index, "inner": _labeling_out(lab.inner)}
    raise InputDomainError(f"unknown labeling {lab!r}")


def _labeling_in(obj: dict):
    kind = obj.get("kind")
    if kind == "table":
        return Table(tuple(int(v) for v in obj["values"]))
    if kind == "slice":
        return Slice(int(obj["lo"]), int(obj["hi"]))
    if kind == "bitmap":
        return BitMap(int(obj["pos"]), int(obj["if_zero"]), int(obj["if_one"]))
    if kind == "const":
        return Const(int(obj["value"]))
    if kind == "component":
        return Component(int(obj["index"]), _labeling_in(obj["inner"]))
    raise InputDomainError(f"unknown labeling kind {kind!r}")


def _query_out(q) -> dict:
    if isinstance(q, EqQueryLabeling):
        return {"type": "eq", "a": _labeling_out(q.a), "b": _labeling_out(q.b)}
    return {"type": "predicate", "name": q.name, "k": q.k, "component": q.component}


def _query_in(obj: dict):
    if obj.get("type") == "eq":
        return EqQueryLabeling(_labeling_in(obj["a"]), _labeling_in(obj["b"]))
    if obj.get("type") == "predicate":
        return Predicate(obj["name"], int(obj.get("k", 1)), obj.get("component"))
    raise InputDomainError(f"unknown query type {obj.get('type')!r}")


def _node_out(node) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": _label_out(node.label)}
    return {"query": _query_out(node.query), "left": _node_out(node.left), "right": _node_out(node.right)}


def _node_in(obj: dict):
    if "leaf" in obj:
        return Leaf(_label_in(obj["leaf"]))
    return Node(_query_in(obj["query"]), _node_in(obj["left"]), _node_in(obj["right"]))


def tree_to_dict(tree: ProtocolTree) -> dict:
    if isinstance(tree, TensorTree):
        return {"format": FORMAT, "version": VERSION, "tensor": [tree_to_dict(t) for t in tree.components]}
    return {"format": FORMAT, "version": VERSION, "root": _node_out(tree.root)}


def tree_from_dict(obj: dict) -> ProtocolTree:
    if obj.get("format") != FORMAT or obj.get("version") != VERSION:
        raise InputDomainError("not an oracleboost-tree version 1 document")
    if "tensor" in obj:
        return TensorTree([tree_from_dict(t) for t in obj["tensor"]])
    return ProtocolTree(_node_in(obj["root"]))


def dumps(tree: ProtocolTree) -> str:
    return json.dumps(tree_to_dict(tree), indent=2, sort_keys=True) + "\n"


def loads(text: str) -> ProtocolTree:
    return tree_from_dict(json.loads(text))
