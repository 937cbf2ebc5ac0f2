"""Query descriptors carried by inner nodes of protocol trees.

A query is either an :class:`EqQueryLabeling` (``Q(i, j) = [a(i) == b(j)]``)
or a named :class:`Predicate` evaluated exactly on bit-string inputs. Labelings
are small frozen dataclasses so trees stay hashable and serializable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from ..errors import InputDomainError
from .bits import BitString, hamming


@dataclass(frozen=True)
class Table:
    """Explicit lookup ``i -> values[i]`` for integer-indexed inputs."""

    values: tuple[int, ...]

    def __call__(self, i: Any) -> int:
        if isinstance(i, bool) or not isinstance(i, int):
            raise InputDomainError(f"table labeling expects an integer index, got {i!r}")
        if not 0 <= i < len(self.values):
            raise InputDomainError(f"index {i} out of range for a table of size {len(self.values)}")
        return self.values[i]


@dataclass(frozen=True)
class Slice:
    """Label is the substring ``x[lo:hi]``."""

    lo: int
    hi: int

    def __call__(self, x: Any) -> BitString:
        if not isinstance(x, BitString):
            raise InputDomainError(f"slice labeling expects a BitString, got {x!r}")
        return x.slice(self.lo, self.hi)


@dataclass(frozen=True)
class BitMap:
    """Label depends on a single bit: ``if_one`` when ``x[pos] == 1`` else ``if_zero``."""

    pos: int
    if_zero: int
    if_one: int

    def __call__(self, x: Any) -> int:
        if not isinstance(x, BitString):
            raise InputDomainError(f"bit labeling expects a BitString, got {x!r}")
        return self.if_one if x[self.pos] else self.if_zero


@dataclass(frozen=True)
class Const:
    value: int

    def __call__(self, x: Any) -> int:
        return self.value


@dataclass(frozen=True)
class Component:
    """Apply ``inner`` to component ``index`` of a tuple input (tensor blocks)."""

    index: int
    inner: Labeling

    def __call__(self, x: Any) -> Any:
        if not isinstance(x, tuple) or not 0 <= self.index < len(x):
            raise InputDomainError(f"input {x!r} has no component {self.index}")
        return self.inner(x[self.index])


Labeling = Union[Table, Slice, BitMap, Const, Component]


@dataclass(frozen=True)
class EqQueryLabeling:
    a: Labeling
    b: Labeling

    def evaluate(self, i: Any, j: Any) -> bool:
        return self.a(i) == self.b(j)


PREDICATES = ("eq", "hd1", "hd")


@dataclass(frozen=True)
class Predicate:
    """Named oracle predicate on a pair of bit strings.

    ``hd1`` is true when the inputs differ in exactly one position, ``hd`` when
    they differ in at most ``k`` positions, ``eq`` when they are equal.
    ``component`` selects a block of tuple inputs.
    """

    name: str
    k: int = 1
    component: int | None = None

    def __post_init__(self) -> None:
        if self.name not in PREDICATES:
            raise InputDomainError(f"unknown predicate {self.name!r}")

    def evaluate(self, x: Any, y: Any) -> bool:
        if self.component is not None:
            if not isinstance(x, tuple) or not isinstance(y, tuple):
                raise InputDomainError("component predicate expects tuple inputs")
            x, y = x[self.component], y[self.component]
        dist = hamming(x, y)
        if self.name == "eq":
            return dist == 0
        if self.name == "hd1":
            return dist == 1
        return dist <= self.k


Query = Union[EqQueryLabeling, Predicate]


def project(query: Query, index: int) -> Query:
    """Lift ``query`` so it acts on component ``index`` of tuple inputs."""
    if isinstance(query, EqQueryLabeling):
        return EqQueryLabeling(Component(index, query.a), Component(index, query.b))
    if query.component is not None:
        raise InputDomainError("predicate is already projected")
    return Predicate(query.name, query.k, index)


def exact_answer(query: Query, i: Any, j: Any) -> bool:
    """Exact oracle: the true answer of ``query`` on inputs ``(i, j)``."""
    return query.evaluate(i, j)
