"""Scalar noisy-tree walk with full round-by-round instrumentation.

The walk runs on the base tree extended at every leaf ``v`` by a chain
``L_v`` of ``ext`` query nodes that all repeat the query of ``v``'s parent.
A pointer starts at the root. Each round first re-checks every ancestor
where the walk went left (answered "equal") with one batched Equality test,
then checks the current node. A rejected batch sends the pointer to its
parent; otherwise it descends according to the current answer.

Equality is one-sided, so a right move is always correct and the pointer is
off the correct path exactly when some recorded left move was wrong. The
instrumentation tracks that count to classify rounds without re-evaluating
the tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from ..core import (
    Const,
    CostMeter,
    EqQueryLabeling,
    Leaf,
    Node,
    ProtocolTree,
    SharedRandomness,
    TensorTree,
    eval_tree,
    exact_answer,
)
from ..errors import ConfigurationError, UnsupportedQueryError
from ..subprotocols import DEFAULT_CONFIG, SubprotocolConfig, eq_batch, eq_naive, eq_once


@dataclass(frozen=True)
class NoisyConfig:
    delta: float = 0.25
    c_const: float = 6.0
    default_label: Any = 0

    def __post_init__(self) -> None:
        if not 0 < self.delta < 0.5:
            raise ConfigurationError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.c_const < 1:
            raise ConfigurationError(f"C must be >= 1, got {self.c_const}")


def extension_depth(config: NoisyConfig) -> int:
    """``ceil(C log2(1/delta))``, tolerant of float noise at exact integers."""
    return math.ceil(config.c_const * math.log2(1 / config.delta) - 1e-9)


def rounds_for(d: int, config: NoisyConfig) -> int:
    if d < 1:
        raise ConfigurationError("tree depth must be >= 1")
    return 4 * max(d, extension_depth(config))


def bits_per_round(subconfig: SubprotocolConfig = DEFAULT_CONFIG) -> int:
    # batched re-check plus current-node check, each t hash bits and one verdict
    return 2 * (subconfig.hash_bits + 1)


def noisy_cost(d: int, config: NoisyConfig, subconfig: SubprotocolConfig = DEFAULT_CONFIG) -> int:
    """Exact bits charged by every run of :func:`run_noisy` on a depth-``d`` tree."""
    return bits_per_round(subconfig) * rounds_for(d, config)


@dataclass
class AugmentedTree:
    """Base Equality tree plus uniform-depth leaf extensions.

    Extensions are implicit: a pointer inside ``L_v`` is the base leaf ``v``
    plus a level ``0..ext``, and every extension node asks the query of
    ``v``'s parent. Both children of an extension node lie one level deeper.
    """

    base: ProtocolTree
    config: NoisyConfig
    ext: int

    @property
    def base_depth(self) -> int:
        return self.base.depth

    @property
    def depth(self) -> int:
        return self.base.depth + self.ext

    @property
    def rounds(self) -> int:
        return rounds_for(self.base.depth, self.config)

    def extension_count(self) -> int:
        return len(self.base.leaves())


def augment(tree: ProtocolTree, config: NoisyConfig) -> AugmentedTree:
    for q in tree.queries():
        if not isinstance(q, EqQueryLabeling):
            raise UnsupportedQueryError(f"noisy-tree walk needs Equality queries, found {q!r}")
    if not isinstance(tree, TensorTree) and isinstance(tree.root, Leaf):
        # give L_v a parent query to copy: an always-equal constant test
        label = tree.root.label
        tree = ProtocolTree(Node(EqQueryLabeling(Const(0), Const(0)), Leaf(label), Leaf(label)))
    elif isinstance(tree, TensorTree) and tree.depth == 0:
        raise ConfigurationError("tensor of leaf-only trees has nothing to simulate")
    return AugmentedTree(tree, config, extension_depth(config))


@dataclass
class NoisyRunStats:
    rounds: int
    good: int = 0
    bad: int = 0
    mistakes: int = 0
    bits: int = 0
    label: Any = None
    in_extension: bool = False
    final_depth: int = 0
    final_position: Any = field(default=None, repr=False)
    correct: bool | None = None
    moved_up_on_path: int = 0

    def violations(self, base_depth: int) -> list[str]:
        """Names of the walk claims this run contradicts (expected empty)."""
        out = []
        if self.good + self.bad != self.rounds:
            out.append("good+bad=R")
        if self.bad > 2 * self.mistakes:
            out.append("bad<=2m")
        if self.good > base_depth and self.correct is False:
            out.append("good>d=>correct")
        if self.moved_up_on_path:
            out.append("no-up-on-path")
        return out

    CSV_FIELDS = ("seed", "d", "delta", "C", "R", "bits", "good", "bad", "mistakes", "correct")

    def csv_row(self, seed: int, d: int, config: NoisyConfig) -> dict:
        return {
            "seed": seed,
            "d": d,
            "delta": config.delta,
            "C": config.c_const,
            "R": self.rounds,
            "bits": self.bits,
            "good": self.good,
            "bad": self.bad,
            "mistakes": self.mistakes,
            "correct": "" if self.correct is None else int(self.correct),
        }


class _Entry:
    __slots__ = ("pos", "query", "left", "wrong", "base")

    def __init__(self, pos, query, left, wrong, base):
        self.pos = pos
        self.query = query
        self.left = left
        self.wrong = wrong
        self.base = base


def run_noisy(
    aug: AugmentedTree,
    i: Any,
    j: Any,
    config: NoisyConfig | None = None,
    rand: SharedRandomness | None = None,
    meter: CostMeter | None = None,
    *,
    subconfig: SubprotocolConfig = DEFAULT_CONFIG,
    eq_check: Callable = eq_once,
    oracle: Callable = exact_answer,
    check_output: bool = True,
) -> tuple[Any, NoisyRunStats]:
    """Run the noisy walk on inputs ``(i, j)``; return the output label and stats.

    ``eq_check`` is the Equality subprotocol (pass ``eq_once_exact`` for an
    error-free run). ``oracle`` supplies ground truth for the instrumentation
    only; it never influences the walk.
    """
    config = config or aug.config
    rand = rand if rand is not None else SharedRandomness(0)
    meter = meter if meter is not None else CostMeter()
    tree = aug.base
    ext = aug.ext
    rounds = rounds_for(tree.depth, config)
    stats = NoisyRunStats(rounds=rounds)
    start_bits = meter.bits

    stack: list[_Entry] = []
    left_a: list[Any] = []
    left_b: list[Any] = []
    cur = tree.root
    level = -1  # -1 while in the base tree, else the level inside L_cur
    wrong_total = 0
    wrong_base = 0

    def current_query():
        if level < 0:
            return tree.query(cur)
        # the base leaf's parent sits just below the extension entries
        return stack[-1 - level].query

    for _ in range(rounds):
        start_good = wrong_base == 0
        on_path = wrong_total == 0
        batch = eq_batch(left_a, left_b, rand, meter, subconfig, check=eq_check)
        q = current_query()
        now = eq_check(q.a(i), q.b(j), rand, meter, subconfig)
        truth_now = bool(oracle(q, i, j))

        if not batch.accepted:
            if stack:
                e = stack.pop()
                if e.left:
                    left_a.pop()
                    left_b.pop()
                if e.wrong:
                    wrong_total -= 1
                    wrong_base -= e.base
                if level > 0:
                    level -= 1
                elif level == 0:
                    cur, level = e.pos, -1
                else:
                    cur = e.pos
                if on_path:
                    stats.moved_up_on_path += 1
        else:
            if not on_path:
                stats.mistakes += 1
            elif level < ext and now.accepted and not truth_now:
                stats.mistakes += 1
            if level < ext:
                ans = now.accepted
                wrong = ans and not truth_now
                in_base = level < 0
                stack.append(_Entry(cur if in_base else None, q, ans, wrong, int(in_base)))
                if ans:
                    left_a.append(q.a(i))
                    left_b.append(q.b(j))
                if wrong:
                    wrong_total += 1
                    wrong_base += int(in_base)
                if in_base:
                    cur = tree.child(cur, ans)
                    if tree.is_leaf(cur):
                        level = 0
                else:
                    level += 1
            # at the bottom of L_v the pointer stays put

        if start_good and wrong_base == 0:
            stats.good += 1
        else:
            stats.bad += 1

    stats.bits = meter.bits - start_bits
    stats.in_extension = level >= 0
    stats.final_depth = len(stack)
    stats.final_position = (cur, level)
    stats.label = tree.label(cur) if level >= 0 else config.default_label
    if check_output:
        stats.correct = stats.label == eval_tree(tree, i, j, oracle).label
    return stats.label, stats


def run_naive(
    tree: ProtocolTree,
    i: Any,
    j: Any,
    reps: int,
    rand: SharedRandomness | None = None,
    meter: CostMeter | None = None,
    *,
    eq_check: Callable = eq_naive,
) -> tuple[Any, int]:
    """Walk ``tree`` answering every query with ``reps``-fold repeated Equality.

    Short paths are padded with idle queries so every run costs
    ``depth * (2 reps + 1)`` bits. Returns the label and the bits charged.
    """
    rand = rand if rand is not None else SharedRandomness(0)
    meter = meter if meter is not None else CostMeter()
    start = meter.bits
    pos = tree.root
    asked = 0
    while not tree.is_leaf(pos):
        q = tree.query(pos)
        ans = eq_check(q.a(i), q.b(j), reps, rand, meter).accepted
        asked += 1
        pos = tree.child(pos, ans)
    for _ in range(tree.depth - asked):
        eq_check(0, 0, reps, rand, meter)
    return tree.label(pos), meter.bits - start


def naive_cost(d: int, reps: int) -> int:
    return d * (2 * reps + 1)
