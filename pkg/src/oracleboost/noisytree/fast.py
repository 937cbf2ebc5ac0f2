"""Compiled bulk engine for noisy-tree and naive-boosting Monte Carlo runs.

Trees are flattened into node arrays and walked by numba kernels, one trial
at a time, with a per-trial SplitMix64 stream seeded by ``mix(seed, trial)``.
Instead of hashing label encodings the kernels sample each Equality outcome
from its exact law: equal labels are always accepted, unequal ones with
probability ``2**-t`` (every inner-product bit of a nonzero difference is an
independent fair coin). The scalar walk in :mod:`.walk` hashes real
encodings and serves as the reference.

Supported labelings: ``Slice`` against the same ``Slice`` (compared through
per-trial prefix counts of differing bits), and any mix of ``Const``,
``BitMap`` and ``Table``. Labels at leaves must be integers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..core import BitMap, Component, Const, EqQueryLabeling, Leaf, ProtocolTree, Slice, Table, TensorTree
from ..errors import InputDomainError, UnsupportedQueryError
from ..subprotocols import DEFAULT_CONFIG, SubprotocolConfig
from .walk import AugmentedTree, NoisyConfig, augment, rounds_for

K_SLICE, K_LABEL = 0, 1
M_CONST, M_BIT, M_TABLE = 0, 1, 2


@dataclass
class CompiledTree:
    kind: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    side: np.ndarray  # (nodes, 2, 4): mode, p0, p1, p2 for the a and b labelings
    left: np.ndarray  # child node id, or -(leaf id + 1)
    right: np.ndarray
    comp: np.ndarray  # kernel component of each node
    next_root: np.ndarray  # per kernel component
    leaf_label: np.ndarray
    pool: np.ndarray
    root: int
    depth: int
    components: int  # total, including leaf-only ones
    active: tuple[int, ...]  # original index of each kernel component
    fixed: dict
    offsets: tuple[int, ...]

    @property
    def width(self) -> int:
        return self.offsets[-1]


def _side(lab, comp_index: int, offset: int, length: int, pool: list[int]) -> list[int]:
    if isinstance(lab, Component):
        lab = lab.inner
    if isinstance(lab, Const):
        return [M_CONST, lab.value, 0, 0]
    if isinstance(lab, BitMap):
        if not 0 <= lab.pos < length:
            raise InputDomainError(f"bit position {lab.pos} outside block of length {length}")
        return [M_BIT, offset + lab.pos, lab.if_zero, lab.if_one]
    if isinstance(lab, Table):
        start = len(pool)
        pool.extend(int(v) for v in lab.values)
        return [M_TABLE, start, comp_index, len(lab.values)]
    raise UnsupportedQueryError(f"labeling {lab!r} has no compiled form")


def compile_tree(tree: ProtocolTree, lengths=None) -> CompiledTree:
    """Flatten an explicit or tensor Equality tree.

    ``lengths[c]`` is the bit length of component ``c``'s input block; it may
    be omitted when no query reads bits.
    """
    comps = list(tree.components) if isinstance(tree, TensorTree) else [tree]
    if lengths is None:
        lengths = [0] * len(comps)
    lengths = [int(v) for v in lengths]
    if len(lengths) != len(comps):
        raise InputDomainError("need one block length per component")
    offsets = [0]
    for n in lengths:
        offsets.append(offsets[-1] + n)

    kind, lo, hi, side, left, right, comp = [], [], [], [], [], [], []
    leaf_label: list[int] = []
    pool: list[int] = []
    roots: list[int] = []
    active: list[int] = []
    fixed: dict = {}

    for c, t in enumerate(comps):
        if isinstance(t.root, Leaf):
            fixed[c] = t.root.label
            continue
        kc = len(active)
        active.append(c)
        off, length = offsets[c], lengths[c]

        def emit(node) -> int:
            if isinstance(node, Leaf):
                if isinstance(node.label, bool) or not isinstance(node.label, (int, np.integer)):
                    raise UnsupportedQueryError(f"compiled trees need integer leaf labels, got {node.label!r}")
                leaf_label.append(int(node.label))
                return -len(leaf_label)
            q = node.query
            if not isinstance(q, EqQueryLabeling):
                raise UnsupportedQueryError(f"not an Equality query: {q!r}")
            idx = len(kind)
            a = q.a.inner if isinstance(q.a, Component) else q.a
            b = q.b.inner if isinstance(q.b, Component) else q.b
            kind.append(0)
            lo.append(0)
            hi.append(0)
            side.append(None)
            left.append(0)
            right.append(0)
            comp.append(kc)
            if isinstance(a, Slice) or isinstance(b, Slice):
                if not (isinstance(a, Slice) and isinstance(b, Slice) and (a.lo, a.hi) == (b.lo, b.hi)):
                    raise UnsupportedQueryError("slice queries must compare the same range on both sides")
                if not 0 <= a.lo <= a.hi <= length:
                    raise InputDomainError(f"slice [{a.lo}, {a.hi}) outside block of length {length}")
                kind[idx] = K_SLICE
                lo[idx], hi[idx] = off + a.lo, off + a.hi
                side[idx] = [[0] * 4, [0] * 4]
            else:
                kind[idx] = K_LABEL
                side[idx] = [_side(a, c, off, length, pool), _side(b, c, off, length, pool)]
            left[idx] = emit(node.left)
            right[idx] = emit(node.right)
            return idx

        roots.append(emit(t.root))

    if not active:
        raise UnsupportedQueryError("tree has no queries")
    next_root = np.array(roots[1:] + [-1], dtype=np.int64)
    return CompiledTree(
        kind=np.array(kind, dtype=np.int64),
        lo=np.array(lo, dtype=np.int64),
        hi=np.array(hi, dtype=np.int64),
        side=np.array(side, dtype=np.int64).reshape(len(kind), 2, 4),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        comp=np.array(comp, dtype=np.int64),
        next_root=next_root,
        leaf_label=np.array(leaf_label, dtype=np.int64),
        pool=np.array(pool if pool else [0], dtype=np.int64),
        root=roots[0],
        depth=tree.depth,
        components=len(comps),
        active=tuple(active),
        fixed=fixed,
        offsets=tuple(offsets),
    )


# ---------------------------------------------------------------- kernels

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@numba.njit(cache=True)
def _finalize(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def kernel_mix(seed, index):
    """Same value as :func:`oracleboost.core.mix`."""
    z = np.uint64(seed) * _GOLDEN + (np.uint64(index) + np.uint64(1)) * _M1
    return _finalize(z)


@numba.njit(cache=True)
def _next(state):
    state = state + _GOLDEN
    return state, _finalize(state)


@numba.njit(cache=True)
def _label(mode, p0, p1, p2, bits, ints, t, pool):
    if mode == 0:
        return p0
    if mode == 1:
        return p2 if bits[t, p0] else p1
    return pool[p0 + ints[t, p1]]


@numba.njit(cache=True)
def _answer(node, t, kind, lo, hi, side, diffpref, xbits, ybits, xint, yint, pool):
    if kind[node] == 0:
        return diffpref[t, hi[node]] == diffpref[t, lo[node]]
    la = _label(side[node, 0, 0], side[node, 0, 1], side[node, 0, 2], side[node, 0, 3], xbits, xint, t, pool)
    lb = _label(side[node, 1, 0], side[node, 1, 1], side[node, 1, 2], side[node, 1, 3], ybits, yint, t, pool)
    return la == lb


@numba.njit(cache=True)
def _noisy_kernel(
    seed, start, rounds, ext, hash_bits, exact,
    kind, lo, hi, side, left, right, comp, next_root, leaf_label, pool, root, max_stack,
    diffpref, xbits, ybits, xint, yint,
    out_label, out_ext, out_good, out_bad, out_mist, out_bits, out_up,
):
    trials = out_ext.shape[0]
    mask = (np.uint64(1) << np.uint64(hash_bits)) - np.uint64(1)
    shift = np.uint64(hash_bits)
    st_node = np.empty(max_stack, dtype=np.int64)
    st_dir = np.empty(max_stack, dtype=np.bool_)
    st_wrong = np.empty(max_stack, dtype=np.bool_)
    st_base = np.empty(max_stack, dtype=np.bool_)
    for t in range(trials):
        state = kernel_mix(seed, start + t)
        cur = root
        level = -1
        sp = 0
        wrong_total = 0
        wrong_base = 0
        good = 0
        bad = 0
        mist = 0
        bits = 0
        up = 0
        for _ in range(rounds):
            state, w = _next(state)
            start_good = wrong_base == 0
            on_path = wrong_total == 0
            batch_ok = on_path or ((not exact) and (w & mask) == 0)
            bits += hash_bits + 1
            qnode = cur if level < 0 else st_node[sp - 1 - level]
            truth = _answer(qnode, t, kind, lo, hi, side, diffpref, xbits, ybits, xint, yint, pool)
            now_ok = truth or ((not exact) and ((w >> shift) & mask) == 0)
            bits += hash_bits + 1
            if not batch_ok:
                if sp > 0:
                    sp -= 1
                    if st_wrong[sp]:
                        wrong_total -= 1
                        if st_base[sp]:
                            wrong_base -= 1
                    if level > 0:
                        level -= 1
                    else:
                        cur = st_node[sp]
                        level = -1
                    if on_path:
                        up += 1
            else:
                if not on_path:
                    mist += 1
                elif level < ext and now_ok and not truth:
                    mist += 1
                if level < ext:
                    wrong = now_ok and not truth
                    in_base = level < 0
                    st_node[sp] = cur if in_base else -1
                    st_dir[sp] = now_ok
                    st_wrong[sp] = wrong
                    st_base[sp] = in_base
                    sp += 1
                    if wrong:
                        wrong_total += 1
                        if in_base:
                            wrong_base += 1
                    if in_base:
                        child = left[cur] if now_ok else right[cur]
                        if child >= 0:
                            cur = child
                        else:
                            nxt = next_root[comp[cur]]
                            if nxt >= 0:
                                cur = nxt
                            else:
                                cur = -child - 1
                                level = 0
                    else:
                        level += 1
            if start_good and wrong_base == 0:
                good += 1
            else:
                bad += 1
        out_ext[t] = level >= 0
        if level >= 0:
            for e in range(sp):
                if st_base[e]:
                    n = st_node[e]
                    child = left[n] if st_dir[e] else right[n]
                    if child < 0:
                        out_label[t, comp[n]] = leaf_label[-child - 1]
        out_good[t] = good
        out_bad[t] = bad
        out_mist[t] = mist
        out_bits[t] = bits
        out_up[t] = up


@numba.njit(cache=True)
def _naive_kernel(
    seed, start, reps,
    kind, lo, hi, side, left, right, comp, next_root, leaf_label, pool, root,
    diffpref, xbits, ybits, xint, yint,
    out_label, out_bits, out_queries,
):
    trials = out_bits.shape[0]
    mask = (np.uint64(1) << np.uint64(reps)) - np.uint64(1)
    for t in range(trials):
        state = kernel_mix(seed, start + t)
        cur = root
        bits = 0
        queries = 0
        while True:
            truth = _answer(cur, t, kind, lo, hi, side, diffpref, xbits, ybits, xint, yint, pool)
            state, w = _next(state)
            ans = truth or (w & mask) == 0
            bits += 2 * reps + 1
            queries += 1
            child = left[cur] if ans else right[cur]
            if child >= 0:
                cur = child
                continue
            out_label[t, comp[cur]] = leaf_label[-child - 1]
            nxt = next_root[comp[cur]]
            if nxt < 0:
                break
            cur = nxt
        out_bits[t] = bits
        out_queries[t] = queries


# ---------------------------------------------------------------- drivers

@dataclass
class BatchInputs:
    """Inputs for a chunk of trials.

    ``xbits``/``ybits`` hold concatenated component blocks as ``(trials, L)``
    0/1 arrays; ``xint``/``yint`` hold integer inputs as ``(trials, k)``.
    Unused kinds may be ``None``.
    """

    xbits: np.ndarray | None = None
    ybits: np.ndarray | None = None
    xint: np.ndarray | None = None
    yint: np.ndarray | None = None

    @property
    def trials(self) -> int:
        for arr in (self.xbits, self.xint):
            if arr is not None:
                return arr.shape[0]
        raise InputDomainError("empty batch")

    def arrays(self, compiled: CompiledTree):
        trials = self.trials
        if self.xbits is not None:
            xb = np.ascontiguousarray(self.xbits, dtype=np.uint8)
            yb = np.ascontiguousarray(self.ybits, dtype=np.uint8)
            if xb.shape != yb.shape or xb.shape[1] != compiled.width:
                raise InputDomainError(f"bit inputs must have shape (trials, {compiled.width})")
            diff = np.zeros((trials, xb.shape[1] + 1), dtype=np.int32)
            np.cumsum(xb != yb, axis=1, out=diff[:, 1:])
        else:
            xb = yb = np.zeros((trials, 1), dtype=np.uint8)
            diff = np.zeros((trials, 1), dtype=np.int32)
        if self.xint is not None:
            xi = np.ascontiguousarray(self.xint, dtype=np.int64).reshape(trials, -1)
            yi = np.ascontiguousarray(self.yint, dtype=np.int64).reshape(trials, -1)
        else:
            xi = yi = np.zeros((trials, 1), dtype=np.int64)
        return diff, xb, yb, xi, yi


@dataclass
class BatchResult:
    labels: np.ndarray  # (trials, components); meaningful where in_extension
    in_extension: np.ndarray
    bits: np.ndarray
    good: np.ndarray | None = None
    bad: np.ndarray | None = None
    mistakes: np.ndarray | None = None
    moved_up_on_path: np.ndarray | None = None
    queries: np.ndarray | None = None


def _check_tables(c: CompiledTree, xi: np.ndarray, yi: np.ndarray) -> None:
    for s, ints in ((0, xi), (1, yi)):
        rows = c.side[:, s, :]
        for mode, _, col, size in rows[rows[:, 0] == M_TABLE]:
            vals = ints[:, col]
            if vals.size and (vals.min() < 0 or vals.max() >= size):
                raise InputDomainError(f"integer input outside a table of size {size}")


def _assemble(compiled: CompiledTree, raw: np.ndarray, trials: int) -> np.ndarray:
    labels = np.zeros((trials, compiled.components), dtype=np.int64)
    for kc, c in enumerate(compiled.active):
        labels[:, c] = raw[:, kc]
    for c, v in compiled.fixed.items():
        labels[:, c] = v
    return labels


class FastNoisy:
    """Bulk noisy-tree runner over a compiled tree."""

    def __init__(
        self,
        tree: ProtocolTree,
        config: NoisyConfig,
        lengths=None,
        subconfig: SubprotocolConfig = DEFAULT_CONFIG,
    ) -> None:
        self.aug: AugmentedTree = augment(tree, config)
        self.compiled = compile_tree(self.aug.base, lengths)
        self.config = config
        self.subconfig = subconfig
        if subconfig.hash_bits > 31:
            raise UnsupportedQueryError("compiled engine supports at most 31 hash bits")
        self.rounds = rounds_for(self.compiled.depth, config)

    def run(self, inputs: BatchInputs, seed: int, start: int = 0, exact: bool = False) -> BatchResult:
        c = self.compiled
        trials = inputs.trials
        diff, xb, yb, xi, yi = inputs.arrays(c)
        _check_tables(c, xi, yi)
        raw = np.zeros((trials, len(c.active)), dtype=np.int64)
        ext_flag = np.zeros(trials, dtype=np.bool_)
        good = np.zeros(trials, dtype=np.int64)
        bad = np.zeros(trials, dtype=np.int64)
        mist = np.zeros(trials, dtype=np.int64)
        bits = np.zeros(trials, dtype=np.int64)
        up = np.zeros(trials, dtype=np.int64)
        _noisy_kernel(
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(start), self.rounds, self.aug.ext,
            self.subconfig.hash_bits, exact,
            c.kind, c.lo, c.hi, c.side, c.left, c.right, c.comp, c.next_root, c.leaf_label, c.pool,
            c.root, c.depth + self.aug.ext + 1,
            diff, xb, yb, xi, yi,
            raw, ext_flag, good, bad, mist, bits, up,
        )
        labels = _assemble(c, raw, trials)
        labels[~ext_flag] = self.config.default_label
        return BatchResult(labels, ext_flag, bits, good, bad, mist, up)


class FastNaive:
    """Bulk naive-boosting runner: each query repeated ``reps`` times, 2 bits per repetition plus a verdict.

    Mirrors :func:`.walk.run_naive`, including padding to the full depth.
    """

    def __init__(self, tree: ProtocolTree, reps: int, lengths=None) -> None:
        if not 1 <= reps <= 63:
            raise UnsupportedQueryError("compiled naive engine supports 1..63 repetitions")
        base = augment(tree, NoisyConfig()).base
        self.compiled = compile_tree(base, lengths)
        self.reps = reps

    def run(self, inputs: BatchInputs, seed: int, start: int = 0) -> BatchResult:
        c = self.compiled
        trials = inputs.trials
        diff, xb, yb, xi, yi = inputs.arrays(c)
        _check_tables(c, xi, yi)
        raw = np.zeros((trials, len(c.active)), dtype=np.int64)
        bits = np.zeros(trials, dtype=np.int64)
        queries = np.zeros(trials, dtype=np.int64)
        _naive_kernel(
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(start), self.reps,
            c.kind, c.lo, c.hi, c.side, c.left, c.right, c.comp, c.next_root, c.leaf_label, c.pool, c.root,
            diff, xb, yb, xi, yi,
            raw, bits, queries,
        )
        # idle queries pad short paths, so every run is charged the full depth
        padded = np.full(trials, c.depth * (2 * self.reps + 1), dtype=np.int64)
        return BatchResult(_assemble(c, raw, trials), np.ones(trials, dtype=bool), padded, queries=queries)
