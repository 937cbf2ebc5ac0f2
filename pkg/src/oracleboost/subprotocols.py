"""Constant-cost randomized building blocks with exact bit accounting.

Every protocol here is public-coin: randomness comes from a
:class:`~oracleboost.core.SharedRandomness` stream both parties read, and
every transmitted bit is charged to a :class:`~oracleboost.core.CostMeter`,
including the final verdict bit that makes the outcome common knowledge.
Costs depend only on the operation and its parameters, never on the inputs
or the random draws.

Each randomized routine has an ``*_exact`` twin with the same signature and
the same cost that answers from the true predicate; protocol logic built on
top can be tested with the twins in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np

from .core import BitString, CostMeter, SharedRandomness, hamming
from .errors import InputDomainError


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    bits_used: int

    def __bool__(self) -> bool:
        return self.accepted


@dataclass(frozen=True)
class SubprotocolConfig:
    hash_bits: int = 2
    hd1_buckets: int = 16
    hd1_trials: int | None = None
    smallhd_bucket_factor: int = 8

    def __post_init__(self) -> None:
        if self.hash_bits < 1:
            raise InputDomainError("hash_bits must be >= 1")
        if self.hd1_buckets < 4:
            raise InputDomainError("hd1_buckets must be >= 4")
        if self.hd1_trials is not None and self.hd1_trials < 1:
            raise InputDomainError("hd1_trials must be >= 1")
        if self.smallhd_bucket_factor < 1:
            raise InputDomainError("smallhd_bucket_factor must be >= 1")


DEFAULT_CONFIG = SubprotocolConfig()


# ---------------------------------------------------------------- encodings

def _encode_into(value: Any, out: list[bytes]) -> None:
    if isinstance(value, BitString):
        nbytes = (value.length + 7) // 8
        out.append(b"B" + value.length.to_bytes(8, "big") + value.value.to_bytes(nbytes, "big"))
    elif isinstance(value, (bool, int, np.integer)):
        v = int(value)
        raw = v.to_bytes((v.bit_length() + 8) // 8, "big", signed=True)
        out.append(b"I" + len(raw).to_bytes(8, "big") + raw)
    elif isinstance(value, tuple):
        out.append(b"T" + len(value).to_bytes(8, "big"))
        for v in value:
            _encode_into(v, out)
    elif isinstance(value, str):
        raw = value.encode()
        out.append(b"S" + len(raw).to_bytes(8, "big") + raw)
    elif value is None:
        out.append(b"N")
    else:
        raise InputDomainError(f"cannot encode {type(value).__name__} as a protocol input")


@lru_cache(maxsize=1 << 16)
def encode(value: Any) -> bytes:
    """Self-delimiting byte encoding; distinct values stay distinct after zero padding."""
    parts: list[bytes] = []
    _encode_into(value, parts)
    return b"".join(parts)


def _as_words(data: bytes) -> np.ndarray:
    pad = (-len(data)) % 8
    return np.frombuffer(data + b"\0" * pad, dtype=">u8").astype(np.uint64)


def _inner_product(words: np.ndarray, seed: int) -> int:
    """GF(2) inner product of ``words`` with the random vector expanded from ``seed``."""
    if words.size == 0:
        return 0
    r = np.random.PCG64(seed).random_raw(words.size).astype(np.uint64, copy=False)
    acc = int(np.bitwise_xor.reduce(words & r))
    return acc.bit_count() & 1


def _check_same_length(x: BitString, y: BitString) -> int:
    if not isinstance(x, BitString) or not isinstance(y, BitString):
        raise InputDomainError("expected BitString inputs")
    if x.length != y.length:
        raise InputDomainError(f"length mismatch: {x.length} vs {y.length}")
    return x.length


def _defaults(rand, meter):
    return (rand if rand is not None else SharedRandomness(0)), (meter if meter is not None else CostMeter())


# ---------------------------------------------------------------- exact oracles

def exact_hamming(x: BitString, y: BitString) -> int:
    return hamming(x, y)


def exact_eq(x: Any, y: Any) -> bool:
    if isinstance(x, BitString) and isinstance(y, BitString) and x.length != y.length:
        raise InputDomainError(f"length mismatch: {x.length} vs {y.length}")
    return x == y


# ---------------------------------------------------------------- equality

def eq_once(
    x: Any,
    y: Any,
    rand: SharedRandomness,
    meter: CostMeter,
    config: SubprotocolConfig = DEFAULT_CONFIG,
) -> Verdict:
    """One-sided Equality: Alice sends ``t`` inner-product bits, Bob answers.

    Equal inputs are always accepted; unequal ones with probability ``2**-t``.
    """
    t = config.hash_bits
    seeds = [rand.word() for _ in range(t)]
    wx, wy = _as_words(encode(x)), _as_words(encode(y))
    accepted = all(_inner_product(wx, s) == _inner_product(wy, s) for s in seeds)
    meter.charge(t)
    meter.charge(1)
    return Verdict(accepted, t + 1)


def eq_once_exact(x, y, rand, meter, config=DEFAULT_CONFIG) -> Verdict:
    t = config.hash_bits
    for _ in range(t):
        rand.word()
    meter.charge(t + 1)
    return Verdict(x == y, t + 1)


def eq_batch(
    xs: Sequence[Any],
    ys: Sequence[Any],
    rand: SharedRandomness,
    meter: CostMeter,
    config: SubprotocolConfig = DEFAULT_CONFIG,
    check: Callable[..., Verdict] = eq_once,
) -> Verdict:
    """Conjunction of equalities as a single Equality on the tuples."""
    if len(xs) != len(ys):
        raise InputDomainError(f"batch length mismatch: {len(xs)} vs {len(ys)}")
    return check(tuple(xs), tuple(ys), rand, meter, config)


def eq_batch_exact(xs, ys, rand, meter, config=DEFAULT_CONFIG) -> Verdict:
    return eq_batch(xs, ys, rand, meter, config, check=eq_once_exact)


def eq_repeat(
    x: Any,
    y: Any,
    reps: int,
    rand: SharedRandomness,
    meter: CostMeter,
    config: SubprotocolConfig = DEFAULT_CONFIG,
) -> Verdict:
    """``reps`` independent hashes, then one verdict; false-accept ``2**(-t*reps)``."""
    if reps < 1:
        raise InputDomainError("reps must be >= 1")
    t = config.hash_bits * reps
    seeds = [rand.word() for _ in range(t)]
    wx, wy = _as_words(encode(x)), _as_words(encode(y))
    accepted = all(_inner_product(wx, s) == _inner_product(wy, s) for s in seeds)
    meter.charge(t + 1)
    return Verdict(accepted, t + 1)


def eq_naive(x: Any, y: Any, reps: int, rand: SharedRandomness, meter: CostMeter) -> Verdict:
    """Per-query simulation used by naive boosting.

    Each repetition Alice sends one inner-product bit and Bob replies with his
    comparison bit (2 bits); a last verdict bit closes the query, so the cost
    is ``2*reps + 1`` and the false-accept probability ``2**-reps``.
    """
    if reps < 1:
        raise InputDomainError("reps must be >= 1")
    seeds = [rand.word() for _ in range(reps)]
    wx, wy = _as_words(encode(x)), _as_words(encode(y))
    accepted = all(_inner_product(wx, s) == _inner_product(wy, s) for s in seeds)
    meter.charge(2 * reps + 1)
    return Verdict(accepted, 2 * reps + 1)


def eq_naive_exact(x, y, reps, rand, meter) -> Verdict:
    for _ in range(reps):
        rand.word()
    meter.charge(2 * reps + 1)
    return Verdict(x == y, 2 * reps + 1)


def naive_repetitions(queries: int, delta: float) -> int:
    """``ceil(log2(q / delta))`` one-bit repetitions per query for union-bound error ``delta``."""
    if queries < 1 or not 0 < delta < 1:
        raise InputDomainError("need queries >= 1 and 0 < delta < 1")
    return max(1, math.ceil(math.log2(queries / delta) - 1e-12))


# ---------------------------------------------------------------- majority boosting

def majority_repetitions(delta: float) -> int:
    """``ceil(18 ln(1/delta))`` repetitions for a two-sided error-1/4 protocol."""
    if not 0 < delta <= 0.25:
        raise InputDomainError("majority boosting needs 0 < delta <= 1/4")
    return math.ceil(18 * math.log(1 / delta))


def boost_majority(protocol: Callable[..., Any], delta: float) -> Callable[..., Verdict]:
    """Wrap ``protocol(x, y, rand, meter) -> Verdict | bool`` into a majority vote."""
    reps = majority_repetitions(delta)

    def boosted(x, y, rand: SharedRandomness, meter: CostMeter) -> Verdict:
        start = meter.bits
        votes = 0
        for _ in range(reps):
            votes += bool(protocol(x, y, rand, meter))
        return Verdict(2 * votes > reps, meter.bits - start)

    boosted.repetitions = reps
    return boosted


# ---------------------------------------------------------------- 1-Hamming distance

@lru_cache(maxsize=None)
def odd_bucket_distribution(buckets: int, balls: int) -> np.ndarray:
    """Exact law of the number of odd-occupancy buckets after throwing balls uniformly.

    Row ``d`` is the distribution after ``d`` balls (``d = 0..balls``). Each
    ball flips the parity of one bucket, so the odd count moves down with
    probability ``o/b`` and up otherwise.
    """
    b = buckets
    out = np.zeros((balls + 1, b + 1))
    out[0, 0] = 1.0
    down = np.arange(b + 1) / b
    up = 1.0 - down
    for d in range(1, balls + 1):
        prev = out[d - 1]
        out[d, :-1] += prev[1:] * down[1:]
        out[d, 1:] += prev[:-1] * up[:-1]
    return out


def hd1_accept_probability(buckets: int, dist: int) -> float:
    """Probability that :func:`hd1_once` accepts inputs at Hamming distance ``dist``."""
    return float(odd_bucket_distribution(buckets, dist)[dist, 1])


@lru_cache(maxsize=None)
def hd1_soundness_bound(buckets: int, n: int) -> float:
    """Largest false-accept probability over odd distances ``3 <= d <= n``."""
    if n < 3:
        return 0.0
    table = odd_bucket_distribution(buckets, n)[:, 1]
    return float(table[3::2].max())


def _trials_for(delta: float, per_trial: float) -> int:
    if not 0 < delta < 1:
        raise InputDomainError("error target must lie in (0, 1)")
    if per_trial <= 0.0:
        return 1
    return max(1, math.ceil(math.log(delta) / math.log(per_trial) - 1e-12))


def hd1_trials(n: int, delta: float, config: SubprotocolConfig = DEFAULT_CONFIG) -> int:
    if config.hd1_trials is not None:
        return config.hd1_trials
    return _trials_for(delta, hd1_soundness_bound(config.hd1_buckets, n))


def _bucket_parities(bits: np.ndarray, buckets: np.ndarray, b: int) -> np.ndarray:
    return np.bincount(buckets, weights=bits, minlength=b).astype(np.int64) & 1


def hd1_once(
    x: BitString,
    y: BitString,
    b: int,
    rand: SharedRandomness,
    meter: CostMeter,
) -> Verdict:
    """Bucket-parity test for ``dist(x, y) == 1``.

    A shared random map sends every coordinate to one of ``b`` buckets;
    Alice sends her ``b`` bucket parities and Bob accepts iff exactly one
    differs from his. Distance 1 is always accepted, even distances never.
    """
    n = _check_same_length(x, y)
    if b < 1:
        raise InputDomainError("bucket count must be positive")
    gen = rand.generator()
    buckets = gen.integers(0, b, size=n)
    px = _bucket_parities(x.to_array(), buckets, b)
    py = _bucket_parities(y.to_array(), buckets, b)
    meter.charge(b)
    accepted = int(np.count_nonzero(px != py)) == 1
    meter.charge(1)
    return Verdict(accepted, b + 1)


def hd1_once_exact(x, y, b, rand, meter) -> Verdict:
    _check_same_length(x, y)
    rand.word()
    meter.charge(b + 1)
    return Verdict(hamming(x, y) == 1, b + 1)


def hd1_once_many(xs: np.ndarray, ys: np.ndarray, b: int, rng: np.random.Generator) -> np.ndarray:
    """:func:`hd1_once` on every row pair of two ``(trials, n)`` 0/1 arrays.

    Each row gets its own bucket map. Returns the boolean acceptance vector.
    """
    xs = np.asarray(xs, dtype=np.uint8)
    ys = np.asarray(ys, dtype=np.uint8)
    if xs.shape != ys.shape or xs.ndim != 2:
        raise InputDomainError("expected two equal-shape (trials, n) arrays")
    trials, n = xs.shape
    buckets = rng.integers(0, b, size=(trials, n))
    flat = (buckets + (np.arange(trials) * b)[:, None]).ravel()
    px = np.bincount(flat, weights=xs.ravel(), minlength=trials * b).astype(np.int64) & 1
    py = np.bincount(flat, weights=ys.ravel(), minlength=trials * b).astype(np.int64) & 1
    differing = (px != py).reshape(trials, b).sum(axis=1)
    return differing == 1


def hd1(
    x: BitString,
    y: BitString,
    delta: float,
    config: SubprotocolConfig = DEFAULT_CONFIG,
    rand: SharedRandomness | None = None,
    meter: CostMeter | None = None,
) -> Verdict:
    """:func:`hd1_once` repeated; accept iff every trial accepts."""
    rand, meter = _defaults(rand, meter)
    n = _check_same_length(x, y)
    trials = hd1_trials(n, delta, config)
    start = meter.bits
    accepted = True
    for _ in range(trials):
        accepted &= hd1_once(x, y, config.hd1_buckets, rand, meter).accepted
    return Verdict(accepted, meter.bits - start)


def hd1_exact(x, y, delta, config=DEFAULT_CONFIG, rand=None, meter=None) -> Verdict:
    rand, meter = _defaults(rand, meter)
    n = _check_same_length(x, y)
    trials = hd1_trials(n, delta, config)
    start = meter.bits
    for _ in range(trials):
        hd1_once_exact(x, y, config.hd1_buckets, rand, meter)
    return Verdict(hamming(x, y) == 1, meter.bits - start)


# ---------------------------------------------------------------- tensor versions

def _flatten_pairs(xs: Sequence[BitString], ys: Sequence[BitString]):
    if len(xs) != len(ys):
        raise InputDomainError(f"copy count mismatch: {len(xs)} vs {len(ys)}")
    lengths = np.array([_check_same_length(x, y) for x, y in zip(xs, ys)], dtype=np.int64)
    if len(xs) and lengths.sum():
        xbits = np.concatenate([x.to_array() for x in xs])
        ybits = np.concatenate([y.to_array() for y in ys])
    else:
        xbits = ybits = np.zeros(0, dtype=np.uint8)
    owner = np.repeat(np.arange(len(xs)), lengths)
    return xbits, ybits, owner, lengths


def hd1_tensor_arrays(
    xbits: np.ndarray,
    ybits: np.ndarray,
    owner: np.ndarray,
    lengths: np.ndarray,
    delta: float,
    config: SubprotocolConfig,
    rand: SharedRandomness,
    meter: CostMeter,
) -> np.ndarray:
    """Vectorized :func:`hd1_tensor` on flattened copies (``owner[p]`` is the copy of bit ``p``)."""
    k = len(lengths)
    if k == 0:
        return np.zeros(0, dtype=bool)
    b = config.hd1_buckets
    per_copy = delta / k
    trials = np.array([hd1_trials(int(n), per_copy, config) for n in lengths])
    tmax = int(trials.max())
    gen = rand.generator()
    buckets = gen.integers(0, b, size=(tmax, xbits.size))
    index = (np.arange(tmax)[:, None] * (k * b) + owner[None, :] * b + buckets).ravel()
    size = tmax * k * b
    px = np.bincount(index, weights=np.tile(xbits, tmax), minlength=size).astype(np.int64) & 1
    py = np.bincount(index, weights=np.tile(ybits, tmax), minlength=size).astype(np.int64) & 1
    differing = (px != py).reshape(tmax, k, b).sum(axis=2)
    accept = differing == 1
    accept |= np.arange(tmax)[:, None] >= trials[None, :]
    meter.charge(int((trials * (b + 1)).sum()))
    return accept.all(axis=0)


def hd1_tensor(
    xs: Sequence[BitString],
    ys: Sequence[BitString],
    delta: float,
    config: SubprotocolConfig = DEFAULT_CONFIG,
    rand: SharedRandomness | None = None,
    meter: CostMeter | None = None,
) -> list[bool]:
    """``k`` copies of :func:`hd1`, each at error ``delta / k`` (union bound ``delta``)."""
    rand, meter = _defaults(rand, meter)
    xbits, ybits, owner, lengths = _flatten_pairs(xs, ys)
    return [bool(v) for v in hd1_tensor_arrays(xbits, ybits, owner, lengths, delta, config, rand, meter)]


def hd1_tensor_exact(xs, ys, delta, config=DEFAULT_CONFIG, rand=None, meter=None) -> list[bool]:
    rand, meter = _defaults(rand, meter)
    _, _, _, lengths = _flatten_pairs(xs, ys)
    k = len(lengths)
    if k:
        rand.word()
        trials = [hd1_trials(int(n), delta / k, config) for n in lengths]
        meter.charge(sum(t * (config.hd1_buckets + 1) for t in trials))
    return [hamming(x, y) == 1 for x, y in zip(xs, ys)]


def eq_tensor_repetitions(k: int, delta: float, config: SubprotocolConfig = DEFAULT_CONFIG) -> int:
    """Repetitions per copy so each copy's false-accept is at most ``delta / k``."""
    if not 0 < delta < 1 or k < 1:
        raise InputDomainError("need k >= 1 and 0 < delta < 1")
    return max(1, math.ceil(math.log2(k / delta) / config.hash_bits - 1e-12))


def eq_tensor_arrays(
    xbits: np.ndarray,
    ybits: np.ndarray,
    owner: np.ndarray,
    k: int,
    delta: float,
    config: SubprotocolConfig,
    rand: SharedRandomness,
    meter: CostMeter,
) -> np.ndarray:
    """Vectorized :func:`eq_tensor`; copies must have matched lengths on both sides."""
    if k == 0:
        return np.zeros(0, dtype=bool)
    reps = eq_tensor_repetitions(k, delta, config)
    hashes = reps * config.hash_bits
    gen = rand.generator()
    r = gen.integers(0, 2, size=(hashes, xbits.size), dtype=np.uint8)
    index = (np.arange(hashes)[:, None] * k + owner[None, :]).ravel()
    hx = np.bincount(index, weights=(r & xbits).ravel(), minlength=hashes * k).astype(np.int64) & 1
    hy = np.bincount(index, weights=(r & ybits).ravel(), minlength=hashes * k).astype(np.int64) & 1
    meter.charge(k * (hashes + 1))
    return (hx == hy).reshape(hashes, k).all(axis=0)


def eq_tensor(
    xs: Sequence[BitString],
    ys: Sequence[BitString],
    delta: float,
    config: SubprotocolConfig = DEFAULT_CONFIG,
    rand: SharedRandomness | None = None,
    meter: CostMeter | None = None,
    strategy: str = "repeat",
) -> list[bool]:
    """``k`` Equality answers with joint error ``delta``.

    ``strategy="repeat"`` hashes each copy ``eq_tensor_repetitions`` times and
    accepts a copy iff all its hashes agree. ``strategy="noisy"`` runs the
    noisy-tree walk over the depth-``k`` tensor of single-query trees.
    """
    rand, meter = _defaults(rand, meter)
    if strategy == "noisy":
        return _eq_tensor_noisy(xs, ys, delta, config, rand, meter)
    if strategy != "repeat":
        raise InputDomainError(f"unknown eq_tensor strategy {strategy!r}")
    xbits, ybits, owner, lengths = _flatten_pairs(xs, ys)
    return [bool(v) for v in eq_tensor_arrays(xbits, ybits, owner, len(lengths), delta, config, rand, meter)]


def eq_tensor_exact(xs, ys, delta, config=DEFAULT_CONFIG, rand=None, meter=None) -> list[bool]:
    rand, meter = _defaults(rand, meter)
    _, _, _, lengths = _flatten_pairs(xs, ys)
    k = len(lengths)
    if k:
        rand.word()
        reps = eq_tensor_repetitions(k, delta, config)
        meter.charge(k * (reps * config.hash_bits + 1))
    return [x == y for x, y in zip(xs, ys)]


def _eq_tensor_noisy(xs, ys, delta, config, rand, meter) -> list[bool]:
    from .core import EqQueryLabeling, Leaf, Node, ProtocolTree, Slice, tensor_tree
    from .noisytree import NoisyConfig, augment, run_noisy

    _, _, _, lengths = _flatten_pairs(xs, ys)
    if len(lengths) == 0:
        return []
    trees = [
        ProtocolTree(Node(EqQueryLabeling(Slice(0, int(n)), Slice(0, int(n))), Leaf(True), Leaf(False)))
        for n in lengths
    ]
    ncfg = NoisyConfig(delta=min(delta, 0.49), default_label=None)
    aug = augment(tensor_tree(trees), ncfg)
    label, _ = run_noisy(aug, tuple(xs), tuple(ys), ncfg, rand, meter, subconfig=config)
    if label is None:
        return [False] * len(lengths)
    return list(label)


# ---------------------------------------------------------------- small Hamming distance

def smallhd_buckets(ell: int, config: SubprotocolConfig = DEFAULT_CONFIG) -> int:
    return max(4, config.smallhd_bucket_factor * ell * ell)


@lru_cache(maxsize=None)
def smallhd_soundness_bound(ell: int, buckets: int, n: int) -> float:
    """Largest probability, over true distances ``ell < D <= n``, that at most ``ell`` parities differ."""
    if n <= ell:
        return 0.0
    table = odd_bucket_distribution(buckets, n)
    cdf = table[:, : ell + 1].sum(axis=1)
    return float(min(1.0, cdf[ell + 1 :].max()))


def hd_small_repetitions(ell: int, n: int, delta: float, config: SubprotocolConfig = DEFAULT_CONFIG) -> int:
    b = smallhd_buckets(ell, config)
    return _trials_for(delta, smallhd_soundness_bound(ell, b, n))


def hd_small(
    x: BitString,
    y: BitString,
    ell: int,
    delta: float,
    config: SubprotocolConfig = DEFAULT_CONFIG,
    rand: SharedRandomness | None = None,
    meter: CostMeter | None = None,
) -> bool:
    """Decide ``dist(x, y) <= ell`` for small ``ell``.

    Each repetition hashes coordinates into ``b = max(4, 8 ell^2)`` buckets
    and counts differing bucket parities, which never exceeds the true
    distance. Accept iff the maximum count over all repetitions is ``<= ell``.
    """
    rand, meter = _defaults(rand, meter)
    if ell < 0:
        raise InputDomainError("distance threshold must be >= 0")
    n = _check_same_length(x, y)
    b = smallhd_buckets(ell, config)
    reps = hd_small_repetitions(ell, n, delta, config)
    gen = rand.generator()
    buckets = gen.integers(0, b, size=(reps, n))
    index = (buckets + (np.arange(reps) * b)[:, None]).ravel()
    px = np.bincount(index, weights=np.tile(x.to_array(), reps), minlength=reps * b).astype(np.int64) & 1
    py = np.bincount(index, weights=np.tile(y.to_array(), reps), minlength=reps * b).astype(np.int64) & 1
    meter.charge(reps * b)
    measured = (px != py).reshape(reps, b).sum(axis=1)
    meter.charge(1)
    return bool(measured.max(initial=0) <= ell)


def hd_small_exact(x, y, ell, delta, config=DEFAULT_CONFIG, rand=None, meter=None) -> bool:
    rand, meter = _defaults(rand, meter)
    if ell < 0:
        raise InputDomainError("distance threshold must be >= 0")
    n = _check_same_length(x, y)
    rand.word()
    meter.charge(hd_small_repetitions(ell, n, delta, config) * smallhd_buckets(ell, config) + 1)
    return hamming(x, y) <= ell
