"""Randomized reduction from k-Hamming-Distance to batches of 1-Hamming-Distance.

While more than ``C_red`` unresolved differences may remain, the live
coordinates ``T`` are split into ``4 * ell`` random cells and every cell is
classified as having 0, 1 or at least 2 differences using tensored Equality
and 1-Hamming-Distance tests. Too many differences means the distance
exceeds ``k``; too few singleton cells means it probably does not. Otherwise
the singleton and empty cells are discarded and ``ell`` drops by the number
of singletons. A small-distance test finishes the job.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .core import BitString, CostMeter, SharedRandomness
from .errors import ConfigurationError, InputDomainError, InvariantError
from .subprotocols import (
    DEFAULT_CONFIG,
    SubprotocolConfig,
    eq_tensor_arrays,
    eq_tensor_repetitions,
    hd1_tensor_arrays,
    hd1_trials,
    hd_small,
    hd_small_exact,
)

SHRINK = Fraction(9, 10)
DEFAULT_CUTOFF = 4
BASE_DELTA = 0.01
ERROR_BUDGET = Fraction(1, 10)


def iteration_bound(k: int) -> int:
    """Smallest ``R`` with ``(10/9)**R >= k``, computed in integers."""
    if k < 1:
        raise InputDomainError("k must be >= 1")
    r = 0
    while 10**r < k * 9**r:
        r += 1
    return r


@dataclass(frozen=True)
class Schedule:
    deltas: tuple[float, ...]
    c: float = 0.9
    cutoff: int = DEFAULT_CUTOFF
    flavor: str = "custom"

    def __post_init__(self) -> None:
        if self.cutoff < 1:
            raise ConfigurationError("cutoff must be >= 1")
        if not self.deltas:
            raise ConfigurationError("schedule needs at least one error level")
        for d in self.deltas:
            if not 0 < d < 1:
                raise ConfigurationError(f"error level {d} outside (0, 1)")
        if math.fsum(self.deltas) > float(ERROR_BUDGET) + 1e-12:
            raise InvariantError(f"schedule errors sum to {math.fsum(self.deltas):.6f} > 1/10")

    @property
    def rounds(self) -> int:
        return len(self.deltas) - 1


def default_schedule(k: int, flavor: str = "theorem5", cutoff: int = DEFAULT_CUTOFF) -> Schedule:
    """Error levels for iterations ``0..R`` with ``R = iteration_bound(k)``.

    ``theorem2``: ``delta_i = c**i / 200``, a geometric sequence summing to at
    most 1/20. ``theorem5``: the uniform ``1 / (11 R)``, widened to
    ``1 / (11 (R + 1))`` when ``R + 1`` copies would exceed the 1/10 budget.
    """
    r = iteration_bound(k)
    if flavor in ("theorem2", "t2"):
        deltas = tuple(0.9**i / 200 for i in range(r + 1))
        flavor = "theorem2"
    elif flavor in ("theorem5", "t5"):
        denom = 11 * r
        if r == 0 or Fraction(r + 1, denom) > ERROR_BUDGET:
            denom = 11 * (r + 1)
        deltas = (1 / denom,) * (r + 1)
        flavor = "theorem5"
    else:
        raise ConfigurationError(f"unknown schedule flavor {flavor!r}")
    return Schedule(deltas, cutoff=cutoff, flavor=flavor)


def random_partition(indices, parts: int, rand: SharedRandomness) -> list[np.ndarray]:
    """Assign every index to one of ``parts`` cells independently and uniformly."""
    if parts < 1:
        raise InputDomainError("parts must be >= 1")
    idx = np.asarray(indices, dtype=np.int64)
    cells = rand.generator().integers(0, parts, size=idx.size)
    return [idx[cells == c] for c in range(parts)]


@dataclass
class IterationRecord:
    iteration: int
    ell_before: int
    ell_after: int
    size_t: int
    s: int
    sum_w: int
    halt: str | None
    outside_before: int
    outside_after: int


@dataclass
class ReductionTrace:
    k: int
    n: int
    mode: str
    records: list[IterationRecord] = field(default_factory=list)
    decision: bool | None = None
    base_ell: int | None = None
    base_size: int | None = None
    bits: int = 0

    @property
    def iterations(self) -> int:
        return len(self.records)

    def violations(self) -> list[str]:
        """Invariants that must hold for every run; the outside-T count only with exact subprotocols."""
        out = []
        prev = self.k
        for rec in self.records:
            if rec.ell_before != prev:
                out.append(f"iteration {rec.iteration}: ell jumped from {prev} to {rec.ell_before}")
            if rec.halt is None:
                if rec.ell_after != rec.ell_before - rec.s:
                    out.append(f"iteration {rec.iteration}: ell did not drop by s")
                if not rec.ell_after < rec.ell_before:
                    out.append(f"iteration {rec.iteration}: ell did not decrease")
            if self.mode == "oracle":
                if rec.outside_before != self.k - rec.ell_before:
                    out.append(f"iteration {rec.iteration}: outside-T count {rec.outside_before} != k - ell")
                if rec.halt is None and rec.outside_after != self.k - rec.ell_after:
                    out.append(f"iteration {rec.iteration}: outside-T count {rec.outside_after} != k - ell")
            prev = rec.ell_after
        if self.iterations > iteration_bound(self.k):
            out.append(f"{self.iterations} iterations exceed the bound {iteration_bound(self.k)}")
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r), sort_keys=True) + "\n" for r in self.records)


def _as_bits(v) -> np.ndarray:
    if isinstance(v, BitString):
        return v.to_array()
    arr = np.asarray(v, dtype=np.uint8)
    if arr.ndim != 1:
        raise InputDomainError("expected a 1-D bit vector")
    return arr


def reduce_hdk(
    x,
    y,
    k: int,
    schedule: Schedule | None = None,
    mode: str = "randomized",
    rand: SharedRandomness | None = None,
    meter: CostMeter | None = None,
    config: SubprotocolConfig = DEFAULT_CONFIG,
    base_delta: float = BASE_DELTA,
) -> tuple[bool, ReductionTrace]:
    """Decide ``dist(x, y) <= k``; return the decision and the iteration trace.

    ``mode="oracle"`` replaces the Equality, 1-Hamming-Distance and final
    small-distance tests by exact answers with identical bit charges; the
    random partitions stay random.
    """
    if mode in ("rand", "randomized"):
        exact = False
    elif mode == "oracle":
        exact = True
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")
    if k < 1:
        raise InputDomainError("k must be >= 1")
    xa, ya = _as_bits(x), _as_bits(y)
    if xa.size != ya.size:
        raise InputDomainError(f"length mismatch: {xa.size} vs {ya.size}")
    schedule = schedule or default_schedule(k)
    rand = rand if rand is not None else SharedRandomness(0)
    meter = meter if meter is not None else CostMeter()
    start_bits = meter.bits
    n = xa.size
    trace = ReductionTrace(k=k, n=n, mode="oracle" if exact else "randomized")
    differs = xa != ya
    live = np.arange(n)
    ell = k
    j = 0
    bound = iteration_bound(k)

    def outside(live_idx: np.ndarray) -> int:
        return int(differs.sum() - differs[live_idx].sum())

    while ell > schedule.cutoff:
        if j > schedule.rounds:
            raise ConfigurationError(f"schedule has {len(schedule.deltas)} levels but iteration {j} needs more")
        if j >= bound:
            raise InvariantError(f"iteration {j} reached the bound {bound}")
        delta = schedule.deltas[j]
        parts = 4 * ell
        cells = rand.generator().integers(0, parts, size=live.size)
        order = np.argsort(cells, kind="stable")
        owner = cells[order]
        members = live[order]
        lengths = np.bincount(cells, minlength=parts)
        xs, ys = xa[members], ya[members]
        if exact:
            diff = np.bincount(owner, weights=differs[members], minlength=parts).astype(np.int64)
            w = np.minimum(diff, 2)
            rand.word()
            rand.word()
            reps = eq_tensor_repetitions(parts, delta, config)
            meter.charge(parts * (reps * config.hash_bits + 1))
            trials = sum(hd1_trials(int(m), delta / parts, config) for m in lengths)
            meter.charge(trials * (config.hd1_buckets + 1))
        else:
            equal = eq_tensor_arrays(xs, ys, owner, parts, delta, config, rand, meter)
            single = hd1_tensor_arrays(xs, ys, owner, lengths, delta, config, rand, meter)
            w = np.where(equal, 0, np.where(single, 1, 2))
        sum_w = int(w.sum())
        s = int((w == 1).sum())
        before = outside(live)
        rec = IterationRecord(j, ell, ell, int(live.size), s, sum_w, None, before, before)
        trace.records.append(rec)
        if sum_w > ell:
            rec.halt = "zero"
            trace.decision = False
            break
        if 10 * s < ell:
            rec.halt = "one"
            trace.decision = True
            break
        live = np.sort(members[w[owner] == 2])
        ell -= s
        rec.ell_after = ell
        rec.outside_after = outside(live)
        j += 1

    if trace.decision is None:
        trace.base_ell = ell
        trace.base_size = int(live.size)
        bx = BitString.from_array(xa[live]) if live.size else BitString(0, 0)
        by = BitString.from_array(ya[live]) if live.size else BitString(0, 0)
        test = hd_small_exact if exact else hd_small
        trace.decision = bool(test(bx, by, ell, base_delta, config, rand, meter))
    trace.bits = meter.bits - start_bits
    return trace.decision, trace


def haltone_tail_count(ell: int, trials: int, seed: int = 0, chunk: int = 1 << 16) -> int:
    """Number of draws, out of ``trials``, where ``ell`` balls in ``4 ell`` buckets hit at most ``0.6 ell`` buckets."""
    if ell < 1:
        raise InputDomainError("ell must be >= 1")
    if trials < 1:
        raise InputDomainError("trials must be >= 1")
    buckets = 4 * ell
    rng = np.random.default_rng(seed)
    dtype = np.int16 if buckets < (1 << 15) else np.int64
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        colors = rng.integers(0, buckets, size=(m, ell), dtype=dtype).astype(np.int64)
        colors += (np.arange(m, dtype=np.int64) * buckets)[:, None]
        occupied = np.zeros(m * buckets, dtype=bool)
        occupied[colors.ravel()] = True
        distinct = occupied.reshape(m, buckets).sum(axis=1)
        hits += int(np.count_nonzero(10 * distinct <= 6 * ell))
        done += m
    return hits


def haltone_tail(ell: int, trials: int, seed: int = 0) -> float:
    """Monte Carlo estimate of ``P[distinct colors <= 0.6 ell]``."""
    return haltone_tail_count(ell, trials, seed) / trials
