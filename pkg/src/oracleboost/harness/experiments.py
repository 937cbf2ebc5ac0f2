"""Monte Carlo estimation of error and cost for every protocol variant.

Protocol randomness for trial ``i`` comes from ``mix(seed, i)``. Inputs are
drawn in fixed-size chunks, chunk ``c`` from a generator seeded with
``mix(seed, 2**40 + c)``, so a report depends only on the configuration.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.stats import binomtest

from ..core import BitString, CostMeter, SharedRandomness, mix
from ..errors import ConfigurationError
from ..hdreduction import default_schedule, iteration_bound, reduce_hdk
from ..noisytree import NoisyConfig, augment, naive_cost, noisy_cost, run_naive, run_noisy
from ..noisytree.fast import BatchInputs, FastNaive, FastNoisy
from ..protolib import WORKLOADS, TreeGraph, build_workload
from ..subprotocols import (
    SubprotocolConfig,
    eq_once,
    hd1,
    hd1_once,
    hd1_trials,
    hd_small,
    hd_small_repetitions,
    naive_repetitions,
    smallhd_buckets,
)

SCHEMA_VERSION = 1
VARIANTS = ("noisy", "naive", "hdreduce", "subprotocol")
DISTRIBUTIONS = ("uniform", "worst", "fixed")
SUBPROTOCOLS = ("eq", "hd1-once", "hd1", "hd-small")
CHUNK = 4096
_INPUT_STREAM = 1 << 40


@dataclass(frozen=True)
class ExperimentConfig:
    workload: str
    n: int
    k: int = 1
    variant: str = "noisy"
    delta: float = 0.25
    c_const: float = 6.0
    trials: int = 1000
    seed: int = 0
    dist: str = "worst"
    distance: int | None = None
    mode: str = "randomized"
    schedule: str = "t5"
    buckets: int = 16

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not 0 < self.delta < 0.5:
            raise ConfigurationError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.n is None or self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.k is None or self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.dist not in DISTRIBUTIONS:
            raise ConfigurationError(f"unknown input distribution {self.dist!r}")
        if self.dist == "fixed" and (self.distance is None or not 0 <= self.distance <= self.n):
            raise ConfigurationError("fixed-distance inputs need 0 <= distance <= n")
        if self.variant in ("noisy", "naive") and self.workload not in WORKLOADS:
            raise ConfigurationError(f"unknown workload {self.workload!r}; expected one of {', '.join(WORKLOADS)}")
        if self.variant == "subprotocol" and self.workload not in SUBPROTOCOLS:
            raise ConfigurationError(f"unknown subprotocol {self.workload!r}; expected one of {', '.join(SUBPROTOCOLS)}")
        if self.variant == "hdreduce":
            if self.mode not in ("randomized", "rand", "oracle"):
                raise ConfigurationError(f"unknown mode {self.mode!r}")
            if self.schedule not in ("t2", "t5", "theorem2", "theorem5"):
                raise ConfigurationError(f"unknown schedule {self.schedule!r}")
        if self.dist == "fixed" and self.workload == "adj-tree":
            raise ConfigurationError("adj-tree inputs are vertices; fixed Hamming distance does not apply")

    def as_dict(self) -> dict:
        return asdict(self)


def wilson_interval(errors: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class ExperimentReport:
    config: dict
    trials: int
    errors: int
    error_rate: float
    ci_low: float
    ci_high: float
    bits_min: int
    bits_mean: float
    bits_max: int
    expected_bits: int | None
    mean_good: float | None = None
    mean_bad: float | None = None
    mean_mistakes: float | None = None
    violations: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    wall_clock: float | None = None
    schema_version: int = SCHEMA_VERSION
    per_run: list = field(default_factory=list, repr=False)
    traces: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("per_run")
        out.pop("traces")
        if self.wall_clock is None:
            out.pop("wall_clock")
        return out


class _Accumulator:
    def __init__(self) -> None:
        self.trials = 0
        self.errors = 0
        self.bits_min = None
        self.bits_max = None
        self.bits_sum = 0
        self.sums = {"good": 0, "bad": 0, "mistakes": 0}
        self.instrumented = False
        self.violations: dict[str, int] = {}

    def add_bits(self, bits: np.ndarray) -> None:
        bits = np.asarray(bits)
        lo, hi = int(bits.min()), int(bits.max())
        self.bits_min = lo if self.bits_min is None else min(self.bits_min, lo)
        self.bits_max = hi if self.bits_max is None else max(self.bits_max, hi)
        self.bits_sum += int(bits.sum())

    def flag(self, name: str, count: int) -> None:
        self.violations[name] = self.violations.get(name, 0) + int(count)

    def report(self, cfg: ExperimentConfig, expected: int | None, extra: dict) -> ExperimentReport:
        lo, hi = wilson_interval(self.errors, self.trials)
        t = self.trials
        return ExperimentReport(
            config=cfg.as_dict(),
            trials=t,
            errors=self.errors,
            error_rate=self.errors / t,
            ci_low=lo,
            ci_high=hi,
            bits_min=self.bits_min,
            bits_mean=self.bits_sum / t,
            bits_max=self.bits_max,
            expected_bits=expected,
            mean_good=self.sums["good"] / t if self.instrumented else None,
            mean_bad=self.sums["bad"] / t if self.instrumented else None,
            mean_mistakes=self.sums["mistakes"] / t if self.instrumented else None,
            violations=dict(sorted(self.violations.items())),
            extra=extra,
        )


# ---------------------------------------------------------------- inputs

def distinct_positions(rng: np.random.Generator, rows: int, n: int, m: int) -> np.ndarray:
    """``(rows, m)`` array; each row holds ``m`` distinct uniform positions in ``[0, n)``."""
    if m > n:
        raise ConfigurationError(f"cannot choose {m} distinct positions out of {n}")
    if m == 0:
        return np.zeros((rows, 0), dtype=np.int64)
    if m * m > 2 * n:
        # rejection would rarely succeed; fall back to a full shuffle
        return np.argsort(rng.random((rows, n)), axis=1)[:, :m]
    pos = rng.integers(0, n, size=(rows, m))
    while True:
        s = np.sort(pos, axis=1)
        dup = (s[:, 1:] == s[:, :-1]).any(axis=1)
        if not dup.any():
            return pos
        pos[dup] = rng.integers(0, n, size=(int(dup.sum()), m))


def flip_at_distance(rng: np.random.Generator, x: np.ndarray, dists: np.ndarray) -> np.ndarray:
    """Copy of the ``(rows, n)`` bit array ``x`` with ``dists[r]`` random bits of row ``r`` flipped."""
    rows, n = x.shape
    y = x.copy()
    m = int(dists.max(initial=0))
    pos = distinct_positions(rng, rows, n, m)
    r = np.arange(rows)
    for col in range(m):
        sel = dists > col
        y[r[sel], pos[sel, col]] ^= 1
    return y


def _bits(rng, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape, dtype=np.uint8)


def _block_pairs(rng, m: int, n: int, blocks: int, cfg: ExperimentConfig, choices) -> tuple[np.ndarray, np.ndarray]:
    x = _bits(rng, (m * blocks, n))
    if cfg.dist == "uniform":
        y = _bits(rng, (m * blocks, n))
    else:
        if cfg.dist == "fixed":
            d = np.full(m * blocks, cfg.distance)
        else:
            d = rng.choice(np.array([c for c in choices if c <= n]), size=m * blocks)
        y = flip_at_distance(rng, x, d)
    return x.reshape(m, blocks * n), y.reshape(m, blocks * n)


def _gt_pairs(rng, m: int, n: int, cfg: ExperimentConfig):
    x = _bits(rng, (m, n))
    if cfg.dist == "uniform":
        return x, _bits(rng, (m, n))
    if cfg.dist == "fixed":
        return x, flip_at_distance(rng, x, np.full(m, cfg.distance))
    # equal with probability 1/8, else the first difference sits at a uniform index
    y = _bits(rng, (m, n))
    first = rng.integers(0, n, size=m)
    idx = np.arange(n)[None, :]
    y = np.where(idx < first[:, None], x, y)
    y[np.arange(m), first] = 1 - x[np.arange(m), first]
    equal = rng.random(m) < 0.125
    y[equal] = x[equal]
    return x, y


def _adj_pairs(rng, m: int, graph: TreeGraph, cfg: ExperimentConfig):
    n = graph.n
    parent = np.array(graph.parent)
    u = rng.integers(0, n, size=m)
    v = rng.integers(0, n, size=m)
    if cfg.dist == "worst":
        kind = rng.integers(0, 3, size=m)
        non_root = np.array([w for w in range(n) if parent[w] != w] or [graph.root])
        child = non_root[rng.integers(0, non_root.size, size=m)]
        swap = rng.random(m) < 0.5
        adj_u = np.where(swap, parent[child], child)
        adj_v = np.where(swap, child, parent[child])
        u = np.where(kind == 0, adj_u, u)
        v = np.where(kind == 0, adj_v, np.where(kind == 1, u, v))
    return u.astype(np.int64), v.astype(np.int64)


def hd1_truth(x: np.ndarray, y: np.ndarray, blocks: int) -> np.ndarray:
    m = x.shape[0]
    diff = (x != y).reshape(m, blocks, -1).sum(axis=2)
    return (diff == 1).astype(np.int64)


def gt_truth(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    diff = x != y
    first = diff.argmax(axis=1)
    bigger = x[np.arange(x.shape[0]), first] == 1
    return (diff.any(axis=1) & bigger).astype(np.int64)[:, None]


def adj_truth(u: np.ndarray, v: np.ndarray, graph: TreeGraph) -> np.ndarray:
    parent = np.array(graph.parent)
    return (((parent[u] == v) | (parent[v] == u)) & (u != v)).astype(np.int64)[:, None]


def _chunks(trials: int):
    for c, start in enumerate(range(0, trials, CHUNK)):
        yield c, start, min(CHUNK, trials - start)


def _input_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(mix(seed, _INPUT_STREAM + chunk))


def tree_batch(cfg: ExperimentConfig, graph, rng, m: int) -> tuple[BatchInputs, np.ndarray]:
    """Inputs and exact labels for ``m`` trials of a tree workload."""
    if cfg.workload == "adj-tree":
        u, v = _adj_pairs(rng, m, graph, cfg)
        return BatchInputs(xint=u[:, None], yint=v[:, None]), adj_truth(u, v, graph)
    if cfg.workload == "gt":
        x, y = _gt_pairs(rng, m, cfg.n, cfg)
        return BatchInputs(x, y), gt_truth(x, y)
    blocks = cfg.k if cfg.workload == "hd1-tensor" else 1
    x, y = _block_pairs(rng, m, cfg.n, blocks, cfg, (0, 1, 2, 3))
    return BatchInputs(x, y), hd1_truth(x, y, blocks)


def _lengths(cfg: ExperimentConfig):
    if cfg.workload == "adj-tree":
        return None
    return [cfg.n] * (cfg.k if cfg.workload == "hd1-tensor" else 1)


# ---------------------------------------------------------------- experiments

def estimate_error(cfg: ExperimentConfig, *, per_run: bool = False, keep_traces: bool = False, timing: bool = False) -> ExperimentReport:
    started = time.perf_counter()
    if cfg.variant in ("noisy", "naive"):
        report = _tree_experiment(cfg, per_run)
    elif cfg.variant == "hdreduce":
        report = _hdreduce_experiment(cfg, keep_traces)
    else:
        report = _subprotocol_experiment(cfg)
    if timing:
        report.wall_clock = time.perf_counter() - started
    return report


def _tree_experiment(cfg: ExperimentConfig, per_run: bool) -> ExperimentReport:
    tree, graph = build_workload(cfg.workload, cfg.n, cfg.k, graph_seed=cfg.seed)
    ncfg = NoisyConfig(delta=cfg.delta, c_const=cfg.c_const)
    d = tree.depth
    acc = _Accumulator()
    rows: list[dict] = []
    if cfg.variant == "noisy":
        engine = FastNoisy(tree, ncfg, _lengths(cfg))
        d = engine.compiled.depth
        expected = noisy_cost(d, ncfg)
        rounds = engine.rounds
        extra = {"depth": d, "rounds": rounds, "extension_depth": engine.aug.ext, "default_label_runs": 0}
        acc.instrumented = True
        for name in ("good+bad=R", "bad<=2m", "good>d=>correct", "no-up-on-path"):
            acc.flag(name, 0)
    else:
        reps = naive_repetitions(max(d, 1), cfg.delta)
        engine = FastNaive(tree, reps, _lengths(cfg))
        d = engine.compiled.depth
        expected = naive_cost(d, reps)
        extra = {"depth": d, "repetitions": reps}
    for c, start, m in _chunks(cfg.trials):
        inputs, truth = tree_batch(cfg, graph, _input_rng(cfg.seed, c), m)
        res = engine.run(inputs, cfg.seed, start)
        wrong = (res.labels != truth).any(axis=1)
        acc.trials += m
        acc.errors += int(wrong.sum())
        acc.add_bits(res.bits)
        if cfg.variant == "noisy":
            extra["default_label_runs"] += int(np.count_nonzero(~res.in_extension))
            acc.sums["good"] += int(res.good.sum())
            acc.sums["bad"] += int(res.bad.sum())
            acc.sums["mistakes"] += int(res.mistakes.sum())
            acc.flag("good+bad=R", np.count_nonzero(res.good + res.bad != rounds))
            acc.flag("bad<=2m", np.count_nonzero(res.bad > 2 * res.mistakes))
            acc.flag("good>d=>correct", np.count_nonzero((res.good > d) & wrong))
            acc.flag("no-up-on-path", np.count_nonzero(res.moved_up_on_path))
            if per_run:
                for t in range(m):
                    rows.append({
                        "seed": mix(cfg.seed, start + t),
                        "d": d,
                        "delta": cfg.delta,
                        "C": cfg.c_const,
                        "R": rounds,
                        "bits": int(res.bits[t]),
                        "good": int(res.good[t]),
                        "bad": int(res.bad[t]),
                        "mistakes": int(res.mistakes[t]),
                        "correct": int(not wrong[t]),
                    })
    acc.flag("bits!=formula", 0 if acc.bits_max == expected else 1)
    report = acc.report(cfg, expected, extra)
    report.per_run = rows
    return report


def hdk_batch(cfg: ExperimentConfig, rng, m: int) -> tuple[np.ndarray, np.ndarray]:
    k = cfg.k
    x, y = _block_pairs(rng, m, cfg.n, 1, cfg, (0, 1, 2, 3, k, k + 1))
    return x, y


def _hdreduce_experiment(cfg: ExperimentConfig, keep_traces: bool) -> ExperimentReport:
    flavor = "theorem2" if cfg.schedule in ("t2", "theorem2") else "theorem5"
    schedule = default_schedule(cfg.k, flavor)
    oracle = cfg.mode == "oracle"
    acc = _Accumulator()
    for name in ("trace", "completeness", "zero-halt", "loop-bound"):
        acc.flag(name, 0)
    bound = iteration_bound(cfg.k)
    max_iter = 0
    traces = []
    for c, start, m in _chunks(cfg.trials):
        x, y = hdk_batch(cfg, _input_rng(cfg.seed, c), m)
        dist = (x != y).sum(axis=1)
        bits = np.zeros(m, dtype=np.int64)
        for t in range(m):
            rand = SharedRandomness(mix(cfg.seed, start + t))
            dec, trace = reduce_hdk(x[t], y[t], cfg.k, schedule, "oracle" if oracle else "randomized", rand)
            truth = bool(dist[t] <= cfg.k)
            acc.errors += dec != truth
            bits[t] = trace.bits
            max_iter = max(max_iter, trace.iterations)
            problems = trace.violations()
            acc.flag("trace", len(problems) > 0)
            acc.flag("loop-bound", trace.iterations > bound)
            if oracle:
                acc.flag("completeness", truth and not dec)
                halted_zero = bool(trace.records) and trace.records[-1].halt == "zero"
                acc.flag("zero-halt", halted_zero and truth)
            if keep_traces:
                traces.append((start + t, int(dist[t]), trace))
        acc.trials += m
        acc.add_bits(bits)
    extra = {"iteration_bound": bound, "max_iterations": max_iter, "schedule": flavor, "deltas": list(schedule.deltas)}
    report = acc.report(cfg, None, extra)
    report.traces = traces
    return report


def subprotocol_cost(cfg: ExperimentConfig, sub: SubprotocolConfig) -> int:
    if cfg.workload == "eq":
        return sub.hash_bits + 1
    if cfg.workload == "hd1-once":
        return sub.hd1_buckets + 1
    if cfg.workload == "hd1":
        return hd1_trials(cfg.n, cfg.delta, sub) * (sub.hd1_buckets + 1)
    return hd_small_repetitions(cfg.k, cfg.n, cfg.delta, sub) * smallhd_buckets(cfg.k, sub) + 1


def _subprotocol_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    sub = SubprotocolConfig(hd1_buckets=cfg.buckets)
    acc = _Accumulator()
    k = cfg.k
    choices = (0, 1, 2, 3) if cfg.workload != "hd-small" else tuple(range(0, k + 2))
    for c, start, m in _chunks(cfg.trials):
        x, y = _block_pairs(_input_rng(cfg.seed, c), m, cfg.n, 1, cfg, choices)
        dist = (x != y).sum(axis=1)
        bits = np.zeros(m, dtype=np.int64)
        for t in range(m):
            rand = SharedRandomness(mix(cfg.seed, start + t))
            meter = CostMeter()
            bx, by = BitString.from_array(x[t]), BitString.from_array(y[t])
            if cfg.workload == "eq":
                got, want = eq_once(bx, by, rand, meter, sub).accepted, dist[t] == 0
            elif cfg.workload == "hd1-once":
                got, want = hd1_once(bx, by, sub.hd1_buckets, rand, meter).accepted, dist[t] == 1
            elif cfg.workload == "hd1":
                got, want = hd1(bx, by, cfg.delta, sub, rand, meter).accepted, dist[t] == 1
            else:
                got, want = hd_small(bx, by, k, cfg.delta, sub, rand, meter), dist[t] <= k
            acc.errors += bool(got) != bool(want)
            bits[t] = meter.bits
        acc.trials += m
        acc.add_bits(bits)
    expected = subprotocol_cost(cfg, sub)
    acc.flag("bits!=formula", int(acc.bits_min != expected or acc.bits_max != expected))
    return acc.report(cfg, expected, {})


# ---------------------------------------------------------------- boosting comparison

@dataclass
class BoostingComparison:
    workload: str
    n: int
    k: int
    delta: float
    c_const: float
    queries: int
    naive_repetitions: int
    naive_bits: int
    noisy_bits: int
    naive_measured: int | None
    noisy_measured: int | None
    ratio: float
    noisy_wins: bool
    crossover_k: int | None
    naive_error: float | None = None
    naive_ci_high: float | None = None
    noisy_error: float | None = None
    noisy_ci_high: float | None = None
    trials: int = 0
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def boosting_costs(q: int, delta: float, c_const: float = 6.0) -> tuple[int, int, int]:
    """``(naive_bits, noisy_bits, repetitions)`` for a depth-``q`` Equality tree."""
    reps = naive_repetitions(q, delta)
    return naive_cost(q, reps), noisy_cost(q, NoisyConfig(delta=delta, c_const=c_const)), reps


def crossover_k(base_depth: int, delta: float, c_const: float = 6.0, limit: int = 1 << 16) -> int | None:
    """Smallest number of tensor copies at which the noisy walk is strictly cheaper."""
    for k in range(1, limit + 1):
        naive, noisy, _ = boosting_costs(k * base_depth, delta, c_const)
        if noisy < naive:
            return k
    return None


def witness_inputs(workload: str, n: int, k: int, graph: TreeGraph | None) -> tuple[Any, Any]:
    """An input pair whose exact path has the full tree depth."""
    if workload == "adj-tree":
        return graph.root, graph.root
    if workload == "gt":
        return BitString(1 << (n - 1), n), BitString(0, n)
    one = BitString(1 << (n - 1), n), BitString(0, n)
    if workload == "hd1-bsearch":
        return one
    return tuple([one[0]] * k), tuple([one[1]] * k)


def compare_boosting(
    workload: str,
    n: int,
    k: int = 1,
    delta: float = 0.25,
    c_const: float = 6.0,
    trials: int = 0,
    seed: int = 0,
    measure: bool = True,
) -> BoostingComparison:
    tree, graph = build_workload(workload, n, k, graph_seed=seed)
    q = tree.depth
    if q < 1:
        raise ConfigurationError("workload tree has no queries")
    naive_bits, noisy_bits, reps = boosting_costs(q, delta, c_const)
    naive_measured = noisy_measured = None
    if measure:
        i, j = witness_inputs(workload, n, k, graph)
        ncfg = NoisyConfig(delta=delta, c_const=c_const)
        _, stats = run_noisy(augment(tree, ncfg), i, j, rand=SharedRandomness(seed), check_output=False)
        noisy_measured = stats.bits
        _, naive_measured = run_naive(tree, i, j, reps, SharedRandomness(seed))
    out = BoostingComparison(
        workload=workload,
        n=n,
        k=k,
        delta=delta,
        c_const=c_const,
        queries=q,
        naive_repetitions=reps,
        naive_bits=naive_bits,
        noisy_bits=noisy_bits,
        naive_measured=naive_measured,
        noisy_measured=noisy_measured,
        ratio=naive_bits / noisy_bits,
        noisy_wins=noisy_bits < naive_bits,
        crossover_k=crossover_k(q // k, delta, c_const) if workload == "hd1-tensor" else None,
        trials=trials,
        seed=seed,
    )
    if trials:
        for variant in ("naive", "noisy"):
            rep = estimate_error(ExperimentConfig(workload, n, k, variant, delta, c_const, trials, seed))
            setattr(out, f"{variant}_error", rep.error_rate)
            setattr(out, f"{variant}_ci_high", rep.ci_high)
    return out
