import math

import numpy as np
import pytest

from oracleboost.core import (
    BitString,
    CostMeter,
    Leaf,
    Node,
    Predicate,
    ProtocolTree,
    SharedRandomness,
    eval_tree,
    mix,
)
from oracleboost.errors import ConfigurationError, InputDomainError, UnsupportedQueryError
from oracleboost.harness.experiments import ExperimentConfig, tree_batch
from oracleboost.noisytree import (
    NoisyConfig,
    augment,
    bits_per_round,
    extension_depth,
    naive_cost,
    noisy_cost,
    rounds_for,
    run_naive,
    run_noisy,
)
from oracleboost.noisytree.fast import BatchInputs, FastNaive, FastNoisy, kernel_mix
from oracleboost.protolib import TreeGraph, adjacency_tree, greater_than_tree, hd1_bsearch_tree, hd1_tensor_tree
from oracleboost.subprotocols import eq_naive_exact, eq_once_exact, naive_repetitions


class TestFormulas:
    def test_extension_depth(self):
        assert extension_depth(NoisyConfig(0.25, 6)) == 12
        assert extension_depth(NoisyConfig(2**-10, 6)) == 60
        assert extension_depth(NoisyConfig(0.01, 6)) == math.ceil(6 * math.log2(100))

    def test_rounds(self):
        cfg = NoisyConfig(0.25, 6)
        assert rounds_for(40, cfg) == 160
        assert rounds_for(272, cfg) == 1088
        assert rounds_for(3, cfg) == 48

    def test_cost(self):
        cfg = NoisyConfig(0.25, 6)
        assert bits_per_round() == 6
        assert noisy_cost(40, cfg) == 960
        assert noisy_cost(272, cfg) == 6528
        assert naive_cost(1088, 13) == 29376

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            NoisyConfig(delta=0.5)
        with pytest.raises(ConfigurationError):
            NoisyConfig(delta=0.1, c_const=0.5)
        with pytest.raises(ConfigurationError):
            rounds_for(0, NoisyConfig())


class TestAugment:
    def test_rejects_non_equality(self):
        t = ProtocolTree(Node(Predicate("hd1"), Leaf(1), Leaf(0)))
        with pytest.raises(UnsupportedQueryError):
            augment(t, NoisyConfig())

    def test_leaf_root_gets_synthetic_parent(self):
        aug = augment(ProtocolTree(Leaf(5)), NoisyConfig())
        label, stats = run_noisy(aug, 0, 0, rand=SharedRandomness(1))
        assert label == 5 and stats.correct

    def test_shape(self):
        aug = augment(hd1_bsearch_tree(16), NoisyConfig(0.25))
        assert aug.depth == aug.base_depth + 12
        assert aug.extension_count() == len(hd1_bsearch_tree(16).leaves())


def _stub_inputs(n, rng):
    x = BitString.from_array(rng.integers(0, 2, n))
    d = int(rng.integers(0, 4))
    return x, x.flip(*rng.choice(n, size=d, replace=False).tolist())


class TestScalarWalk:
    def test_exact_stub_is_always_right(self):
        rng = np.random.default_rng(0)
        tree = hd1_bsearch_tree(32)
        cfg = NoisyConfig(0.25)
        aug = augment(tree, cfg)
        for s in range(50):
            x, y = _stub_inputs(32, rng)
            label, st = run_noisy(aug, x, y, rand=SharedRandomness(s), eq_check=eq_once_exact)
            assert st.correct and st.mistakes == 0 and st.bad == 0
            assert st.good == st.rounds and st.in_extension
            assert label == eval_tree(tree, x, y).label

    def test_claims_hold_with_noise(self):
        rng = np.random.default_rng(1)
        tree = greater_than_tree(16)
        aug = augment(tree, NoisyConfig(0.25))
        for s in range(60):
            x = BitString.from_array(rng.integers(0, 2, 16))
            y = BitString.from_array(rng.integers(0, 2, 16))
            _, st = run_noisy(aug, x, y, rand=SharedRandomness(s))
            assert st.violations(tree.depth) == []
            assert st.bits == noisy_cost(tree.depth, aug.config)

    def test_cost_is_oblivious(self):
        aug = augment(adjacency_tree(TreeGraph.path(5)), NoisyConfig(0.1))
        costs = set()
        for s in range(30):
            meter = CostMeter()
            run_noisy(aug, s % 5, (s * 3) % 5, rand=SharedRandomness(s), meter=meter)
            costs.add(meter.bits)
        assert costs == {noisy_cost(2, aug.config)}

    def test_error_small_at_low_delta(self):
        rng = np.random.default_rng(2)
        tree = hd1_bsearch_tree(16)
        aug = augment(tree, NoisyConfig(0.05))
        wrong = 0
        for s in range(100):
            x, y = _stub_inputs(16, rng)
            _, st = run_noisy(aug, x, y, rand=SharedRandomness(s))
            wrong += not st.correct
        assert wrong <= 5

    def test_csv_row(self):
        aug = augment(hd1_bsearch_tree(4), NoisyConfig())
        _, st = run_noisy(aug, BitString(1, 4), BitString(0, 4), rand=SharedRandomness(3))
        row = st.csv_row(3, 5, aug.config)
        assert tuple(row) == st.CSV_FIELDS
        assert row["R"] == st.rounds and row["good"] + row["bad"] == row["R"]


class TestNaive:
    def test_padding_gives_fixed_cost(self):
        tree = greater_than_tree(8)
        reps = naive_repetitions(tree.depth, 0.25)
        costs = set()
        for v in range(0, 256, 17):
            label, bits = run_naive(tree, BitString(v, 8), BitString(100, 8), reps, SharedRandomness(v))
            costs.add(bits)
        assert costs == {naive_cost(tree.depth, reps)}

    def test_exact_stub(self):
        tree = greater_than_tree(8)
        for v in range(0, 256, 5):
            x, y = BitString(v, 8), BitString(77, 8)
            label, _ = run_naive(tree, x, y, 3, SharedRandomness(0), eq_check=eq_naive_exact)
            assert label == int(v > 77)


def _batch(workload, n, k, trials, seed, graph=None):
    cfg = ExperimentConfig(workload, n, k, trials=trials, seed=seed)
    return tree_batch(cfg, graph, np.random.default_rng(seed), trials)


class TestFastEngine:
    def test_kernel_mix_matches_core(self):
        for seed in (0, 1, 2**63 + 5):
            for i in (0, 1, 99, 2**33):
                assert int(kernel_mix(np.uint64(seed), np.uint64(i))) == mix(seed, i)

    @pytest.mark.parametrize("workload,n,k", [("hd1-bsearch", 64, 1), ("gt", 32, 1), ("hd1-tensor", 8, 4)])
    def test_exact_mode_is_error_free(self, workload, n, k):
        tree = hd1_tensor_tree(n, k) if k > 1 else (hd1_bsearch_tree(n) if workload == "hd1-bsearch" else greater_than_tree(n))
        cfg = NoisyConfig(0.25)
        engine = FastNoisy(tree, cfg, [n] * k)
        inputs, truth = _batch(workload, n, k, 2000, 1)
        res = engine.run(inputs, 1, exact=True)
        assert np.array_equal(res.labels, truth)
        assert (res.mistakes == 0).all() and (res.good == engine.rounds).all()

    def test_adjacency_integer_inputs(self):
        g = TreeGraph.random(30, np.random.default_rng(0))
        engine = FastNoisy(adjacency_tree(g), NoisyConfig(0.25))
        inputs, truth = _batch("adj-tree", 30, 1, 2000, 0, g)
        res = engine.run(inputs, 0, exact=True)
        assert np.array_equal(res.labels, truth)

    def test_agrees_with_scalar_walk_in_distribution(self):
        tree = greater_than_tree(16)
        cfg = NoisyConfig(0.25)
        aug = augment(tree, cfg)
        x = BitString.from_str("1011001110001111")
        y = BitString.from_str("1011001100001111")
        trials = 400
        scalar_good = []
        for s in range(trials):
            _, st = run_noisy(aug, x, y, rand=SharedRandomness(s))
            scalar_good.append(st.good)
        engine = FastNoisy(tree, cfg, [16])
        xa = np.tile(x.to_array(), (4000, 1))
        ya = np.tile(y.to_array(), (4000, 1))
        res = engine.run(BatchInputs(xa, ya), 7)
        # means of good rounds within a few standard errors
        s_mean, f_mean = np.mean(scalar_good), res.good.mean()
        spread = np.std(scalar_good) / math.sqrt(trials) + res.good.std() / math.sqrt(4000)
        assert abs(s_mean - f_mean) < 5 * spread + 0.5
        assert (res.bits == noisy_cost(tree.depth, cfg)).all()

    def test_deterministic_and_resumable(self):
        tree = hd1_bsearch_tree(32)
        engine = FastNoisy(tree, NoisyConfig(0.25), [32])
        inputs, _ = _batch("hd1-bsearch", 32, 1, 100, 5)
        a = engine.run(inputs, 11)
        b = engine.run(inputs, 11)
        assert np.array_equal(a.labels, b.labels) and np.array_equal(a.good, b.good)
        tail = BatchInputs(inputs.xbits[50:], inputs.ybits[50:])
        c = engine.run(tail, 11, start=50)
        assert np.array_equal(c.good, a.good[50:])

    def test_naive_engine(self):
        tree = greater_than_tree(16)
        reps = naive_repetitions(tree.depth, 0.05)
        engine = FastNaive(tree, reps, [16])
        inputs, truth = _batch("gt", 16, 1, 4000, 2)
        res = engine.run(inputs, 2)
        assert (res.bits == naive_cost(tree.depth, reps)).all()
        assert (res.labels != truth).any(axis=1).mean() < 0.05

    def test_bad_shapes(self):
        engine = FastNoisy(hd1_bsearch_tree(8), NoisyConfig(), [8])
        with pytest.raises(InputDomainError):
            engine.run(BatchInputs(np.zeros((2, 7), np.uint8), np.zeros((2, 7), np.uint8)), 0)
