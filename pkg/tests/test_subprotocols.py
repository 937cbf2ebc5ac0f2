import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from oracleboost.core import BitString, CostMeter, SharedRandomness
from oracleboost.errors import InputDomainError
from oracleboost.harness import wilson_interval
from oracleboost.subprotocols import (
    SubprotocolConfig,
    Verdict,
    boost_majority,
    encode,
    eq_batch,
    eq_naive,
    eq_once,
    eq_once_exact,
    eq_repeat,
    eq_tensor,
    eq_tensor_exact,
    eq_tensor_repetitions,
    exact_hamming,
    hd1,
    hd1_accept_probability,
    hd1_once,
    hd1_once_many,
    hd1_soundness_bound,
    hd1_tensor,
    hd1_tensor_exact,
    hd1_trials,
    hd_small,
    hd_small_exact,
    hd_small_repetitions,
    majority_repetitions,
    naive_repetitions,
    odd_bucket_distribution,
    smallhd_buckets,
    smallhd_soundness_bound,
)


def _odd_counts_by_enumeration(b, d):
    counts = np.zeros(b + 1)
    for cells in itertools.product(range(b), repeat=d):
        odd = sum(cells.count(c) % 2 for c in set(cells))
        counts[odd] += 1
    return counts / b**d


def _bs(s):
    return BitString.from_str(s)


class TestEncoding:
    def test_prefix_free(self):
        assert encode((1, 2)) != encode((12,))
        assert encode(("ab", "c")) != encode(("a", "bc"))
        assert encode(_bs("01")) != encode(_bs("001"))

    def test_equal_values_equal_codes(self):
        assert encode((_bs("101"), 3)) == encode((_bs("101"), 3))


class TestEquality:
    def test_equal_always_accepted(self):
        rand, meter = SharedRandomness(1), CostMeter()
        for v in range(200):
            assert eq_once(v, v, rand, meter).accepted
        assert meter.bits == 200 * 3

    def test_false_accept_rate(self):
        # t = 2 hash bits: unequal inputs accepted with probability 1/4
        rand, meter = SharedRandomness(7), CostMeter()
        trials = 100_000
        hits = sum(eq_once(v, v + 1, rand, meter).accepted for v in range(trials))
        lo, hi = wilson_interval(hits, trials)
        assert lo <= 0.25 <= hi

    def test_batch_is_conjunction(self):
        rand, meter = SharedRandomness(3), CostMeter()
        assert eq_batch([1, 2], [1, 2], rand, meter).accepted
        assert eq_batch([], [], rand, meter).accepted
        rejects = sum(not eq_batch([1, 2], [1, 3], rand, meter).accepted for _ in range(200))
        assert rejects > 100
        assert meter.bits == 202 * 3
        with pytest.raises(InputDomainError):
            eq_batch([1], [], rand, meter)

    def test_repeat_and_naive_costs(self):
        rand, meter = SharedRandomness(0), CostMeter()
        assert eq_repeat(5, 5, 4, rand, meter).bits_used == 9
        assert eq_naive(5, 5, 4, rand, meter).bits_used == 9
        assert meter.bits == 18

    def test_naive_false_accept(self):
        rand, meter = SharedRandomness(2), CostMeter()
        hits = sum(eq_naive(v, v + 1, 3, rand, meter).accepted for v in range(20_000))
        lo, hi = wilson_interval(hits, 20_000)
        assert lo <= 1 / 8 <= hi

    def test_exact_twin_costs_and_stream(self):
        a, b = SharedRandomness(4), SharedRandomness(4)
        ma, mb = CostMeter(), CostMeter()
        eq_once(1, 2, a, ma)
        assert not eq_once_exact(1, 2, b, mb).accepted
        assert ma.bits == mb.bits and a.position == b.position

    def test_naive_repetitions(self):
        assert naive_repetitions(1088, 0.25) == 13
        assert naive_repetitions(1, 0.5) == 1
        assert naive_repetitions(4, 0.25) == 4

    def test_verdict_truthiness(self):
        assert Verdict(True, 3) and not Verdict(False, 3)


class TestMajority:
    def test_repetition_count(self):
        assert majority_repetitions(0.25) == 25
        assert majority_repetitions(0.01) == math.ceil(18 * math.log(100))
        with pytest.raises(InputDomainError):
            majority_repetitions(0.3)

    def test_boosted_error(self):
        def flaky(x, y, rand, meter):
            meter.charge(1)
            truth = x == y
            return truth if rand.below(4) else not truth

        boosted = boost_majority(flaky, 0.01)
        rand = SharedRandomness(9)
        errors = 0
        trials = 3000
        for t in range(trials):
            meter = CostMeter()
            v = boosted(t, t + (t & 1), rand, meter)
            errors += v.accepted != (t & 1 == 0)
            assert v.bits_used == boosted.repetitions
        assert wilson_interval(errors, trials)[1] <= 0.01


class TestOddBuckets:
    def test_forty_six_over_256(self):
        exact = _odd_counts_by_enumeration(16, 3)
        assert Fraction(exact[1]).limit_denominator(4096) == Fraction(46, 256)
        assert hd1_accept_probability(16, 3) == pytest.approx(46 / 256, abs=1e-12)

    @pytest.mark.parametrize("b,d", [(4, 1), (4, 4), (5, 5), (9, 3), (9, 5)])
    def test_dp_matches_enumeration(self, b, d):
        assert np.allclose(odd_bucket_distribution(b, d)[d], _odd_counts_by_enumeration(b, d))

    def test_distance_one_and_even(self):
        table = odd_bucket_distribution(16, 10)
        assert table[1, 1] == 1.0
        for d in range(0, 11, 2):
            assert table[d, 1] == 0.0

    def test_soundness_peak_at_three(self):
        assert hd1_soundness_bound(16, 256) == pytest.approx(46 / 256)
        assert hd1_soundness_bound(16, 2) == 0.0

    def test_trial_counts(self):
        p = 46 / 256
        assert hd1_trials(256, 0.01) == math.ceil(math.log(0.01) / math.log(p))
        assert hd1_trials(2, 0.01) == 1
        assert hd1_trials(256, 0.01, SubprotocolConfig(hd1_trials=3)) == 3


class TestHd1:
    def test_one_sided(self):
        rng = np.random.default_rng(1)
        rand, meter = SharedRandomness(5), CostMeter()
        for _ in range(300):
            x = BitString.from_array(rng.integers(0, 2, 40))
            one = x.flip(int(rng.integers(40)))
            two = one.flip((int(rng.integers(40)) + 1) % 40)
            assert hd1_once(x, one, 16, rand, meter).accepted
            if exact_hamming(x, two) == 2:
                assert not hd1_once(x, two, 16, rand, meter).accepted
            assert not hd1_once(x, x, 16, rand, meter).accepted

    def test_cost(self):
        meter = CostMeter()
        v = hd1(_bs("0000"), _bs("0111"), 0.01, rand=SharedRandomness(0), meter=meter)
        assert v.bits_used == meter.bits == hd1_trials(4, 0.01) * 17

    def test_many_matches_rate(self):
        rng = np.random.default_rng(2)
        trials = 50_000
        xs = np.zeros((trials, 20), dtype=np.uint8)
        ys = xs.copy()
        ys[:, :3] = 1
        acc = hd1_once_many(xs, ys, 16, rng)
        lo, hi = wilson_interval(int(acc.sum()), trials)
        assert lo <= 46 / 256 <= hi

    def test_boosted_error(self):
        rng = np.random.default_rng(3)
        rand = SharedRandomness(3)
        errors = 0
        for _ in range(2000):
            x = BitString.from_array(rng.integers(0, 2, 32))
            y = x.flip(*rng.choice(32, size=3, replace=False).tolist())
            errors += hd1(x, y, 0.05, rand=rand, meter=CostMeter()).accepted
        assert wilson_interval(errors, 2000)[1] <= 0.05

    def test_length_mismatch(self):
        with pytest.raises(InputDomainError):
            hd1_once(_bs("01"), _bs("0"), 16, SharedRandomness(0), CostMeter())

    def test_tensor(self):
        xs = [_bs("0000"), _bs("1111"), _bs("1010")]
        ys = [_bs("0001"), _bs("1111"), _bs("0101")]
        meter = CostMeter()
        got = hd1_tensor(xs, ys, 0.01, rand=SharedRandomness(1), meter=meter)
        assert got[0] and not got[1] and not got[2]
        want_bits = 3 * hd1_trials(4, 0.01 / 3) * 17
        assert meter.bits == want_bits
        m2 = CostMeter()
        assert hd1_tensor_exact(xs, ys, 0.01, rand=SharedRandomness(1), meter=m2) == [True, False, False]
        assert m2.bits == want_bits


class TestEqTensor:
    def test_repetitions(self):
        assert eq_tensor_repetitions(1, 0.25) == 1
        assert eq_tensor_repetitions(16, 1 / 16) == 4

    def test_single_copy_costs_like_eq_once(self):
        meter = CostMeter()
        eq_tensor([_bs("01")], [_bs("01")], 0.25, rand=SharedRandomness(0), meter=meter)
        assert meter.bits == 3

    def test_answers(self):
        xs = [_bs("0110"), _bs("11"), _bs("")]
        ys = [_bs("0110"), _bs("10"), _bs("")]
        rand = SharedRandomness(6)
        errors = 0
        for _ in range(500):
            got = eq_tensor(xs, ys, 0.05, rand=rand, meter=CostMeter())
            assert got[0] and got[2]
            errors += got[1]
        assert errors < 25 + 20
        assert eq_tensor_exact(xs, ys, 0.05, rand=rand, meter=CostMeter()) == [True, False, True]

    def test_noisy_strategy(self):
        xs = [_bs("0110"), _bs("11")]
        ys = [_bs("0110"), _bs("10")]
        got = eq_tensor(xs, ys, 0.01, rand=SharedRandomness(2), meter=CostMeter(), strategy="noisy")
        assert got == [True, False]
        with pytest.raises(InputDomainError):
            eq_tensor(xs, ys, 0.01, strategy="other")


class TestSmallHd:
    def test_bucket_count(self):
        assert smallhd_buckets(1) == 8
        assert smallhd_buckets(3) == 72
        assert smallhd_buckets(0) == 4

    def test_soundness_examples(self):
        # ell = 1, 8 buckets: three differences all landing in distinct buckets fails
        assert smallhd_soundness_bound(1, 8, 3) == pytest.approx(1 - 7 * 6 / 64)
        assert smallhd_soundness_bound(2, 32, 2) == 0.0

    def test_never_rejects_close_pairs(self):
        rng = np.random.default_rng(0)
        rand = SharedRandomness(0)
        for _ in range(200):
            ell = int(rng.integers(1, 5))
            x = BitString.from_array(rng.integers(0, 2, 30))
            y = x.flip(*rng.choice(30, size=int(rng.integers(0, ell + 1)), replace=False).tolist())
            assert hd_small(x, y, ell, 0.01, rand=rand, meter=CostMeter())

    def test_far_pairs_error(self):
        rng = np.random.default_rng(1)
        rand = SharedRandomness(1)
        errors = 0
        for _ in range(2000):
            x = BitString.from_array(rng.integers(0, 2, 30))
            y = x.flip(*rng.choice(30, size=3, replace=False).tolist())
            errors += hd_small(x, y, 2, 0.01, rand=rand, meter=CostMeter())
        assert wilson_interval(errors, 2000)[1] <= 0.01

    def test_cost_and_exact_twin(self):
        x, y = _bs("0" * 12), _bs("0" * 10 + "11")
        m1, m2 = CostMeter(), CostMeter()
        assert hd_small(x, y, 2, 0.01, rand=SharedRandomness(0), meter=m1)
        assert hd_small_exact(x, y, 2, 0.01, rand=SharedRandomness(0), meter=m2)
        assert m1.bits == m2.bits == hd_small_repetitions(2, 12, 0.01) * 32 + 1


def test_exact_hamming_bit_loop():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a, b = rng.integers(0, 2, 37), rng.integers(0, 2, 37)
        assert exact_hamming(BitString.from_array(a), BitString.from_array(b)) == sum(int(u != v) for u, v in zip(a, b))
