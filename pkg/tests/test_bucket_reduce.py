from fractions import Fraction

import numpy as np
import pytest

from hamsmp.bucket_reduce import (
    BucketPartition,
    collision_free,
    collision_prob_bound,
    even_pair_collision_prob,
    independent_collision,
    make_partition,
    pad_length,
    partition_for,
    reduce_string,
    shuffle_permutation,
)
from hamsmp.core import (
    STREAM_INSTANCE,
    BitString,
    CoinStream,
    gen_instance,
    ham_predicate,
    hamming_distance,
    trial_seed,
)


def equal_partitions(items, size):
    """Every partition of ``items`` into blocks of ``size`` (blocks unordered)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    from itertools import combinations

    for others in combinations(rest, size - 1):
        block = (first, *others)
        remaining = [i for i in rest if i not in others]
        for tail in equal_partitions(remaining, size):
            yield [block, *tail]


def test_pad_length():
    assert pad_length(100, 2) == 128
    assert pad_length(64, 2) == 64
    assert pad_length(4096, 4) == 4096
    assert pad_length(1, 1) == 16


class TestPartition:
    def test_deterministic(self):
        a = partition_for(1000, 2, 17)
        b = partition_for(1000, 2, 17)
        assert np.array_equal(a.perm, b.perm)
        assert not np.array_equal(a.perm, partition_for(1000, 2, 18).perm)

    def test_shape(self):
        p = make_partition(64, 1, CoinStream(3, 1))
        assert p.buckets == 16 and p.size == 4
        assert sorted(p.perm.tolist()) == list(range(64))
        assert np.all(np.bincount(p.bucket_of()) == 4)

    def test_rejects_uneven(self):
        with pytest.raises(ValueError):
            make_partition(100, 2, CoinStream(0, 1))

    def test_shuffle_uniform(self):
        # every permutation of 4 elements equally likely
        counts = {}
        s = CoinStream(5, 1)
        for _ in range(24_000):
            key = tuple(shuffle_permutation(s, 4).tolist())
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 24
        chi2 = sum((c - 1000) ** 2 / 1000 for c in counts.values())
        assert chi2 < 49.7  # 99.9% quantile, 23 dof


class TestReduce:
    def test_zero(self):
        p = partition_for(300, 2, 1)
        assert reduce_string(BitString.zeros(300), p).weight() == 0
        assert len(reduce_string(BitString.zeros(300), p)) == 64

    def test_linearity(self):
        for seed in range(20):
            inst = gen_instance(500, 37, CoinStream(seed, 2))
            p = partition_for(500, 2, seed)
            assert reduce_string(inst.x, p) ^ reduce_string(inst.y, p) == reduce_string(inst.x ^ inst.y, p)

    def test_matches_direct_parities(self):
        inst = gen_instance(200, 0, CoinStream(4, 2))
        p = partition_for(200, 1, 4)
        bits = np.zeros(p.n_padded, dtype=int)
        bits[:200] = inst.x.bits()
        want = [int(bits[p.members(b)].sum() % 2) for b in range(p.buckets)]
        assert reduce_string(inst.x, p).bits().tolist() == want

    def test_distinct_buckets_preserve_distance(self):
        p = partition_for(128, 2, 9)
        pos = [int(p.members(b)[0]) for b in (0, 1, 2)]
        x = BitString.zeros(128)
        y = BitString.from_positions(128, pos)
        assert collision_free(x, y, p)
        assert hamming_distance(reduce_string(x, p), reduce_string(y, p)) == 3

    def test_forced_collision(self):
        p = partition_for(128, 2, 9)
        pos = [*p.members(0)[:2].tolist(), int(p.members(1)[0])]
        x = BitString.zeros(128)
        y = BitString.from_positions(128, pos)
        assert not collision_free(x, y, p)
        assert hamming_distance(reduce_string(x, p), reduce_string(y, p)) == 3 - 2

    def test_equal_inputs_collision_free(self):
        x = gen_instance(300, 0, CoinStream(1, 2)).x
        assert collision_free(x, x, partition_for(300, 2, 0))


@pytest.mark.parametrize("n,size", [(8, 2), (9, 3), (12, 2), (12, 3), (12, 4), (12, 6)])
def test_contraction_exhaustive(n, size):
    """Over all equal partitions and all difference patterns: reduced <= k,
    same parity, and equality exactly when no bucket holds two differences."""
    patterns = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.int64)
    k = patterns.sum(axis=1)
    for blocks in equal_partitions(list(range(n)), size):
        member = np.zeros((n, len(blocks)), dtype=np.int64)
        for b, block in enumerate(blocks):
            member[list(block), b] = 1
        per_bucket = patterns @ member
        reduced = (per_bucket % 2).sum(axis=1)
        free = per_bucket.max(axis=1) <= 1
        assert np.all(reduced <= k)
        assert np.all((k - reduced) % 2 == 0)
        assert np.array_equal(reduced == k, free)


def test_contraction_random_at_scale():
    for t in range(200):
        s = trial_seed(3, t)
        inst = gen_instance(4096, 8, CoinStream(s, STREAM_INSTANCE))
        p = partition_for(4096, 2, s)
        red = hamming_distance(reduce_string(inst.x, p), reduce_string(inst.y, p))
        assert red <= 8 and (8 - red) % 2 == 0
        assert (red == 8) == collision_free(inst.x, inst.y, p)
        if collision_free(inst.x, inst.y, p):
            assert ham_predicate(reduce_string(inst.x, p), reduce_string(inst.y, p), 2) == ham_predicate(inst.x, inst.y, 2)


class TestBounds:
    def test_examples(self):
        assert collision_prob_bound(1) == Fraction(1, 16)
        assert collision_prob_bound(2) == Fraction(3, 32)
        for d in (1, 2, 3, 10, 999):
            assert collision_prob_bound(d) == Fraction(2 * d - 1, 16 * d)

    def test_below_one_eighth(self):
        d = np.arange(1, 10**6 + 1, dtype=np.int64)
        # (2d-1)/(16d) < 1/8  <=>  8(2d-1) < 16d
        assert np.all(8 * (2 * d - 1) < 16 * d)

    def test_even_partition_pair_probability(self):
        for n, d in ((4096, 1), (4096, 2), (4096, 4), (128, 2)):
            p = pad_length(n, d)
            assert even_pair_collision_prob(p, d) < Fraction(1, 16 * d * d)

    def test_even_pair_probability_empirical(self):
        hits = 0
        for seed in range(4000):
            p = partition_for(128, 2, seed)
            b = p.bucket_of()
            hits += b[5] == b[77]
        want = float(even_pair_collision_prob(128, 2))
        assert abs(hits / 4000 - want) < 4 * np.sqrt(want * (1 - want) / 4000)

    def test_independent_model_matches_exact(self):
        """Balls thrown independently: compare with the exact birthday probability."""
        for d in (1, 2, 3):
            balls, buckets = 2 * d, 16 * d * d
            exact = 1 - np.prod([1 - i / buckets for i in range(balls)])
            s = CoinStream(d, 9)
            freq = np.mean([independent_collision(s, balls, buckets) for _ in range(20_000)])
            assert abs(freq - exact) < 4 * np.sqrt(exact * (1 - exact) / 20_000)
            assert exact <= float(collision_prob_bound(d))

    def test_collision_frequency_even_partition(self):
        d, trials = 2, 2000
        bad = 0
        for t in range(trials):
            s = trial_seed(12, t)
            inst = gen_instance(4096, 2 * d, CoinStream(s, STREAM_INSTANCE))
            bad += not collision_free(inst.x, inst.y, partition_for(4096, d, s))
        bound = float(collision_prob_bound(d))
        assert bad / trials <= bound + 4 * np.sqrt(bound * (1 - bound) / trials)


def test_custom_partition_object():
    p = BucketPartition(6, 3, np.array([5, 0, 1, 4, 2, 3]))
    assert p.size == 2
    assert p.bucket_of().tolist() == [0, 1, 2, 2, 1, 0]
