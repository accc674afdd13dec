"""Random even partition into 16d^2 buckets and per-bucket parity compression."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .core import STREAM_PARTITION, BitString, CoinStream


def bucket_count(d: int) -> int:
    return 16 * d * d


def pad_length(n: int, d: int) -> int:
    """Smallest multiple of 16d^2 that is at least ``n``."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    b = bucket_count(d)
    return -(-n // b) * b


def shuffle_permutation(stream: CoinStream, size: int) -> np.ndarray:
    """Fisher-Yates with rejection-sampled swap indices."""
    perm = list(range(size))
    if size > 1:
        # j_i uniform in [0, i] for i = size-1 .. 1
        js = stream.uniform_ints(np.arange(size, 1, -1, dtype=np.uint64)).tolist()
        for i, j in zip(range(size - 1, 0, -1), js):
            perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class BucketPartition:
    """Position ``perm[j]`` belongs to bucket ``j // size``."""

    n_padded: int
    buckets: int
    perm: np.ndarray

    @property
    def size(self) -> int:
        return self.n_padded // self.buckets

    def bucket_of(self) -> np.ndarray:
        out = np.empty(self.n_padded, dtype=np.int64)
        out[self.perm] = np.arange(self.n_padded) // self.size
        return out

    def members(self, bucket: int) -> np.ndarray:
        return self.perm[bucket * self.size : (bucket + 1) * self.size]


def make_partition(n_padded: int, d: int, coins: CoinStream) -> BucketPartition:
    b = bucket_count(d)
    if n_padded % b:
        raise ValueError(f"{b} buckets do not divide {n_padded} positions")
    perm = shuffle_permutation(coins, n_padded)
    perm.flags.writeable = False
    return BucketPartition(n_padded, b, perm)


def partition_for(n: int, d: int, seed: int) -> BucketPartition:
    """The partition both parties derive from the shared seed."""
    return make_partition(pad_length(n, d), d, CoinStream(seed, STREAM_PARTITION))


def reduce_string(x: BitString, part: BucketPartition) -> BitString:
    """Parity of ``x`` over each bucket (``x`` zero-padded to the partition size)."""
    if len(x) > part.n_padded:
        raise ValueError("string longer than the partitioned range")
    bits = np.zeros(part.n_padded, dtype=np.uint8)
    bits[: len(x)] = x.bits()
    parities = bits[part.perm].reshape(part.buckets, part.size).sum(axis=1) & 1
    return BitString.from_bits(parities)


def collision_free(x: BitString, y: BitString, part: BucketPartition) -> bool:
    """True iff no bucket holds two or more positions where x and y differ."""
    diff = (x ^ y).positions()
    if diff.size < 2:
        return True
    hit = part.bucket_of()[diff]
    return np.unique(hit).size == hit.size


def collision_prob_bound(d: int) -> Fraction:
    """Union bound C(2d, 2) / 16d^2 for 2d balls in 16d^2 buckets."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return Fraction(comb(2 * d, 2), bucket_count(d))


def even_pair_collision_prob(n_padded: int, d: int) -> Fraction:
    """Chance two fixed positions share a bucket under the even partition."""
    size = n_padded // bucket_count(d)
    return Fraction(size - 1, n_padded - 1)


def independent_collision(stream: CoinStream, balls: int, buckets: int) -> bool:
    """Throw balls into buckets independently; True if any bucket gets two."""
    hit = stream.uniform_ints(np.full(balls, buckets, dtype=np.uint64))
    return np.unique(hit).size != hit.size
