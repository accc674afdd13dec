"""Bit strings, exact Hamming arithmetic, test instances and public coins.

Every protocol in the package draws its shared randomness from a
:class:`CoinStream`, a counter-addressed Philox stream keyed by
``(seed, stream_id)``.  Two parties holding the same seed therefore derive
identical coins without exchanging anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

__all__ = [
    "BitString",
    "CoinStream",
    "Instance",
    "Verdict",
    "ProtocolViolation",
    "STREAM_Z_VECTORS",
    "STREAM_PARTITION",
    "STREAM_INSTANCE",
    "MAX_BITS",
    "hamming_distance",
    "ham_predicate",
    "gen_instance",
    "draw_biased_bit",
    "biased_bits",
    "sample_subset",
    "trial_seed",
]

# Stream-id allocation. Trial indices are mixed into the seed, not the id.
STREAM_Z_VECTORS = 0
STREAM_PARTITION = 1
STREAM_INSTANCE = 2

MAX_BITS = 1 << 24
_MASK64 = (1 << 64) - 1


class ProtocolViolation(ValueError):
    """A message or parameter set breaks a protocol's structural contract."""


class Verdict(IntEnum):
    """Referee answer; the integer value is the HAM predicate value."""

    LE = 0
    GT = 1


def _words_for(n: int) -> int:
    return (n + 63) >> 6


def _tail_mask(n: int) -> np.uint64:
    r = n & 63
    return np.uint64(_MASK64 if r == 0 else (1 << r) - 1)


class BitString:
    """Immutable fixed-length bit string packed into little-endian uint64 words.

    Bit ``i`` lives in word ``i // 64`` at bit position ``i % 64``.  Bits past
    the end of the string are always zero.
    """

    __slots__ = ("_words", "_n")

    def __init__(self, words: np.ndarray, n: int):
        if not 1 <= n <= MAX_BITS:
            raise ValueError(f"bit string length must be in [1, 2^24], got {n}")
        words = np.array(words, dtype=np.uint64, copy=True).reshape(-1)
        if words.size != _words_for(n):
            raise ValueError(f"{words.size} words cannot hold exactly {n} bits")
        words[-1] &= _tail_mask(n)
        words.flags.writeable = False
        self._words = words
        self._n = n

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, n: int) -> BitString:
        return cls(np.zeros(_words_for(n), dtype=np.uint64), n)

    @classmethod
    def ones(cls, n: int) -> BitString:
        return cls(np.full(_words_for(n), _MASK64, dtype=np.uint64), n)

    @classmethod
    def from_bits(cls, bits) -> BitString:
        arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        n = arr.size
        packed = np.packbits(arr, bitorder="little")
        padded = np.zeros(_words_for(n) * 8, dtype=np.uint8)
        padded[: packed.size] = packed
        return cls(padded.view("<u8"), n)

    @classmethod
    def from_str(cls, text: str) -> BitString:
        """Parse ``"0101"``; character ``i`` is bit ``i``."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls.from_bits([c == "1" for c in text])

    @classmethod
    def from_positions(cls, n: int, positions) -> BitString:
        pos = np.asarray(positions, dtype=np.int64).reshape(-1)
        if pos.size and (pos.min() < 0 or pos.max() >= n):
            raise ValueError("position out of range")
        bits = np.zeros(n, dtype=np.uint8)
        bits[pos] ^= 1
        if pos.size != np.unique(pos).size:
            raise ValueError("duplicate positions")
        return cls.from_bits(bits)

    @classmethod
    def from_hex(cls, text: str, n: int) -> BitString:
        raw = bytes.fromhex(text)
        return cls(np.frombuffer(raw, dtype="<u8"), n)

    # accessors ----------------------------------------------------------

    @property
    def words(self) -> np.ndarray:
        return self._words

    def __len__(self) -> int:
        return self._n

    def bits(self) -> np.ndarray:
        """Unpacked bits as a uint8 array of length ``len(self)``."""
        return np.unpackbits(self._words.view(np.uint8), bitorder="little")[: self._n]

    def positions(self) -> np.ndarray:
        return np.flatnonzero(self.bits())

    def __getitem__(self, i: int) -> int:
        if not -self._n <= i < self._n:
            raise IndexError(i)
        i %= self._n
        return int((int(self._words[i >> 6]) >> (i & 63)) & 1)

    def weight(self) -> int:
        return int(np.bitwise_count(self._words).sum())

    def parity(self) -> int:
        return self.weight() & 1

    def hex(self) -> str:
        return self._words.astype("<u8").tobytes().hex()

    # algebra ------------------------------------------------------------

    def _check_len(self, other: BitString) -> None:
        if not isinstance(other, BitString):
            raise TypeError(f"expected BitString, got {type(other).__name__}")
        if other._n != self._n:
            raise ValueError(f"length mismatch: {self._n} vs {other._n}")

    def __xor__(self, other: BitString) -> BitString:
        self._check_len(other)
        return BitString(self._words ^ other._words, self._n)

    def __and__(self, other: BitString) -> BitString:
        self._check_len(other)
        return BitString(self._words & other._words, self._n)

    def complement(self) -> BitString:
        return BitString(~self._words, self._n)

    def padded(self, n: int) -> BitString:
        """Zero-extend to length ``n``."""
        if n < self._n:
            raise ValueError("cannot pad to a shorter length")
        words = np.zeros(_words_for(n), dtype=np.uint64)
        words[: self._words.size] = self._words
        return BitString(words, n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return self._n == other._n and bool(np.array_equal(self._words, other._words))

    def __hash__(self) -> int:
        return hash((self._n, self._words.tobytes()))

    def __repr__(self) -> str:
        if self._n <= 64:
            return f"BitString('{''.join(map(str, self.bits()))}')"
        return f"BitString(n={self._n}, weight={self.weight()})"


def hamming_distance(x: BitString, y: BitString) -> int:
    """Number of positions where ``x`` and ``y`` differ."""
    x._check_len(y)
    return int(np.bitwise_count(x.words ^ y.words).sum())


def ham_predicate(x: BitString, y: BitString, d: int) -> int:
    """Exact HAM_{n,d}: 1 iff the distance exceeds ``d``."""
    if not 1 <= d <= len(x):
        raise ValueError(f"threshold d={d} outside [1, {len(x)}]")
    return int(hamming_distance(x, y) > d)


# ---------------------------------------------------------------------------
# Shared randomness


def _splitmix64(v: int) -> int:
    v = (v + 0x9E3779B97F4A7C15) & _MASK64
    v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & _MASK64
    return v ^ (v >> 31)


def trial_seed(base_seed: int, trial: int) -> int:
    """Per-trial 64-bit seed; distinct trials get unrelated seeds."""
    return _splitmix64(_splitmix64(base_seed & _MASK64) ^ (trial & _MASK64))


class CoinStream:
    """Counter-addressed public coins.

    Draw ``t`` of lane ``L`` is a pure function of ``(seed, stream_id, L, t)``:
    the Philox key is ``(seed, stream_id)`` and the 256-bit counter is
    ``(t // 4, 0, L, 0)``.  Lanes give independent sub-streams under one id
    (used for repetitions and row chunks).  The cursor advances as values
    are consumed; :meth:`at` returns a fresh cursor at any position.
    """

    __slots__ = ("seed", "stream_id", "lane", "counter", "_bg", "_bg_pos")

    def __init__(self, seed: int, stream_id: int, lane: int = 0, counter: int = 0):
        self.seed = seed & _MASK64
        self.stream_id = stream_id & _MASK64
        self.lane = lane & _MASK64
        self.counter = counter
        self._bg = None
        self._bg_pos = -1

    def __repr__(self) -> str:
        return (f"CoinStream(seed={self.seed}, stream_id={self.stream_id}, "
                f"lane={self.lane}, counter={self.counter})")

    def at(self, counter: int) -> CoinStream:
        return CoinStream(self.seed, self.stream_id, self.lane, counter)

    def substream(self, lane: int) -> CoinStream:
        return CoinStream(self.seed, self.stream_id, lane, 0)

    def raw(self, count: int) -> np.ndarray:
        """The next ``count`` uniform 64-bit words."""
        start = self.counter
        if self._bg is not None and self._bg_pos == start:
            out = self._bg.random_raw(count)
        else:
            block, skip = divmod(start, 4)
            self._bg = np.random.Philox(
                key=[self.seed, self.stream_id], counter=[block, 0, self.lane, 0]
            )
            out = self._bg.random_raw(count + skip)[skip:]
        self.counter = self._bg_pos = start + count
        return out

    def uniform_ints(self, bounds) -> np.ndarray:
        """One uniform integer in ``[0, b)`` per bound, by masked rejection."""
        bounds = np.asarray(bounds, dtype=np.uint64).reshape(-1)
        if bounds.size and bounds.min() < 1:
            raise ValueError("bounds must be >= 1")
        # mask = 2^bitlen(b-1) - 1, computed without floats
        masks = bounds - np.uint64(1)
        for shift in (1, 2, 4, 8, 16, 32):
            masks |= masks >> np.uint64(shift)
        out = np.empty(bounds.size, dtype=np.uint64)
        pending = np.arange(bounds.size)
        while pending.size:
            v = self.raw(pending.size) & masks[pending]
            ok = v < bounds[pending]
            out[pending[ok]] = v[ok]
            pending = pending[~ok]
        return out

    def uniform_int(self, bound: int) -> int:
        return int(self.uniform_ints([bound])[0])

    def uniform_floats(self, count: int) -> np.ndarray:
        """Uniform doubles in ``[0, 1)`` with 53 random bits each."""
        return (self.raw(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def biased_words(self, num: int, den: int, count: int) -> np.ndarray:
        """``count`` words whose bits are i.i.d. Bernoulli(num/den), exactly.

        Each lane compares a lazily expanded uniform real U against the
        binary expansion of num/den and outputs ``U < num/den``; the
        comparison is bit-sliced across the 64 lanes of a word.
        """
        if not 0 <= num <= den or den < 1:
            raise ValueError("need 0 <= num <= den, den >= 1")
        result = np.zeros(count, dtype=np.uint64)
        if num == 0 or count == 0:
            return result
        if num == 1 and den & (den - 1) == 0:
            # U < 2^-j  iff  the first j bits of U are all zero
            j = den.bit_length() - 1
            if j == 0:
                result[:] = _MASK64
                return result
            u = self.raw(j * count).reshape(j, count)
            np.bitwise_or.reduce(u, axis=0, out=result)
            return np.invert(result, out=result)
        und = np.full(count, _MASK64, dtype=np.uint64)
        res = result
        idx = None  # positions of the compacted working set in ``result``
        rem = num
        while und.size:
            rem *= 2
            p_bit = rem >= den
            if p_bit:
                rem -= den
            u = self.raw(und.size)
            if p_bit:
                res |= und & ~u
                und &= u
            else:
                und &= ~u
            if rem == 0:
                # expansion exhausted: remaining lanes have U >= p
                break
            live = np.count_nonzero(und)
            if 2 * live < und.size:
                keep = np.flatnonzero(und)
                if idx is not None:
                    result[idx] = res
                idx = keep if idx is None else idx[keep]
                und = und[keep]
                res = result[idx]
        if idx is not None:
            result[idx] = res
        return result


def draw_biased_bit(stream: CoinStream, denom: int) -> int:
    """1 with probability exactly ``1/denom``: uniform ``u`` in [0, denom), test ``u == 0``."""
    if denom < 1:
        raise ValueError("denom must be >= 1")
    return int(stream.uniform_int(denom) == 0)


def biased_bits(stream: CoinStream, denom: int, count: int) -> np.ndarray:
    """Vectorised :func:`draw_biased_bit`."""
    if denom < 1:
        raise ValueError("denom must be >= 1")
    return (stream.uniform_ints(np.full(count, denom, dtype=np.uint64)) == 0).astype(
        np.uint8
    )


def sample_subset(stream: CoinStream, n: int, k: int) -> np.ndarray:
    """Uniform size-``k`` subset of ``range(n)`` (Floyd's algorithm), sorted."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot pick {k} of {n}")
    draws = stream.uniform_ints(np.arange(n - k + 1, n + 1, dtype=np.uint64))
    chosen: set[int] = set()
    for j, t in zip(range(n - k, n), draws.tolist()):
        chosen.add(j if t in chosen else t)
    return np.array(sorted(chosen), dtype=np.int64)


@dataclass(frozen=True)
class Instance:
    x: BitString
    y: BitString
    d: int
    k: int

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y differ in length")
        if not 1 <= self.d <= len(self.x):
            raise ValueError(f"threshold d={self.d} outside [1, {len(self.x)}]")
        if hamming_distance(self.x, self.y) != self.k:
            raise ValueError("k does not match the Hamming distance of x and y")

    @property
    def n(self) -> int:
        return len(self.x)


def gen_instance(n: int, k: int, stream: CoinStream, d: int = 1) -> Instance:
    """Uniform ``x`` and ``y = x`` with a uniform size-``k`` set of bits flipped."""
    if not 0 <= k <= n:
        raise ValueError(f"distance k={k} outside [0, {n}]")
    x = BitString(stream.raw(_words_for(n)), n)
    flips = BitString.from_positions(n, sample_subset(stream, n, k))
    return Instance(x, x ^ flips, min(d, n), k)
