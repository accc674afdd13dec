"""Exact SMP protocol for HAM on a small universe via binary BCH syndromes.

Each party sends the odd power sums S_j = sum_{i in supp(s)} g^(i*j),
j = 1, 3, ..., 4d-1, over GF(2^w).  The XOR of the two messages is the
syndrome of the difference pattern e = a ^ b.  A narrow-sense BCH code of
designed distance 4d+1 recovers e exactly when |e| <= 2d, so the referee
learns |e| and compares it with d.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import BitString, ProtocolViolation, Verdict, ham_predicate, hamming_distance

# Primitive polynomials over GF(2), degree -> coefficient mask (bit i = x^i).
# Version 1; changing any entry changes every syndrome message.
PRIMITIVE_POLYS = {
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
    17: 0x20009,
    18: 0x40081,
    19: 0x80027,
    20: 0x100009,
    21: 0x200005,
    22: 0x400003,
    23: 0x800021,
    24: 0x1000087,
}
PRIMITIVE_POLYS_VERSION = 1

MAX_UNIVERSE = (1 << 24) - 1


def _prime_factors(v: int) -> list[int]:
    out, f = [], 2
    while f * f <= v:
        if v % f == 0:
            out.append(f)
            while v % f == 0:
                v //= f
        f += 1
    if v > 1:
        out.append(v)
    return out


def _mul_by_const(arr: np.ndarray, c: int, w: int, poly: int) -> np.ndarray:
    """Carry-less product of every element of ``arr`` with ``c``, reduced mod ``poly``."""
    acc = np.zeros_like(arr)
    cur = arr.copy()
    top = np.int64(1 << w)
    red = np.int64(poly)
    for bit in range(w):
        if (c >> bit) & 1:
            acc ^= cur
        cur <<= 1
        cur ^= np.where(cur & top, red, 0)
    return acc


class FieldContext:
    """GF(2^w) with log/antilog tables, sized for a universe of ``m`` positions."""

    def __init__(self, m: int):
        if not 2 <= m <= MAX_UNIVERSE:
            raise ValueError(f"universe size must be in [2, 2^24 - 1], got {m}")
        w = 2
        while (1 << w) - 1 < m:
            w += 1
        self.m = m
        self.w = w
        self.modulus = PRIMITIVE_POLYS[w]
        self.order = (1 << w) - 1
        self.exp, self.log = self._build_tables()

    def _build_tables(self) -> tuple[np.ndarray, np.ndarray]:
        n, w, poly = self.order, self.w, self.modulus
        exp = np.empty(2 * n, dtype=np.int64)
        # seed with g^0..g^(w-1), then double: g^(L+i) = g^i * g^L
        size = min(w, n)
        exp[:size] = 1 << np.arange(size)
        while size < n:
            step = min(size, n - size)
            g_l = int(exp[size - 1])
            g_l = int(_mul_by_const(np.array([g_l], dtype=np.int64), 2, w, poly)[0])
            exp[size : size + step] = _mul_by_const(exp[:step], g_l, w, poly)
            size += step
        g_n = int(_mul_by_const(exp[n - 1 : n], 2, w, poly)[0])
        if g_n != 1:
            raise RuntimeError(f"generator order check failed for w={w}")
        for f in _prime_factors(n):
            if exp[n // f] == 1:
                raise RuntimeError(f"polynomial {poly:#x} is not primitive")
        if np.unique(exp[:n]).size != n:
            raise RuntimeError(f"polynomial {poly:#x} is not primitive")
        exp[n:] = exp[:n]
        log = np.full(1 << w, -1, dtype=np.int64)
        log[exp[:n]] = np.arange(n)
        return exp, log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return int(self.exp[(self.order - self.log[a]) % self.order])

    def power(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return int(self.exp[(int(self.log[a]) * e) % self.order])


@lru_cache(maxsize=32)
def build_context(m: int) -> FieldContext:
    return FieldContext(m)


@dataclass(frozen=True)
class SyndromeMessage:
    elems: tuple[int, ...]
    w: int

    @property
    def size_bits(self) -> int:
        return len(self.elems) * self.w

    def __xor__(self, other: SyndromeMessage) -> SyndromeMessage:
        if other.w != self.w or len(other.elems) != len(self.elems):
            raise ProtocolViolation("syndrome messages have different shapes")
        return SyndromeMessage(
            tuple(a ^ b for a, b in zip(self.elems, other.elems)), self.w
        )

    def to_bytes(self) -> bytes:
        width = (self.w + 7) // 8
        return b"".join(e.to_bytes(width, "little") for e in self.elems)

    @classmethod
    def from_bytes(cls, raw: bytes, w: int) -> SyndromeMessage:
        width = (w + 7) // 8
        if len(raw) % width:
            raise ProtocolViolation("truncated syndrome message")
        return cls(
            tuple(int.from_bytes(raw[i : i + width], "little") for i in range(0, len(raw), width)),
            w,
        )


def _power_sums(positions: np.ndarray, ctx: FieldContext, exponents) -> list[int]:
    out = []
    for j in exponents:
        vals = ctx.exp[(positions * j) % ctx.order]
        out.append(int(np.bitwise_xor.reduce(vals)) if vals.size else 0)
    return out


def syndrome_message(s: BitString, ctx: FieldContext, d: int) -> SyndromeMessage:
    """The 2d odd power sums of the support of ``s``."""
    if len(s) > ctx.m:
        raise ValueError(f"string of {len(s)} bits exceeds universe {ctx.m}")
    pos = s.positions().astype(np.int64)
    return SyndromeMessage(tuple(_power_sums(pos, ctx, range(1, 4 * d, 2))), ctx.w)


def _full_syndromes(syn: SyndromeMessage, ctx: FieldContext) -> list[int]:
    """S_1..S_{4d} from the odd ones, using S_{2j} = S_j^2."""
    count = 2 * len(syn.elems)
    full = [0] * (count + 1)
    for i, v in enumerate(syn.elems):
        full[2 * i + 1] = v
    for j in range(2, count + 1, 2):
        full[j] = ctx.mul(full[j // 2], full[j // 2])
    return full[1:]


def berlekamp_massey(seq: list[int], ctx: FieldContext) -> list[int]:
    """Shortest LFSR (connection polynomial, constant term first) generating ``seq``."""
    c, b = [1], [1]
    length, shift, last = 0, 1, 1
    for n, s in enumerate(seq):
        disc = s
        for i in range(1, length + 1):
            if i < len(c):
                disc ^= ctx.mul(c[i], seq[n - i])
        if disc == 0:
            shift += 1
            continue
        coef = ctx.mul(disc, ctx.inv(last))
        t = list(c)
        need = len(b) + shift
        if len(c) < need:
            c = c + [0] * (need - len(c))
        for i, bi in enumerate(b):
            c[i + shift] ^= ctx.mul(coef, bi)
        if 2 * length <= n:
            length, b, last, shift = n + 1 - length, t, disc, 1
        else:
            shift += 1
    c = c[: length + 1] + [0] * max(0, length + 1 - len(c))
    return c


def chien_roots(locator: list[int], ctx: FieldContext) -> np.ndarray:
    """Positions i < m with locator(g^-i) = 0."""
    i = np.arange(ctx.m, dtype=np.int64)
    acc = np.zeros(ctx.m, dtype=np.int64)
    for k, coef in enumerate(locator):
        if coef:
            acc ^= ctx.exp[(int(ctx.log[coef]) - i * k) % ctx.order]
    return np.flatnonzero(acc == 0)


def locate_errors(syn: SyndromeMessage, ctx: FieldContext) -> np.ndarray | None:
    """Positions of the difference pattern, or None when decoding fails."""
    full = _full_syndromes(syn, ctx)
    if not any(full):
        return np.empty(0, dtype=np.int64)
    locator = berlekamp_massey(full, ctx)
    degree = len(locator) - 1
    if degree > len(syn.elems) or locator[-1] == 0:
        return None
    roots = chien_roots(locator, ctx)
    if roots.size != degree:
        return None
    if _power_sums(roots, ctx, range(1, 2 * len(syn.elems), 2)) != list(syn.elems):
        return None
    return roots


def decode_weight(syn: SyndromeMessage, ctx: FieldContext, d: int) -> int | None:
    """Weight of the difference pattern, exact when it is at most ``2d``; None on failure."""
    if len(syn.elems) != 2 * d or syn.w != ctx.w:
        raise ProtocolViolation(f"expected {2 * d} elements of {ctx.w} bits")
    roots = locate_errors(syn, ctx)
    return None if roots is None else int(roots.size)


def inner_decide(
    syn_a: SyndromeMessage, syn_b: SyndromeMessage, ctx: FieldContext, d: int
) -> Verdict:
    t = decode_weight(syn_a ^ syn_b, ctx, d)
    return Verdict.LE if t is not None and t <= d else Verdict.GT


def inner_reference(a: BitString, b: BitString, d: int) -> Verdict:
    """Full-send baseline: the referee sees both strings and answers exactly."""
    if d > len(a):
        return Verdict.LE if hamming_distance(a, b) <= d else Verdict.GT
    return Verdict(ham_predicate(a, b, d))


def message_bits(d: int, m: int) -> int:
    """Per-party syndrome message size, 2d * w(m)."""
    return 2 * d * build_context(m).w
