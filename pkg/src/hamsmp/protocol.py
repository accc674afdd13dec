"""The composed one-shot protocol for HAM_{n,d}.

Alice and Bob each send the concatenation of two messages:

* P1: bucket-parity reduction to 16d^2 bits followed by the inner
  syndrome protocol (or, when 16d^2 >= n, the inner protocol applied to
  the unreduced strings);
* P2: the (optionally amplified) gap test on the original strings.

The referee answers ``LE`` only when both sub-protocols say ``LE``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .bucket_reduce import bucket_count, partition_for, reduce_string
from .core import BitString, ProtocolViolation, Verdict
from .gap_test import (
    DEFAULT_GAMMA,
    GapMessage,
    GapTestParams,
    gap_messages,
    gap_referee,
    make_params,
    majority,
    z_coins,
)
from .inner_code import (
    FieldContext,
    SyndromeMessage,
    build_context,
    inner_decide,
    inner_reference,
    syndrome_message,
)

TRANSCRIPT_VERSION = 1
INNER_VARIANTS = ("syndrome", "reference")


@dataclass(frozen=True)
class ProtocolConfig:
    gamma: int = DEFAULT_GAMMA
    reps: int = 1
    inner: str = "syndrome"

    def __post_init__(self):
        if self.inner not in INNER_VARIANTS:
            raise ValueError(f"inner variant must be one of {INNER_VARIANTS}")
        make_params(1, self.gamma, self.reps)  # validates gamma and reps


class Setup:
    """Everything about a run that is public before any input is seen."""

    def __init__(self, n: int, d: int, config: ProtocolConfig):
        if n < 1:
            raise ValueError("n must be >= 1")
        if not 1 <= d <= n:
            raise ValueError(f"threshold d={d} outside [1, {n}]")
        self.n, self.d, self.config = n, d, config
        self.gap: GapTestParams = make_params(d, config.gamma, config.reps)
        if bucket_count(d) < n:
            self.branch = "reduced"
            self.universe = bucket_count(d)
        elif n >= 2:
            self.branch = "direct-inner"
            self.universe = n
        else:
            self.branch = "small-n"
            self.universe = 2

    @property
    def ctx(self) -> FieldContext:
        return build_context(self.universe)

    @property
    def inner_bits(self) -> int:
        if self.config.inner == "reference":
            return self.universe
        return 2 * self.d * self.ctx.w

    @property
    def bits_per_party(self) -> int:
        return self.gap.bits_per_party + self.inner_bits


@dataclass(frozen=True)
class PartyMessage:
    inner: SyndromeMessage | BitString
    gap: tuple[GapMessage, ...]

    @property
    def size_bits(self) -> int:
        inner = self.inner.size_bits if isinstance(self.inner, SyndromeMessage) else len(self.inner)
        return inner + sum(len(g) for g in self.gap)

    def to_record(self) -> dict:
        if isinstance(self.inner, SyndromeMessage):
            inner = {"kind": "syndrome", "w": self.inner.w, "hex": self.inner.to_bytes().hex()}
        else:
            inner = {"kind": "bits", "n": len(self.inner), "hex": self.inner.hex()}
        return {
            "inner": inner,
            "gap": [{"n": len(g), "hex": g.bits.hex()} for g in self.gap],
        }

    @classmethod
    def from_record(cls, rec: dict) -> PartyMessage:
        inner = rec["inner"]
        if inner["kind"] == "syndrome":
            inner_msg = SyndromeMessage.from_bytes(bytes.fromhex(inner["hex"]), inner["w"])
        else:
            inner_msg = BitString.from_hex(inner["hex"], inner["n"])
        gap = tuple(GapMessage(BitString.from_hex(g["hex"], g["n"])) for g in rec["gap"])
        return cls(inner_msg, gap)


def _inner_input(s: BitString, setup: Setup, seed: int) -> BitString:
    if setup.branch == "reduced":
        return reduce_string(s, partition_for(setup.n, setup.d, seed))
    if len(s) < setup.universe:
        return s.padded(setup.universe)
    return s


def party_messages(strings: list[BitString], setup: Setup, seed: int) -> list[PartyMessage]:
    """Messages of several parties computed in one pass over the public coins.

    Party ``i``'s message is a function of ``strings[i]`` and ``seed`` only.
    """
    for s in strings:
        if len(s) != setup.n:
            raise ProtocolViolation(f"input has {len(s)} bits, expected {setup.n}")
    inners = []
    for s in strings:
        reduced = _inner_input(s, setup, seed)
        if setup.config.inner == "reference":
            inners.append(reduced)
        else:
            inners.append(syndrome_message(reduced, setup.ctx, setup.d))
    gaps = [[] for _ in strings]
    for rep in range(setup.gap.reps):
        for box, msg in zip(gaps, gap_messages(strings, setup.gap, z_coins(seed, rep))):
            box.append(msg)
    return [PartyMessage(inner, tuple(g)) for inner, g in zip(inners, gaps)]


def party_message(s: BitString, setup: Setup, seed: int) -> PartyMessage:
    return party_messages([s], setup, seed)[0]


def referee_combine(r1: Verdict, r2: Verdict) -> Verdict:
    return Verdict.LE if r1 == Verdict.LE and r2 == Verdict.LE else Verdict.GT


def referee(
    msg_a: PartyMessage, msg_b: PartyMessage, setup: Setup
) -> tuple[Verdict, Verdict, Verdict]:
    """(r1, r2, final) from the two messages and public parameters alone."""
    if len(msg_a.gap) != setup.gap.reps or len(msg_b.gap) != setup.gap.reps:
        raise ProtocolViolation(f"expected {setup.gap.reps} gap messages per party")
    if setup.config.inner == "reference":
        if not (isinstance(msg_a.inner, BitString) and isinstance(msg_b.inner, BitString)):
            raise ProtocolViolation("reference variant expects raw bit strings")
        if len(msg_a.inner) != setup.universe or len(msg_b.inner) != setup.universe:
            raise ProtocolViolation("reference message has the wrong length")
        r1 = inner_reference(msg_a.inner, msg_b.inner, setup.d)
    else:
        if not (isinstance(msg_a.inner, SyndromeMessage) and isinstance(msg_b.inner, SyndromeMessage)):
            raise ProtocolViolation("syndrome variant expects syndrome messages")
        r1 = inner_decide(msg_a.inner, msg_b.inner, setup.ctx, setup.d)
    r2 = majority(gap_referee(a, b, setup.gap) for a, b in zip(msg_a.gap, msg_b.gap))
    return r1, r2, referee_combine(r1, r2)


@dataclass(frozen=True)
class Transcript:
    """One execution. Field order is the serialised record order."""

    version: int
    n: int
    d: int
    seed: int
    branch: str
    inner: str
    gamma: int
    reps: int
    alice_bits: int
    bob_bits: int
    r1: Verdict
    r2: Verdict
    final: Verdict
    alice_msg: PartyMessage | None = field(default=None, compare=False, repr=False)
    bob_msg: PartyMessage | None = field(default=None, compare=False, repr=False)

    def to_record(self, with_messages: bool = True) -> dict:
        rec = {
            k: (int(v) if isinstance(v, Verdict) else v)
            for k, v in asdict(self).items()
            if k not in ("alice_msg", "bob_msg")
        }
        if with_messages and self.alice_msg is not None:
            rec["alice_msg"] = self.alice_msg.to_record()
            rec["bob_msg"] = self.bob_msg.to_record()
        return rec

    def to_json(self, with_messages: bool = True) -> str:
        return json.dumps(self.to_record(with_messages))

    @classmethod
    def from_record(cls, rec: dict) -> Transcript:
        if rec.get("version") != TRANSCRIPT_VERSION:
            raise ValueError(f"unsupported transcript version {rec.get('version')}")
        kw = {k: rec[k] for k in cls.__dataclass_fields__ if k in rec}
        for k in ("r1", "r2", "final"):
            kw[k] = Verdict(kw[k])
        for k in ("alice_msg", "bob_msg"):
            if k in rec:
                kw[k] = PartyMessage.from_record(rec[k])
        return cls(**kw)

    def setup(self) -> Setup:
        return Setup(self.n, self.d, ProtocolConfig(self.gamma, self.reps, self.inner))


def run_protocol(
    x: BitString, y: BitString, d: int, config: ProtocolConfig | None = None, seed: int = 0
) -> Transcript:
    config = config or ProtocolConfig()
    if len(x) != len(y):
        raise ProtocolViolation("inputs differ in length")
    setup = Setup(len(x), d, config)
    msg_a, msg_b = party_messages([x, y], setup, seed)
    r1, r2, final = referee(msg_a, msg_b, setup)
    return Transcript(
        version=TRANSCRIPT_VERSION, n=setup.n, d=d, seed=seed, branch=setup.branch,
        inner=config.inner, gamma=config.gamma, reps=config.reps,
        alice_bits=msg_a.size_bits, bob_bits=msg_b.size_bits,
        r1=r1, r2=r2, final=final, alice_msg=msg_a, bob_msg=msg_b,
    )


def run_p1(x: BitString, y: BitString, d: int, config: ProtocolConfig, seed: int) -> Verdict:
    """P1 alone: reduction plus inner protocol, no gap test."""
    setup = Setup(len(x), d, config)
    a, b = (_inner_input(s, setup, seed) for s in (x, y))
    if config.inner == "reference":
        return inner_reference(a, b, d)
    ctx = setup.ctx
    return inner_decide(syndrome_message(a, ctx, d), syndrome_message(b, ctx, d), ctx, d)


def cost_of(transcript: Transcript) -> tuple[int, int, int]:
    return transcript.alice_bits, transcript.bob_bits, transcript.alice_bits + transcript.bob_bits
