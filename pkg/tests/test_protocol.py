import json
import math

import pytest

from hamsmp.core import (
    STREAM_INSTANCE,
    BitString,
    CoinStream,
    ProtocolViolation,
    Verdict,
    gen_instance,
    trial_seed,
)
from hamsmp.inner_code import SyndromeMessage
from hamsmp.protocol import (
    PartyMessage,
    ProtocolConfig,
    Setup,
    Transcript,
    cost_of,
    party_message,
    party_messages,
    referee,
    referee_combine,
    run_p1,
    run_protocol,
)

SMALL = ProtocolConfig(gamma=2000)


def instance(n, k, seed, d=1):
    return gen_instance(n, k, CoinStream(seed, STREAM_INSTANCE), d)


def expected_bits(n, d, gamma, reps, inner):
    m = 16 * d * d
    universe = m if m < n else max(n, 2)
    w = math.ceil(math.log2(universe + 1))
    return reps * gamma + (universe if inner == "reference" else 2 * d * w)


def test_combine_rule():
    assert referee_combine(Verdict.LE, Verdict.LE) == Verdict.LE
    assert referee_combine(Verdict.LE, Verdict.GT) == Verdict.GT
    assert referee_combine(Verdict.GT, Verdict.LE) == Verdict.GT
    assert referee_combine(Verdict.GT, Verdict.GT) == Verdict.GT


class TestSetup:
    def test_branches(self):
        assert Setup(4096, 2, SMALL).branch == "reduced"
        assert Setup(64, 2, SMALL).branch == "direct-inner"
        assert Setup(65, 2, SMALL).branch == "reduced"
        assert Setup(1, 1, SMALL).branch == "small-n"

    def test_validation(self):
        with pytest.raises(ValueError):
            Setup(10, 11, SMALL)
        with pytest.raises(ValueError):
            Setup(10, 0, SMALL)
        with pytest.raises(ValueError):
            ProtocolConfig(inner="bogus")
        with pytest.raises(ValueError):
            ProtocolConfig(reps=2)

    def test_large_threshold_accepted(self):
        inst = instance(20, 3, 1)
        tr = run_protocol(inst.x, inst.y, 15, SMALL, 1)
        assert tr.branch == "direct-inner" and tr.final == Verdict.LE


class TestCost:
    def test_examples(self):
        x = BitString.zeros(4096)
        assert run_protocol(x, x, 2).alice_bits == 20028
        assert run_protocol(x, x, 1).alice_bits == 20010
        assert run_protocol(x, x, 2, ProtocolConfig(inner="reference")).alice_bits == 20064

    @pytest.mark.parametrize("inner", ["syndrome", "reference"])
    @pytest.mark.parametrize("reps", [1, 3])
    @pytest.mark.parametrize("gamma", [64, 1000])
    @pytest.mark.parametrize("n,d", [(4096, 1), (4096, 3), (4096, 8), (100, 3), (50, 2), (1, 1), (3, 1)])
    def test_grid(self, n, d, gamma, reps, inner):
        inst = instance(n, min(n, d), n + d)
        tr = run_protocol(inst.x, inst.y, d, ProtocolConfig(gamma, reps, inner), 5)
        want = expected_bits(n, d, gamma, reps, inner)
        assert cost_of(tr) == (want, want, 2 * want)
        assert tr.alice_msg.size_bits == want == tr.setup().bits_per_party

    def test_scaling_ratio_values(self):
        ratios = []
        for d in (2, 4, 8, 16, 32, 64):
            bits = Setup(2**17, d, SMALL).inner_bits
            assert bits == 2 * d * math.ceil(math.log2(16 * d * d + 1))
            ratios.append(bits / (d * math.log2(d)))
        assert ratios == pytest.approx([14, 9, 22 / 3, 6.5, 6, 17 / 3])
        assert all(a > b for a, b in zip(ratios, ratios[1:]))


class TestCorrectness:
    def test_equal_inputs(self):
        for d in (1, 2, 5):
            for seed in range(5):
                x = instance(700, 0, seed).x
                tr = run_protocol(x, x, d, SMALL, seed)
                assert (tr.r1, tr.r2, tr.final) == (Verdict.LE,) * 3

    def test_far_inputs(self):
        x = BitString.zeros(4096)
        for d in (1, 3):
            assert run_protocol(x, x.complement(), d, SMALL, 0).final == Verdict.GT

    def test_final_is_and(self):
        for t in range(30):
            inst = instance(4096, t % 12, t)
            tr = run_protocol(inst.x, inst.y, 3, SMALL, t)
            assert tr.final == referee_combine(tr.r1, tr.r2)

    def test_p1_matches_composed_r1(self):
        for t in range(20):
            inst = instance(2000, t % 9, t)
            assert run_p1(inst.x, inst.y, 2, SMALL, t) == run_protocol(inst.x, inst.y, 2, SMALL, t).r1

    def test_direct_branch_exact_inside_promise(self):
        for k in range(0, 9):
            inst = instance(60, k, k)
            assert run_p1(inst.x, inst.y, 2, SMALL, k) == (Verdict.GT if k > 2 else Verdict.LE)

    def test_swap_symmetry(self):
        for t in range(30):
            s = trial_seed(2, t)
            inst = instance(1500, t % 10, s)
            a = run_protocol(inst.x, inst.y, 2, SMALL, s)
            b = run_protocol(inst.y, inst.x, 2, SMALL, s)
            assert (a.r1, a.r2, a.final) == (b.r1, b.r2, b.final)


class TestIsolation:
    @pytest.mark.parametrize("inner", ["syndrome", "reference"])
    def test_referee_from_serialised_messages(self, inner):
        config = ProtocolConfig(500, 3, inner)
        for t in range(25):
            inst = instance(3000, t % 8, t)
            tr = run_protocol(inst.x, inst.y, 2, config, t)
            back = Transcript.from_record(json.loads(tr.to_json()))
            assert back == tr
            assert referee(back.alice_msg, back.bob_msg, back.setup()) == (tr.r1, tr.r2, tr.final)

    def test_messages_independent_of_partner(self):
        setup = Setup(1000, 3, SMALL)
        x = instance(1000, 0, 1).x
        alone = party_message(x, setup, 9)
        pick = CoinStream(4, 2)
        for _ in range(30):
            y = instance(1000, pick.uniform_int(1001), pick.uniform_int(10**6)).y
            a, b = party_messages([x, y], setup, 9)
            assert a == alone
            assert b == party_message(y, setup, 9)

    def test_message_depends_on_seed(self):
        setup = Setup(1000, 3, SMALL)
        x = instance(1000, 0, 1).x
        assert party_message(x, setup, 1) != party_message(x, setup, 2)


class TestTranscript:
    def test_field_order(self):
        x = BitString.zeros(100)
        rec = run_protocol(x, x, 1, SMALL).to_record(with_messages=False)
        assert list(rec) == ["version", "n", "d", "seed", "branch", "inner", "gamma", "reps",
                             "alice_bits", "bob_bits", "r1", "r2", "final"]

    def test_version_check(self):
        rec = run_protocol(BitString.zeros(10), BitString.zeros(10), 1, SMALL).to_record()
        rec["version"] = 99
        with pytest.raises(ValueError):
            Transcript.from_record(rec)


class TestViolations:
    def test_length_mismatch(self):
        with pytest.raises(ProtocolViolation):
            run_protocol(BitString.zeros(10), BitString.zeros(11), 1, SMALL)

    def test_wrong_input_length(self):
        with pytest.raises(ProtocolViolation):
            party_message(BitString.zeros(9), Setup(10, 1, SMALL), 0)

    def test_wrong_message_kind(self):
        setup = Setup(200, 2, SMALL)
        msg = party_message(BitString.zeros(200), setup, 0)
        bogus = PartyMessage(BitString.zeros(64), msg.gap)
        with pytest.raises(ProtocolViolation):
            referee(msg, bogus, setup)

    def test_wrong_rep_count(self):
        setup = Setup(200, 2, SMALL)
        msg = party_message(BitString.zeros(200), setup, 0)
        with pytest.raises(ProtocolViolation):
            referee(msg, PartyMessage(msg.inner, msg.gap * 2), setup)

    def test_truncated_syndrome(self):
        setup = Setup(200, 2, SMALL)
        msg = party_message(BitString.zeros(200), setup, 0)
        short = PartyMessage(SyndromeMessage(msg.inner.elems[:-1], msg.inner.w), msg.gap)
        with pytest.raises(ProtocolViolation):
            referee(msg, short, setup)
