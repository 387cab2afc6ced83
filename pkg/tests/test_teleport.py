import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from classical_steering.prob_core import make_state, total_variation, uniform_state
from classical_steering.protocol_runtime import Party, RandomSource, VisibilityError, empirical
from classical_steering.teleport import (
    CoinAlreadyConsumed,
    SealedCoin,
    alice_encode,
    analyze_teleport,
    bob_decode,
    run_teleport,
    setup_shared,
)

from conftest import distributions


class _FixedFace:
    """RandomSource stand-in whose next draw hits a chosen face of a uniform die."""

    seed = 0

    def __init__(self, face, d):
        self.k = (2 * face + 1) * (1 << 64) // (2 * d)

    def next_u64(self):
        return self.k


@pytest.mark.parametrize("d,sample,share,expected", [(2, 1, 1, 0), (2, 1, 0, 1), (6, 4, 5, 5)])
def test_alice_encode(d, sample, share, expected):
    coin = SealedCoin(uniform_state(d))
    assert alice_encode(coin, share, d, _FixedFace(sample, d)) == expected
    assert coin.consumed


@pytest.mark.parametrize("d,message,share,expected", [(2, 0, 1, 1), (2, 1, 1, 0), (6, 5, 5, 4)])
def test_bob_decode(d, message, share, expected):
    assert bob_decode(message, share, d) == expected


@pytest.mark.parametrize("d", range(2, 9))
def test_decode_inverts_encode_exhaustively(d):
    for s, share in itertools.product(range(d), repeat=2):
        coin = SealedCoin(uniform_state(d))
        assert bob_decode(alice_encode(coin, share, d, _FixedFace(s, d)), share, d) == s


def test_sealed_coin_samples_once():
    coin = SealedCoin(make_state(2, ["1/3", "2/3"]))
    rng = RandomSource(0)
    coin.sample(rng)
    with pytest.raises(CoinAlreadyConsumed):
        coin.sample(rng)
    with pytest.raises(CoinAlreadyConsumed):
        alice_encode(coin, 0, 2, rng)


def test_setup_shared_equal_and_reproducible():
    a, b, rec = setup_shared(2, RandomSource(3))
    assert a == b == rec["shared"] and a in (0, 1)
    assert setup_shared(2, RandomSource(3)) == (a, b, rec)
    with pytest.raises(ValueError):
        setup_shared(1, RandomSource(0))


@pytest.mark.parametrize("d", [2, 6])
def test_setup_shared_uniform(d):
    rng = RandomSource(99)
    values = [str(setup_shared(d, rng)[0]) for _ in range(100000)]
    emp = empirical(values, uniform_state(d).space)
    assert total_variation(emp, uniform_state(d)) < F(1, 100)


def _joint_oracle(coin):
    """All d*d (sample, share) cases as (prob, sample, message, bob)."""
    d = len(coin)
    for s, r in itertools.product(range(d), repeat=2):
        m = (s - r) % d
        yield coin.probs[s] / d, s, m, (m + r) % d


def test_biased_coin_analysis_against_enumeration():
    coin = make_state(2, ["11/32", "21/32"])
    a = analyze_teleport(coin)
    assert a.bob_distribution == coin
    assert a.correct
    # Eve's posterior on Bob's outcome given message m, via the 4-case table
    for m in (0, 1):
        cases = [(p, b) for p, _, mm, b in _joint_oracle(coin) if mm == m]
        total = sum(p for p, _ in cases)
        post = [sum(p for p, b in cases if b == x) / total for x in (0, 1)]
        assert a.eve_conditionals[str(m)].probs == tuple(post) == (F(11, 32), F(21, 32))
    for s in ("0", "1"):
        assert a.message_given_sample[s] == uniform_state(2)
    assert a.secret and a.eve_learns_nothing
    assert (a.shared_dits, a.sent_dits) == (1, 1)


def test_deterministic_coin():
    a = analyze_teleport(make_state(2, [1, 0]))
    assert a.bob_distribution.probs == (1, 0)
    assert a.message_distribution == uniform_state(2)
    assert a.message_given_sample["0"] == uniform_state(2)
    assert a.secret


def test_honest_die_36_cases():
    die = uniform_state(6)
    a = analyze_teleport(die)
    assert a.bob_distribution == die
    assert all(c == die for c in a.eve_conditionals.values())
    assert len(list(_joint_oracle(die))) == 36


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 7).flatmap(lambda d: distributions(d)))
def test_correctness_and_secrecy_properties(coin):
    a = analyze_teleport(coin)
    assert a.correct
    assert a.secret
    # independence: P(m, s) = P(m) P(s) over the oracle table
    d = len(coin)
    joint = {}
    for p, s, m, _ in _joint_oracle(coin):
        joint[(m, s)] = joint.get((m, s), 0) + p
    for (m, s), p in joint.items():
        assert p == F(1, d) * coin.probs[s]


def test_run_teleport_transcript():
    coin = make_state(2, ["11/32", "21/32"])
    res = run_teleport(coin, RandomSource(4))
    t = res.transcript
    assert t.message_count() == 1
    assert t.message_count(Party.ALICE, Party.BOB) == 1
    assert res.to_json()["messages_sent"] == 1
    assert set(res.to_json()) == {"message", "bob_outcome", "messages_sent"}
    kinds = [e.kind for e in t.view(Party.REFEREE).events()]
    assert kinds == ["setup", "charley_view", "parity", "message", "corrected"]
    # Alice never sees the raw sample or the share
    alice = t.view(Party.ALICE)
    assert all("coin_sample" not in e.payload and "alice_share" not in e.payload
               for e in alice.events())
    with pytest.raises(VisibilityError):
        alice.read(kinds.index("charley_view"))
    # Bob's correction is his alone
    with pytest.raises(VisibilityError):
        alice.read(kinds.index("corrected"))


def test_run_teleport_deterministic_coin():
    for seed in range(100):
        assert run_teleport(make_state(2, [1, 0]), RandomSource(seed)).bob_corrected_outcome == "0"


def test_run_teleport_reproducible():
    coin = make_state(6, ["1/6"] * 6)
    assert (run_teleport(coin, RandomSource(8)).transcript.to_jsonl()
            == run_teleport(coin, RandomSource(8)).transcript.to_jsonl())


def test_teleported_frequencies_match_coin():
    coin = make_state(2, ["11/32", "21/32"])
    outs = [run_teleport(coin, RandomSource(k)).bob_corrected_outcome for k in range(20000)]
    assert total_variation(empirical(outs, coin.space), coin) < F(2, 100)
