"""Classical teleportation of an unknown classical state.

Alice and Bob share a uniformly random dit ``r``.  Alice's coin yields a
sample ``s`` that nobody looks at directly; only the shift ``(s - r) mod d``
is computed and sent.  Bob adds it to his copy of ``r`` and so holds a value
distributed exactly like the coin, while the message alone is uniform.
For ``d = 2`` the shift is the XOR of the two bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .prob_core import ClassicalState, OutcomeSpace, state_to_json, uniform_state
from .protocol_runtime import (
    Party,
    PartyMachine,
    ProtocolTranscript,
    RandomSource,
    Scheduler,
    Visibility,
    sample,
)


class CoinAlreadyConsumed(RuntimeError):
    pass


class SealedCoin:
    """A distribution that can be sampled once and is never shown to parties."""

    def __init__(self, state: ClassicalState):
        self._state = state
        self._consumed = False

    @property
    def consumed(self) -> bool:
        return self._consumed

    @property
    def space(self) -> OutcomeSpace:
        return self._state.space

    def sample(self, rng: RandomSource) -> str:
        if self._consumed:
            raise CoinAlreadyConsumed("this coin has already been sampled")
        self._consumed = True
        return sample(self._state, rng)

    def reveal_to_referee(self) -> ClassicalState:
        return self._state

    def __repr__(self) -> str:
        return f"SealedCoin(d={len(self._state)}, consumed={self._consumed})"


def setup_shared(d: int, rng: RandomSource) -> tuple[int, int, dict]:
    """Prepare the shared uniform dit. Returns (alice_share, bob_share, referee_record)."""
    if d < 2:
        raise ValueError("need at least two symbols")
    value = int(sample(uniform_state(d), rng))
    return value, value, {"shared": value, "d": d}


def _encode(coin: SealedCoin, share: int, d: int, rng: RandomSource) -> tuple[str, int]:
    if len(coin.space) != d:
        raise ValueError(f"coin has {len(coin.space)} faces, protocol uses d={d}")
    face = coin.sample(rng)
    return face, (coin.space.index(face) - share) % d


def alice_encode(coin: SealedCoin, alice_share: int, d: int, rng: RandomSource) -> int:
    """Sample the coin once and return its shift against the share."""
    return _encode(coin, alice_share, d, rng)[1]


def bob_decode(message: int, bob_share: int, d: int) -> int:
    return (message + bob_share) % d


@dataclass
class TeleportResult:
    parity_message: str
    bob_corrected_outcome: str
    transcript: ProtocolTranscript

    def to_json(self) -> dict:
        return {
            "message": self.parity_message,
            "bob_outcome": self.bob_corrected_outcome,
            "messages_sent": self.transcript.message_count(Party.ALICE, Party.BOB),
        }


class _Alice(PartyMachine):
    role = Party.ALICE
    initial = "holding_coin"
    terminal = frozenset({"sent"})
    transitions = {"holding_coin": frozenset({"sent"})}

    def __init__(self, transcript, coin: SealedCoin, share: int, d: int, rng: RandomSource):
        super().__init__(transcript)
        self.coin, self._share, self.d, self.rng = coin, share, d, rng

    def step(self) -> bool:
        # Charley's job: flip the coin and combine it with Alice's share
        # without showing her either value.
        face, message = _encode(self.coin, self._share, self.d, self.rng)
        self.transcript.record(Party.REFEREE, "charley_view",
                               {"coin_sample": face, "alice_share": self._share},
                               Visibility.REFEREE)
        self.note("parity", {"value": message})
        self.send(Party.BOB, {"dit": message})
        self.goto("sent")
        return True


class _Bob(PartyMachine):
    role = Party.BOB
    initial = "waiting"
    terminal = frozenset({"holding"})
    transitions = {"waiting": frozenset({"holding"})}

    def __init__(self, transcript, share: int, d: int, labels: tuple[str, ...]):
        super().__init__(transcript)
        self._share, self.d, self.labels = share, d, labels
        self.outcome: str | None = None

    def step(self) -> bool:
        inbox = self.inbox()
        if not inbox:
            return False
        message = int(inbox[0].payload["dit"])
        self.outcome = self.labels[bob_decode(message, self._share, self.d)]
        self.note("corrected", {"outcome": self.outcome, "shift": message})
        self.goto("holding")
        return True


def run_teleport(coin_state: ClassicalState, rng: RandomSource) -> TeleportResult:
    """One full protocol run: setup, encode, one message, decode."""
    d = len(coin_state)
    transcript = ProtocolTranscript("teleport", rng.seed)
    alice_share, bob_share, record = setup_shared(d, rng)
    transcript.record(Party.REFEREE, "setup", record, Visibility.REFEREE)
    coin = SealedCoin(coin_state)
    alice = _Alice(transcript, coin, alice_share, d, rng)
    bob = _Bob(transcript, bob_share, d, coin_state.space.labels)
    Scheduler([bob, alice]).run()
    message = transcript.view(Party.BOB).inbox()[0].payload["dit"]
    return TeleportResult(str(message), bob.outcome, transcript)


@dataclass
class TeleportAnalysis:
    """Exact outcome of enumerating one teleportation run.

    ``eve_conditionals[m]`` is the distribution of Bob's corrected outcome
    given only the public message ``m``; ``message_given_sample[s]`` is the
    distribution of the message given the coin's face ``s``.
    """

    coin_state: ClassicalState
    bob_distribution: ClassicalState
    message_distribution: ClassicalState
    eve_conditionals: dict[str, ClassicalState]
    message_given_sample: dict[str, ClassicalState]
    shared_dits: int = 1
    sent_dits: int = 1

    @property
    def correct(self) -> bool:
        return self.bob_distribution == self.coin_state

    @property
    def secret(self) -> bool:
        """The message is uniform whatever the coin shows, hence independent of it."""
        uniform = uniform_state(self.message_distribution.space)
        return all(m == uniform for m in self.message_given_sample.values())

    @property
    def eve_learns_nothing(self) -> bool:
        return all(c == self.coin_state for c in self.eve_conditionals.values())

    @property
    def eve_conditionals_uniform(self) -> bool:
        uniform = uniform_state(self.coin_state.space)
        return all(c == uniform for c in self.eve_conditionals.values())

    def to_json(self) -> dict:
        return {
            "coin": state_to_json(self.coin_state),
            "bob_distribution": state_to_json(self.bob_distribution),
            "message_distribution": state_to_json(self.message_distribution),
            "eve_conditionals": {m: state_to_json(s) for m, s in self.eve_conditionals.items()},
            "message_given_sample": {
                s: state_to_json(m) for s, m in self.message_given_sample.items()
            },
            "correct": self.correct,
            "secret": self.secret,
            "eve_learns_nothing": self.eve_learns_nothing,
            "resources": {"shared_dits": self.shared_dits, "sent_dits": self.sent_dits},
        }


def analyze_teleport(coin_state: ClassicalState) -> TeleportAnalysis:
    """Enumerate every (coin sample, shared value) pair exactly."""
    d = len(coin_state)
    if d < 2:
        raise ValueError("need at least two symbols")
    labels = coin_state.space.labels
    dits = OutcomeSpace.of_size(d)
    share_p = Fraction(1, d)

    bob = [Fraction(0)] * d
    msg = [Fraction(0)] * d
    msg_bob = [[Fraction(0)] * d for _ in range(d)]
    sample_msg = [[Fraction(0)] * d for _ in range(d)]
    for s, ps in enumerate(coin_state.probs):
        for r in range(d):
            p = ps * share_p
            m = (s - r) % d
            b = bob_decode(m, r, d)
            bob[b] += p
            msg[m] += p
            msg_bob[m][b] += p
            sample_msg[s][m] += p

    eve = {
        str(m): ClassicalState(coin_state.space, tuple(x / msg[m] for x in msg_bob[m]))
        for m in range(d) if msg[m] > 0
    }
    given_sample = {
        labels[s]: ClassicalState(dits, tuple(x / ps for x in sample_msg[s]))
        for s, ps in enumerate(coin_state.probs) if ps > 0
    }
    return TeleportAnalysis(
        coin_state=coin_state,
        bob_distribution=ClassicalState(coin_state.space, tuple(bob)),
        message_distribution=ClassicalState(dits, tuple(msg)),
        eve_conditionals=eve,
        message_given_sample=given_sample,
    )
