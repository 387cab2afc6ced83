"""Simulation plumbing shared by the two protocols.

Parties are passive state machines; a single-threaded :class:`Scheduler`
steps them round-robin.  Everything a party does lands in a
:class:`ProtocolTranscript`, tagged with a visibility level, and the only way
a party reads the transcript is through :meth:`ProtocolTranscript.view`.
"""

from __future__ import annotations

import bisect
import json
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable

from .prob_core import ClassicalState, OutcomeSpace

PRNG_NAME = "MT19937/getrandbits64"
UINT64 = 1 << 64


class Party(str, Enum):
    ALICE = "alice"
    BOB = "bob"
    REFEREE = "referee"


class Visibility(str, Enum):
    PUBLIC = "public"
    PRIVATE = "party-private"
    REFEREE = "referee-only"


class UnknownLabel(ValueError):
    pass


class VisibilityError(PermissionError):
    """A party tried to read an event it is not allowed to see."""


class Deadlock(RuntimeError):
    pass


# -- randomness --------------------------------------------------------------

class RandomSource:
    """Seeded 64-bit variate stream.

    Backed by CPython's Mersenne Twister, whose integer seeding and
    ``getrandbits`` output are identical on every platform.
    """

    name = PRNG_NAME

    def __init__(self, seed: int = 0):
        if not 0 <= seed < UINT64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.position = 0
        self._mt = random.Random(seed)

    def next_u64(self) -> int:
        self.position += 1
        return self._mt.getrandbits(64)

    def randbelow(self, n: int) -> int:
        self.position += 1
        return self._mt.randrange(n)

    def uniform(self) -> Fraction:
        """Exact uniform variate k / 2**64."""
        return Fraction(self.next_u64(), UINT64)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, position={self.position})"


def split_seed(master: int, index: int) -> int:
    """Seed of the ``index``-th independent run under ``master``."""
    return (master + index) % UINT64


def _thresholds(state: ClassicalState) -> tuple[int, ...]:
    # k/2**64 < c  <=>  k < ceil(c * 2**64)  for integer k
    cached = state.__dict__.get("_u64_thresholds")
    if cached is not None:
        return cached
    out, cum = [], Fraction(0)
    for p in state.probs:
        cum += p
        out.append(-((-cum.numerator * UINT64) // cum.denominator))
    out = tuple(out)
    object.__setattr__(state, "_u64_thresholds", out)
    return out


def sample(state: ClassicalState, rng: RandomSource) -> str:
    """Draw one label by cumulative-sum inversion in label order."""
    k = rng.next_u64()
    return state.space.labels[bisect.bisect_right(_thresholds(state), k)]


def sampling_probabilities(state: ClassicalState) -> tuple[Fraction, ...]:
    """Exact probabilities with which :func:`sample` returns each label.

    These differ from ``state.probs`` by less than 2**-64 per entry and agree
    exactly when every cumulative probability is dyadic with denominator
    dividing 2**64.
    """
    prev, out = 0, []
    for t in _thresholds(state):
        out.append(Fraction(t - prev, UINT64))
        prev = t
    return tuple(out)


def empirical(outcomes: Iterable[str], space: OutcomeSpace) -> ClassicalState:
    counts = Counter(str(o) for o in outcomes)
    n = sum(counts.values())
    if n == 0:
        raise ValueError("no outcomes to count")
    unknown = set(counts) - set(space.labels)
    if unknown:
        raise UnknownLabel(f"labels {sorted(unknown)} are not in {space.labels}")
    return ClassicalState(space, tuple(Fraction(counts[lab], n) for lab in space.labels))


# -- transcripts -------------------------------------------------------------

MESSAGE = "message"


def _as(enum_cls, value):
    return value if isinstance(value, enum_cls) else enum_cls(value)


@dataclass(frozen=True)
class Event:
    party: Party
    kind: str
    payload: dict
    visibility: Visibility
    receiver: Party | None = None

    def visible_to(self, who: Party) -> bool:
        if who is Party.REFEREE or self.visibility is Visibility.PUBLIC:
            return True
        if self.visibility is Visibility.PRIVATE:
            return who is self.party
        return False

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "party": self.party.value,
            "kind": self.kind,
            "visibility": self.visibility.value,
        }
        if self.receiver is not None:
            out["receiver"] = self.receiver.value
        out["payload"] = self.payload
        return out


class ProtocolTranscript:
    """Append-only event log of one protocol run."""

    def __init__(self, protocol: str = "", seed: int | None = None,
                 prng: str = PRNG_NAME):
        self.header = {"protocol": protocol, "seed": seed, "prng": prng}
        self._events: list[Event] = []
        self._messages: Counter = Counter()

    def record(self, party: Party, kind: str, payload: dict | None = None,
               visibility: Visibility = Visibility.PRIVATE) -> Event:
        if kind == MESSAGE:
            raise ValueError("messages go through send()")
        ev = Event(_as(Party, party), kind, dict(payload or {}), _as(Visibility, visibility))
        self._events.append(ev)
        return ev

    def send(self, sender: Party, receiver: Party, payload: dict) -> Event:
        # The wire itself is public: an eavesdropper sees every message.
        ev = Event(_as(Party, sender), MESSAGE, dict(payload), Visibility.PUBLIC, _as(Party, receiver))
        self._events.append(ev)
        self._messages[(ev.party, ev.receiver)] += 1
        return ev

    def message_count(self, sender: Party | None = None,
                      receiver: Party | None = None) -> int:
        if sender is None and receiver is None:
            return sum(self._messages.values())
        return self._messages[(Party(sender), Party(receiver))]

    def __len__(self) -> int:
        return len(self._events)

    def view(self, who: Party) -> "TranscriptView":
        return TranscriptView(self, Party(who))

    def referee_events(self) -> tuple[Event, ...]:
        return tuple(self._events)

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(ev.to_json(), sort_keys=True) for ev in self._events]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ProtocolTranscript":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty transcript file")
        header = rows[0]
        t = cls(header.get("protocol", ""), header.get("seed"), header.get("prng", PRNG_NAME))
        for row in rows[1:]:
            if row["kind"] == MESSAGE:
                t.send(Party(row["party"]), Party(row["receiver"]), row["payload"])
            else:
                t.record(Party(row["party"]), row["kind"], row["payload"],
                         Visibility(row["visibility"]))
        return t


class TranscriptView:
    """What one party is allowed to see of a transcript."""

    def __init__(self, transcript: ProtocolTranscript, who: Party):
        self._t = transcript
        self.who = who

    def events(self) -> tuple[Event, ...]:
        return tuple(ev for ev in self._t._events if ev.visible_to(self.who))

    def read(self, index: int) -> Event:
        ev = self._t._events[index]
        if not ev.visible_to(self.who):
            raise VisibilityError(
                f"{self.who.value} may not read {ev.visibility.value} event #{index} of {ev.party.value}"
            )
        return ev

    def inbox(self) -> tuple[Event, ...]:
        return tuple(ev for ev in self._t._events
                     if ev.kind == MESSAGE and ev.receiver is self.who)


# -- parties and scheduling --------------------------------------------------

class PartyMachine:
    """A party as an explicit finite-state machine.

    Subclasses set ``transitions`` (state -> allowed next states) and
    implement :meth:`step`, which performs at most one transition and
    returns whether it made progress.
    """

    role: Party
    initial: str
    terminal: frozenset[str] = frozenset()
    transitions: dict[str, frozenset[str]] = {}

    def __init__(self, transcript: ProtocolTranscript):
        self.transcript = transcript
        self.state = self.initial
        self.history = [self.initial]

    @property
    def done(self) -> bool:
        return self.state in self.terminal

    def goto(self, new: str) -> None:
        if new not in self.transitions.get(self.state, frozenset()):
            raise RuntimeError(f"{self.role.value}: illegal transition {self.state} -> {new}")
        self.state = new
        self.history.append(new)

    def send(self, to: Party, payload: dict) -> None:
        self.transcript.send(self.role, to, payload)

    def note(self, kind: str, payload: dict, visibility: Visibility = Visibility.PRIVATE) -> None:
        self.transcript.record(self.role, kind, payload, visibility)

    def inbox(self) -> deque:
        return deque(self.transcript.view(self.role).inbox())

    def step(self) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass
class Scheduler:
    parties: list[PartyMachine] = field(default_factory=list)
    max_rounds: int = 64

    def run(self) -> None:
        for _ in range(self.max_rounds):
            if all(p.done for p in self.parties):
                return
            progressed = False
            for p in self.parties:
                if not p.done:
                    progressed |= p.step()
            if not progressed:
                stuck = [f"{p.role.value}@{p.state}" for p in self.parties if not p.done]
                raise Deadlock(f"no party can move: {stuck}")
        if not all(p.done for p in self.parties):
            raise Deadlock("round limit reached")
