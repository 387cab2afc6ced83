"""Exact classical states, ensembles and joint (Alice x Bob) distributions.

Every probability is a :class:`fractions.Fraction`; nothing in this module
touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]


class ProbabilityError(ValueError):
    """Base class for malformed probabilistic objects."""


class NegativeProbability(ProbabilityError):
    pass


class NotNormalized(ProbabilityError):
    pass


class SpaceMismatch(ProbabilityError):
    pass


def to_rational(value: RationalLike) -> Fraction:
    """Coerce ``value`` to an exact Fraction.

    Accepts Fractions, ints and ``"num/den"`` / ``"num"`` strings.  Floats and
    decimal strings are refused because they are not exact.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a probability")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(c in text for c in ".eE"):
            raise ValueError(f"decimal notation is not exact: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class OutcomeSpace:
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValueError("an outcome space needs at least one label")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate outcome labels in {labels}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of_size(cls, d: int) -> "OutcomeSpace":
        """Space with labels ``"0" .. "d-1"``."""
        return cls(tuple(str(k) for k in range(d)))

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(str(label))


def _check_distribution(probs: Sequence[Fraction], what: str) -> None:
    for p in probs:
        if p < 0:
            raise NegativeProbability(f"{what} has negative entry {p}")
    total = sum(probs, Fraction(0))
    if total != 1:
        raise NotNormalized(f"{what} sums to {format_rational(total)}, not 1")


@dataclass(frozen=True)
class ClassicalState:
    """A probability distribution over a finite labelled outcome space."""

    space: OutcomeSpace
    probs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        probs = tuple(to_rational(p) for p in self.probs)
        if len(probs) != len(self.space):
            raise ValueError(
                f"{len(probs)} probabilities for a space of size {len(self.space)}"
            )
        _check_distribution(probs, "classical state")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def unchecked(cls, space: OutcomeSpace, probs: Sequence[RationalLike]) -> "ClassicalState":
        """Build without validation; for loading objects that are then audited."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "space", space)
        object.__setattr__(obj, "probs", tuple(to_rational(p) for p in probs))
        return obj

    def is_valid(self) -> bool:
        return (len(self.probs) == len(self.space)
                and all(p >= 0 for p in self.probs)
                and sum(self.probs, Fraction(0)) == 1)

    def __getitem__(self, label: str) -> Fraction:
        return self.probs[self.space.index(label)]

    def __len__(self) -> int:
        return len(self.probs)

    def items(self):
        return zip(self.space.labels, self.probs)

    def support(self) -> tuple[str, ...]:
        return tuple(label for label, p in self.items() if p > 0)

    def __str__(self) -> str:
        body = ", ".join(f"{lab}: {format_rational(p)}" for lab, p in self.items())
        return "{" + body + "}"


def make_state(space: OutcomeSpace | Sequence[str] | int,
               probs: Iterable[RationalLike]) -> ClassicalState:
    if isinstance(space, int):
        space = OutcomeSpace.of_size(space)
    elif not isinstance(space, OutcomeSpace):
        space = OutcomeSpace(tuple(space))
    return ClassicalState(space, tuple(probs))


def point_state(space: OutcomeSpace, label: str) -> ClassicalState:
    """The pure classical state concentrated on ``label``."""
    k = space.index(label)
    return ClassicalState(space, tuple(Fraction(int(i == k)) for i in range(len(space))))


def uniform_state(space: OutcomeSpace | int) -> ClassicalState:
    if isinstance(space, int):
        space = OutcomeSpace.of_size(space)
    d = len(space)
    return ClassicalState(space, (Fraction(1, d),) * d)


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of classical states over one shared outcome space."""

    members: tuple[tuple[Fraction, ClassicalState], ...]

    def __post_init__(self) -> None:
        members = tuple((to_rational(w), s) for w, s in self.members)
        if not members:
            raise ValueError("an ensemble needs at least one member")
        space = members[0][1].space
        for _, state in members:
            if state.space != space:
                raise SpaceMismatch("ensemble members live on different spaces")
        _check_distribution([w for w, _ in members], "ensemble weights")
        object.__setattr__(self, "members", members)

    @property
    def space(self) -> OutcomeSpace:
        return self.members[0][1].space

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for w, _ in self.members)

    @property
    def states(self) -> tuple[ClassicalState, ...]:
        return tuple(s for _, s in self.members)

    @property
    def index_space(self) -> OutcomeSpace:
        """Outcome space of member indices ``"0" .. "m-1"``."""
        return OutcomeSpace.of_size(len(self.members))

    def weight_state(self) -> ClassicalState:
        """Member weights as a distribution over the index space."""
        return ClassicalState(self.index_space, self.weights)

    def __len__(self) -> int:
        return len(self.members)


def make_ensemble(members: Iterable[tuple[RationalLike, ClassicalState]]) -> Ensemble:
    return Ensemble(tuple(members))


@dataclass(frozen=True)
class CorrelatedState:
    """Joint distribution; ``joint[a][b]`` is P(Alice sees a, Bob sees b)."""

    alice_space: OutcomeSpace
    bob_space: OutcomeSpace
    joint: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        joint = tuple(tuple(to_rational(x) for x in row) for row in self.joint)
        if len(joint) != len(self.alice_space) or any(
            len(row) != len(self.bob_space) for row in joint
        ):
            raise ValueError("joint matrix shape does not match the outcome spaces")
        _check_distribution([x for row in joint for x in row], "joint distribution")
        object.__setattr__(self, "joint", joint)

    @property
    def is_fully_correlated(self) -> bool:
        if self.alice_space != self.bob_space:
            return False
        return all(
            x == 0
            for a, row in enumerate(self.joint)
            for b, x in enumerate(row)
            if a != b
        )

    def diagonal(self) -> tuple[Fraction, ...]:
        return tuple(self.joint[k][k] for k in range(min(len(self.alice_space), len(self.bob_space))))


def fully_correlated(p: ClassicalState) -> CorrelatedState:
    d = len(p)
    joint = tuple(
        tuple(p.probs[a] if a == b else Fraction(0) for b in range(d)) for a in range(d)
    )
    return CorrelatedState(p.space, p.space, joint)


def marginal(c: CorrelatedState, party: str) -> ClassicalState:
    """Reduced state of one party: row sums for Alice, column sums for Bob."""
    party = str(getattr(party, "value", party)).lower()
    if party == "alice":
        return ClassicalState(c.alice_space, tuple(sum(row, Fraction(0)) for row in c.joint))
    if party == "bob":
        cols = zip(*c.joint)
        return ClassicalState(c.bob_space, tuple(sum(col, Fraction(0)) for col in cols))
    raise ValueError(f"unknown party {party!r}; expected 'alice' or 'bob'")


def mix(e: Ensemble) -> ClassicalState:
    d = len(e.space)
    probs = [Fraction(0)] * d
    for w, state in e.members:
        for k in range(d):
            probs[k] += w * state.probs[k]
    return ClassicalState(e.space, tuple(probs))


def total_variation(a: ClassicalState, b: ClassicalState) -> Fraction:
    if a.space != b.space:
        raise SpaceMismatch(f"{a.space.labels} vs {b.space.labels}")
    return sum((abs(x - y) for x, y in zip(a.probs, b.probs)), Fraction(0)) / 2


# -- JSON ------------------------------------------------------------------

def _space_from(obj: dict, n: int) -> OutcomeSpace:
    labels = obj.get("space")
    if labels is None:
        return OutcomeSpace.of_size(n)
    return OutcomeSpace(tuple(str(x) for x in labels))


def state_to_json(s: ClassicalState) -> dict:
    return {"space": list(s.space.labels), "probs": [format_rational(p) for p in s.probs]}


def state_from_json(obj: dict) -> ClassicalState:
    probs = [to_rational(p) for p in obj["probs"]]
    return ClassicalState(_space_from(obj, len(probs)), tuple(probs))


def ensemble_to_json(e: Ensemble) -> dict:
    return {
        "space": list(e.space.labels),
        "members": [
            {"weight": format_rational(w), "probs": [format_rational(p) for p in s.probs]}
            for w, s in e.members
        ],
    }


def ensemble_from_json(obj: dict) -> Ensemble:
    raw = obj["members"]
    if not raw:
        raise ValueError("an ensemble needs at least one member")
    space = _space_from(obj, len(raw[0]["probs"]))
    return Ensemble(tuple(
        (to_rational(m["weight"]), ClassicalState(space, tuple(to_rational(p) for p in m["probs"])))
        for m in raw
    ))


def correlated_to_json(c: CorrelatedState) -> dict:
    out: dict = {}
    if c.alice_space == c.bob_space:
        out["space"] = list(c.alice_space.labels)
    else:
        out["alice_space"] = list(c.alice_space.labels)
        out["bob_space"] = list(c.bob_space.labels)
    out["joint"] = [[format_rational(x) for x in row] for row in c.joint]
    return out


def correlated_from_json(obj: dict) -> CorrelatedState:
    joint = [[to_rational(x) for x in row] for row in obj["joint"]]
    if "alice_space" in obj or "bob_space" in obj:
        alice = OutcomeSpace(tuple(obj["alice_space"]))
        bob = OutcomeSpace(tuple(obj["bob_space"]))
    else:
        alice = _space_from(obj, len(joint))
        bob = alice if "space" in obj else OutcomeSpace.of_size(len(joint[0]) if joint else 0)
    return CorrelatedState(alice, bob, tuple(tuple(row) for row in joint))
