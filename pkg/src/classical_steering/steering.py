"""Classical remote steering.

Alice and Bob share a fully correlated state with Bob's marginal ``P_Bob``.
For any ensemble ``{p_j, P_j}`` that mixes to ``P_Bob``, Alice realises the
ensemble on Bob's side with no communication:

1. look at her half of the shared state and find ``i``;
2. throw the generalized coin ``Q_i(j) = p_j * P_j(i) / p_i``;
3. read the coin's face ``j``;
4. forget ``i`` and keep only ``j``.

Then ``j`` occurs with probability ``p_j`` and, given ``j``, Bob's half is
distributed as ``P_j``.  :func:`analyze` checks both statements by exact
enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm

from .prob_core import (
    ClassicalState,
    CorrelatedState,
    Ensemble,
    OutcomeSpace,
    ProbabilityError,
    correlated_from_json,
    correlated_to_json,
    ensemble_from_json,
    ensemble_to_json,
    format_rational,
    fully_correlated,
    make_state,
    marginal,
    mix,
    to_rational,
)
from .protocol_runtime import (
    Party,
    PartyMachine,
    ProtocolTranscript,
    RandomSource,
    Scheduler,
    Visibility,
    sample,
)


class NotFullyCorrelated(ProbabilityError):
    pass


class EnsembleMismatch(ProbabilityError):
    """The target ensemble does not mix to Bob's marginal."""

    def __init__(self, mixed: ClassicalState | None, bob: ClassicalState, reason: str = ""):
        self.mixed = mixed
        self.bob = bob
        super().__init__(reason or "mix(target) differs from Bob's marginal\n" + self.diff())

    def diff(self) -> str:
        if self.mixed is None or self.mixed.space != self.bob.space:
            return f"  target space does not match Bob's space {self.bob.space.labels}"
        rows = []
        for label, m, b in zip(self.bob.space.labels, self.mixed.probs, self.bob.probs):
            mark = "  " if m == b else "!="
            rows.append(f"  {label}: mix={format_rational(m)} {mark} bob={format_rational(b)}")
        return "\n".join(rows)


class ZeroWeightMember(LookupError):
    """Conditioning on an announcement that never happens."""


@dataclass(frozen=True)
class SteeringPlan:
    resource: CorrelatedState
    target: Ensemble
    coins: dict[str, ClassicalState]

    @property
    def member_space(self) -> OutcomeSpace:
        return self.target.index_space

    @cached_property
    def _alice_marginal(self) -> ClassicalState:
        return marginal(self.resource, Party.ALICE)

    def shared_distribution(self) -> ClassicalState:
        return self._alice_marginal

    def to_json(self) -> dict:
        return {
            "resource": correlated_to_json(self.resource),
            "target": ensemble_to_json(self.target),
            "coins": {
                i: {
                    "probs": [format_rational(p) for p in q.probs],
                    "over_common_denominator": common_denominator(q.probs),
                }
                for i, q in self.coins.items()
            },
        }


def common_denominator(probs) -> list[str]:
    """Write fractions over their least common denominator, e.g. 8/21, 6/21, 7/21."""
    den = lcm(*(p.denominator for p in probs)) if probs else 1
    return [f"{p.numerator * (den // p.denominator)}/{den}" for p in probs]


def plan_from_json(obj: dict) -> SteeringPlan:
    """Load a plan.  Coins are *not* validated here; :func:`analyze` audits them."""
    target = ensemble_from_json(obj["target"])
    if "resource" in obj:
        resource = correlated_from_json(obj["resource"])
    else:
        resource = fully_correlated(mix(target))
    space = target.index_space
    coins = {}
    for label, coin in obj["coins"].items():
        raw = coin["probs"] if isinstance(coin, dict) else coin
        coins[str(label)] = ClassicalState.unchecked(space, [to_rational(p) for p in raw])
    return SteeringPlan(resource, target, coins)


def derive_plan(resource: CorrelatedState, target: Ensemble) -> SteeringPlan:
    """Compute Alice's generalized coins with the Bayes rule."""
    if not resource.is_fully_correlated:
        raise NotFullyCorrelated("steering needs a fully correlated resource")
    bob = marginal(resource, Party.BOB)
    if target.space != bob.space:
        raise EnsembleMismatch(None, bob, "target members are not over Bob's outcome space")
    mixed = mix(target)
    if mixed != bob:
        raise EnsembleMismatch(mixed, bob)

    p_alice = marginal(resource, Party.ALICE)
    members = target.index_space
    coins = {}
    for k, (label, p_i) in enumerate(p_alice.items()):
        if p_i == 0:
            continue
        coins[label] = ClassicalState(
            members, tuple(w * member.probs[k] / p_i for w, member in target.members)
        )
    return SteeringPlan(resource, target, coins)


def consistency_violations(plan: SteeringPlan) -> list[str]:
    """Every way the plan's coins disagree with Q_i(j) * p_i = p_j * p(i|j)."""
    problems = []
    p_alice = plan.shared_distribution()
    for k, (label, p_i) in enumerate(p_alice.items()):
        coin = plan.coins.get(label)
        if p_i == 0:
            if coin is not None:
                problems.append(f"coin for impossible outcome {label}")
            continue
        if coin is None:
            problems.append(f"no coin for outcome {label}")
            continue
        if not coin.is_valid():
            problems.append(f"coin {label} is not a distribution over {len(plan.target)} members")
            if len(coin.probs) != len(plan.target):
                continue
        for j, (w, member) in enumerate(plan.target.members):
            if coin.probs[j] * p_i != w * member.probs[k]:
                problems.append(
                    f"Q_{label}({j}) = {format_rational(coin.probs[j])}, Bayes rule gives "
                    f"{format_rational(w * member.probs[k] / p_i)}"
                )
    return problems


# -- execution ---------------------------------------------------------------

@dataclass
class SteeringOutcome:
    announced_j: str
    bob_outcome: str
    transcript: ProtocolTranscript


class _Alice(PartyMachine):
    role = Party.ALICE
    initial = "start"
    terminal = frozenset({"forgotten"})
    transitions = {
        "start": frozenset({"observed"}),
        "observed": frozenset({"coin_thrown"}),
        "coin_thrown": frozenset({"forgotten"}),
    }

    def __init__(self, transcript, share: str, plan: SteeringPlan, rng: RandomSource):
        super().__init__(transcript)
        self._share, self.plan, self.rng = share, plan, rng
        self._i: str | None = None
        self._j: str | None = None
        self.announced: str | None = None

    def step(self) -> bool:
        if self.state == "start":
            self._i = self._share
            self.note("observe", {"i": self._i}, Visibility.REFEREE)
            self.goto("observed")
        elif self.state == "observed":
            self._j = sample(self.plan.coins[self._i], self.rng)
            self.note("coin", {"i": self._i, "j": self._j}, Visibility.REFEREE)
            self.goto("coin_thrown")
        else:
            self._i = None
            self.announced = self._j
            self.note("announce", {"j": self._j}, Visibility.PUBLIC)
            self.goto("forgotten")
        return True


class _Bob(PartyMachine):
    role = Party.BOB
    initial = "holding"
    terminal = frozenset({"sampled"})
    transitions = {"holding": frozenset({"sampled"})}

    def __init__(self, transcript, share: str):
        super().__init__(transcript)
        self._share = share
        self.outcome: str | None = None

    def step(self) -> bool:
        self.outcome = self._share
        self.note("sample", {"i": self.outcome})
        self.goto("sampled")
        return True


def execute(plan: SteeringPlan, rng: RandomSource) -> SteeringOutcome:
    """Run the four steps once.  Nothing crosses the Alice-Bob channel."""
    transcript = ProtocolTranscript("steering", rng.seed)
    shared = sample(plan.shared_distribution(), rng)
    transcript.record(Party.REFEREE, "setup", {"shared": shared}, Visibility.REFEREE)
    alice = _Alice(transcript, shared, plan, rng)
    bob = _Bob(transcript, shared)
    Scheduler([alice, bob]).run()
    return SteeringOutcome(alice.announced, bob.outcome, transcript)


def verify_no_communication(t: ProtocolTranscript) -> bool:
    return t.message_count() == 0


# -- exact analysis ----------------------------------------------------------

@dataclass
class ExactAnalysis:
    plan: SteeringPlan
    joint: dict[tuple[str, str], Fraction]           # (i, j) -> P
    announced: tuple[Fraction, ...]
    conditionals: dict[str, tuple[Fraction, ...]]
    zero_weight_members: tuple[str, ...]
    violations: list[str] = field(default_factory=list)

    @property
    def claim1(self) -> bool:
        """Alice is left with j with probability p_j."""
        return self.announced == self.plan.target.weights

    @property
    def claim2(self) -> bool:
        """Given j, Bob's half is distributed as P_j."""
        for j, (w, member) in enumerate(self.plan.target.members):
            if w == 0:
                continue
            got = self.conditionals.get(str(j))
            if got is None or got != member.probs:
                return False
        return True

    @property
    def bayes_consistent(self) -> bool:
        return not self.violations

    @property
    def marginal_preserved(self) -> bool:
        bob = marginal(self.plan.resource, Party.BOB).probs
        avg = [Fraction(0)] * len(bob)
        for j, cond in self.conditionals.items():
            for k, x in enumerate(cond):
                avg[k] += self.announced[int(j)] * x
        return tuple(avg) == bob

    @property
    def coarse_graining(self) -> bool:
        """The (i, j) joint has marginals p_i and p_j."""
        p_alice = self.plan.shared_distribution()
        over_i = {label: Fraction(0) for label in p_alice.space.labels}
        for (i, _), p in self.joint.items():
            over_i[i] += p
        return tuple(over_i.values()) == p_alice.probs and self.claim1

    @property
    def ok(self) -> bool:
        return self.claim1 and self.claim2

    def conditional(self, j: str | int) -> ClassicalState:
        j = str(j)
        if j in self.zero_weight_members or j not in self.conditionals:
            raise ZeroWeightMember(f"member {j} is never announced")
        return ClassicalState(self.plan.target.space, self.conditionals[j])

    def announced_state(self) -> ClassicalState:
        return ClassicalState(self.plan.member_space, self.announced)

    def joint_state(self) -> ClassicalState:
        """The (j, i) joint as a distribution over ``"j,i"`` labels."""
        labels, probs = joint_labels(self.plan), []
        for label in labels:
            j, i = label.split(",", 1)
            probs.append(self.joint.get((i, j), Fraction(0)))
        return ClassicalState(OutcomeSpace(labels), tuple(probs))

    def to_json(self) -> dict:
        alice_labels = self.plan.resource.alice_space.labels
        members = self.plan.member_space.labels
        return {
            "announced": [format_rational(p) for p in self.announced],
            "target_weights": [format_rational(w) for w in self.plan.target.weights],
            "conditionals": {
                j: [format_rational(p) for p in cond] for j, cond in self.conditionals.items()
            },
            "zero_weight_members": list(self.zero_weight_members),
            "joint": {
                i: [format_rational(self.joint.get((i, j), Fraction(0))) for j in members]
                for i in alice_labels
            },
            "claims": {
                "claim1_announcement_weights": self.claim1,
                "claim2_conditional_states": self.claim2,
                "bayes_consistency": self.bayes_consistent,
                "marginal_preserved": self.marginal_preserved,
            },
            "violations": self.violations,
        }


def joint_labels(plan: SteeringPlan) -> tuple[str, ...]:
    return tuple(f"{j},{i}" for j in plan.member_space.labels
                 for i in plan.resource.alice_space.labels)


def analyze(plan: SteeringPlan) -> ExactAnalysis:
    """Enumerate all (i, j) and compute what forgetting i leaves behind."""
    p_alice = plan.shared_distribution()
    members = plan.member_space.labels
    m = len(members)
    joint: dict[tuple[str, str], Fraction] = {}
    for label, p_i in p_alice.items():
        if p_i == 0 or label not in plan.coins:
            continue
        coin = plan.coins[label]
        for j in range(min(m, len(coin.probs))):
            joint[(label, members[j])] = p_i * coin.probs[j]

    announced = [Fraction(0)] * m
    for (_, j), p in joint.items():
        announced[int(j)] += p

    # Bob's half equals Alice's i, so conditioning on j is a column of the joint.
    bob_labels = plan.resource.bob_space.labels
    conditionals = {}
    zero = []
    for j, label in enumerate(members):
        if plan.target.weights[j] == 0:
            zero.append(label)
            continue
        if announced[j] == 0:
            continue
        conditionals[label] = tuple(
            joint.get((i, label), Fraction(0)) / announced[j] for i in bob_labels
        )
    return ExactAnalysis(
        plan=plan,
        joint=joint,
        announced=tuple(announced),
        conditionals=conditionals,
        zero_weight_members=tuple(zero),
        violations=consistency_violations(plan),
    )


# -- canonical instances -----------------------------------------------------

def appendix_instance() -> tuple[CorrelatedState, Ensemble]:
    """Shared state 11/32 : 21/32 and the three-member target ensemble."""
    members = [
        ("1/2", make_state(2, ["1/2", "1/2"])),
        ("1/4", make_state(2, ["1/4", "3/4"])),
        ("1/4", make_state(2, ["1/8", "7/8"])),
    ]
    target = Ensemble(tuple(members))
    return fully_correlated(make_state(2, ["11/32", "21/32"])), target


def q_mixing_ensemble(q: Fraction) -> Ensemble:
    """Do nothing with probability q, otherwise look at the shared bit."""
    q = to_rational(q)
    rest = (1 - q) / 2
    return Ensemble((
        (q, make_state(2, ["1/2", "1/2"])),
        (rest, make_state(2, [1, 0])),
        (rest, make_state(2, [0, 1])),
    ))


def parity_ensemble(p: Fraction) -> Ensemble:
    """Equal mixture of a p-biased coin and its flip (mixes to the honest coin)."""
    p = to_rational(p)
    return Ensemble((
        (Fraction(1, 2), make_state(2, [p, 1 - p])),
        (Fraction(1, 2), make_state(2, [1 - p, p])),
    ))


def random_instance(rng: RandomSource, max_outcomes: int = 6, max_members: int = 5,
                    max_weight: int = 9) -> tuple[CorrelatedState, Ensemble]:
    """Random valid instance; P_Bob is defined as the mix so the constraint holds."""
    n_i = 1 + rng.randbelow(max_outcomes)
    n_j = 1 + rng.randbelow(max_members)
    space = OutcomeSpace.of_size(n_i)
    states = []
    for _ in range(n_j):
        raw = [rng.randbelow(max_weight + 1) for _ in range(n_i)]
        if not any(raw):
            raw[rng.randbelow(n_i)] = 1
        total = sum(raw)
        states.append(ClassicalState(space, tuple(Fraction(x, total) for x in raw)))
    raw_w = [1 + rng.randbelow(max_weight) for _ in range(n_j)]
    total = sum(raw_w)
    target = Ensemble(tuple((Fraction(w, total), s) for w, s in zip(raw_w, states)))
    return fully_correlated(mix(target)), target
