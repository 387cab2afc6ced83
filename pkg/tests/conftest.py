import itertools
from fractions import Fraction

import pytest
from hypothesis import strategies as st

from classical_steering.prob_core import Ensemble, OutcomeSpace, make_state


def normalize(raw):
    total = sum(raw)
    return [Fraction(x, total) for x in raw]


@st.composite
def distributions(draw, size, max_count=12, allow_zero=True):
    lo = 0 if allow_zero else 1
    raw = draw(st.lists(st.integers(lo, max_count), min_size=size, max_size=size))
    if sum(raw) == 0:
        raw[draw(st.integers(0, size - 1))] = 1
    return make_state(size, normalize(raw))


@st.composite
def ensembles(draw, max_outcomes=6, max_members=5, zero_weights=False):
    n_i = draw(st.integers(1, max_outcomes))
    n_j = draw(st.integers(1, max_members))
    states = [draw(distributions(n_i)) for _ in range(n_j)]
    lo = 0 if zero_weights else 1
    raw_w = draw(st.lists(st.integers(lo, 9), min_size=n_j, max_size=n_j))
    if sum(raw_w) == 0:
        raw_w[0] = 1
    return Ensemble(tuple(zip(normalize(raw_w), states)))


def bayes_oracle(target: Ensemble):
    """Q_i(j) from the (i, j) joint table, conditioning on i by brute force."""
    n_i, n_j = len(target.space), len(target)
    table = {
        (i, j): target.weights[j] * target.states[j].probs[i]
        for i, j in itertools.product(range(n_i), range(n_j))
    }
    coins = {}
    for i in range(n_i):
        row = sum(table[(i, j)] for j in range(n_j))
        if row:
            coins[str(i)] = tuple(table[(i, j)] / row for j in range(n_j))
    return coins


def claims_oracle(p_shared, coins, n_j):
    """Announcement weights and Bob's conditionals, enumerating (i, j) pairs."""
    n_i = len(p_shared)
    weight = [Fraction(0)] * n_j
    bob_and_j = [[Fraction(0)] * n_i for _ in range(n_j)]
    for i in range(n_i):
        coin = coins.get(str(i))
        if coin is None:
            continue
        for j in range(n_j):
            p = p_shared[i] * coin[j]
            weight[j] += p
            bob_and_j[j][i] += p   # Bob's half is i as well
    cond = {
        str(j): tuple(x / weight[j] for x in bob_and_j[j]) for j in range(n_j) if weight[j]
    }
    return tuple(weight), cond


@pytest.fixture
def appendix():
    from classical_steering.steering import appendix_instance

    return appendix_instance()


@pytest.fixture
def coin_space():
    return OutcomeSpace(("0", "1"))


_ACCEPTANCE = []


def pytest_configure(config):
    config._acceptance_lines = _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
