"""Small quantum reference used to cross-check the classical analogy.

Only two things live here: Schmidt-form bipartite pure states together with
the decoherence map to a fully correlated classical state, and z/x
measurements by Alice on the Bell state (|00> + |11>)/sqrt(2).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .prob_core import (
    ClassicalState,
    CorrelatedState,
    Ensemble,
    NotNormalized,
    OutcomeSpace,
    fully_correlated,
    make_state,
)
from .steering import analyze, derive_plan

TOL = 1e-12
RATIONAL_GRID = 10**12


class Basis(str, Enum):
    Z = "Z"
    X = "X"


_BASES = {
    Basis.Z: np.eye(2, dtype=complex),
    Basis.X: np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),  # columns |+>, |->
}


@dataclass(frozen=True, eq=False)
class SchmidtState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise ValueError("empty Schmidt state")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > TOL:
            raise NotNormalized(f"sum |alpha_i|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def vector(self) -> np.ndarray:
        """Full state in the product basis |a>|b>, index a*d + b."""
        d = self.dim
        psi = np.zeros(d * d, dtype=complex)
        psi[np.arange(d) * (d + 1)] = self.amplitudes
        return psi

    def density_matrix(self) -> np.ndarray:
        psi = self.vector()
        return np.outer(psi, psi.conj())


BELL = SchmidtState(np.array([1, 1]) / np.sqrt(2))


def partial_trace_alice(rho: np.ndarray, d_alice: int, d_bob: int) -> np.ndarray:
    return np.einsum("abac->bc", rho.reshape(d_alice, d_bob, d_alice, d_bob))


def dephase(rho: np.ndarray) -> np.ndarray:
    """Zero every off-diagonal entry."""
    return np.diag(np.diag(rho))


def rationalize(weights) -> tuple[Fraction, ...]:
    """Round each weight to a multiple of 1e-12, then renormalize exactly."""
    grid = [int(round(float(w) * RATIONAL_GRID)) for w in weights]
    total = sum(grid)
    if total <= 0:
        raise NotNormalized("all weights round to zero")
    return tuple(Fraction(g, total) for g in grid)


def decohere(s: SchmidtState) -> CorrelatedState:
    """Fully correlated classical state with p_i = |alpha_i|^2 (phases discarded)."""
    probs = rationalize(np.abs(s.amplitudes) ** 2)
    return fully_correlated(ClassicalState(OutcomeSpace.of_size(s.dim), probs))


@dataclass(frozen=True, eq=False)
class QubitEnsembleReport:
    basis: Basis
    members: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self):
        total = sum(p for p, _ in self.members)
        if abs(total - 1.0) > TOL:
            raise NotNormalized(f"ensemble probabilities sum to {total!r}")
        for _, v in self.members:
            if abs(np.linalg.norm(v) - 1.0) > TOL:
                raise NotNormalized("member state is not normalized")

    def density_matrix(self) -> np.ndarray:
        return sum(p * np.outer(v, v.conj()) for p, v in self.members)

    def z_statistics(self) -> list[tuple[float, np.ndarray]]:
        """Per member: (weight, Bob's z-outcome probabilities)."""
        return [(p, np.abs(v) ** 2) for p, v in self.members]

    def to_json(self) -> dict:
        return {
            "basis": self.basis.value,
            "members": [
                {"probability": p, "bob_state": [[z.real, z.imag] for z in v]}
                for p, v in self.members
            ],
        }


def epr_measure(basis: Basis | str) -> QubitEnsembleReport:
    """Alice measures her half of the Bell state; returns Bob's conditional states."""
    basis = Basis(basis)
    psi = BELL.vector().reshape(2, 2)          # psi[a, b]
    members = []
    for k in range(2):
        alice_vec = _BASES[basis][:, k]
        bob_unnorm = alice_vec.conj() @ psi    # (<k|_A x I) |psi>
        prob = float(np.vdot(bob_unnorm, bob_unnorm).real)
        members.append((prob, bob_unnorm / np.sqrt(prob)))
    return QubitEnsembleReport(basis, tuple(members))


def bell_reduced_state() -> np.ndarray:
    return partial_trace_alice(BELL.density_matrix(), 2, 2)


def classical_cross_check() -> dict:
    """Steer the decohered Bell state into {|0), |1)} and compare with a Z measurement."""
    resource = decohere(BELL)
    target = Ensemble((
        (Fraction(1, 2), make_state(2, [1, 0])),
        (Fraction(1, 2), make_state(2, [0, 1])),
    ))
    exact = analyze(derive_plan(resource, target))
    stats = epr_measure(Basis.Z).z_statistics()
    weights = rationalize([p for p, _ in stats])
    conditionals = [rationalize(z) for _, z in stats]
    agree = (
        exact.ok
        and exact.announced == weights
        and all(exact.conditionals[str(j)] == c for j, c in enumerate(conditionals))
    )
    return {
        "classical_weights": exact.announced,
        "classical_conditionals": [exact.conditionals[str(j)] for j in range(len(stats))],
        "quantum_weights": weights,
        "quantum_conditionals": conditionals,
        "agree": agree,
    }
