"""Exact simulation of classical teleportation and classical remote steering."""

from .prob_core import (
    ClassicalState,
    CorrelatedState,
    Ensemble,
    OutcomeSpace,
    fully_correlated,
    make_ensemble,
    make_state,
    marginal,
    mix,
    total_variation,
)
from .protocol_runtime import ProtocolTranscript, RandomSource, empirical, sample
from .steering import SteeringPlan, analyze, derive_plan, execute, verify_no_communication
from .teleport import SealedCoin, analyze_teleport, run_teleport

__version__ = "0.1.0"
