"""Manipulation of weighted elections with few candidates.

Voting protocols with adversarial tie semantics, exact and polynomial
manipulation solvers, PARTITION reduction gadgets and winning-probability
evaluation under vote uncertainty.
"""

from .ballots import (
    Election,
    ElectionFormatError,
    ManipulationInstance,
    Profile,
    WeightedVote,
    pairwise_matrix,
    parse_election,
    serialize_election,
)
from .gadgets import (
    PartitionInstance,
    build_gadget,
    build_stv_destructive,
    partition_oracle,
    verify_theorem,
)
from .manipulate import (
    ManipulationAnswer,
    Verdict,
    solve_ccwm_exact,
    solve_cup_ccwm,
    solve_dcwm_monotone,
    solve_dcwm_via_ccwm,
    solve_unweighted_coalition,
)
from .protocols import (
    canonical_schedule,
    cup_winners,
    randomized_cup_distribution,
    score_winners,
    stv_winners,
    winners,
)
from .uncertain import (
    UncertainEvaluationInstance,
    UncertainManipulationInstance,
    Voter,
    evaluate_exact,
    evaluate_montecarlo,
    solve_uiccwm_randomized_cup,
    solve_uvcimw,
)

__version__ = "0.1.0"

__all__ = [
    "Election",
    "ElectionFormatError",
    "ManipulationInstance",
    "Profile",
    "WeightedVote",
    "pairwise_matrix",
    "parse_election",
    "serialize_election",
    "PartitionInstance",
    "build_gadget",
    "build_stv_destructive",
    "partition_oracle",
    "verify_theorem",
    "ManipulationAnswer",
    "Verdict",
    "solve_ccwm_exact",
    "solve_cup_ccwm",
    "solve_dcwm_monotone",
    "solve_dcwm_via_ccwm",
    "solve_unweighted_coalition",
    "canonical_schedule",
    "cup_winners",
    "randomized_cup_distribution",
    "score_winners",
    "stv_winners",
    "winners",
    "UncertainEvaluationInstance",
    "UncertainManipulationInstance",
    "Voter",
    "evaluate_exact",
    "evaluate_montecarlo",
    "solve_uiccwm_randomized_cup",
    "solve_uvcimw",
]
