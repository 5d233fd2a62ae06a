"""Capacity-optimal MIMO transmit power allocation under joint total and
per-group power budgets.

Solvers: closed-form KKT water-filling for fixed orthogonal channels
(:func:`opa_fixed`), finite-step active-group allocation for i.i.d. fading
channels (:func:`opa_fading`).  Every result can be cross-checked against
independent oracles (:mod:`groupfill.oracle`) and Monte-Carlo simulation
(:mod:`groupfill.ergodic`).
"""
from .errors import (
    DimensionMismatch,
    DomainError,
    EmptyProblem,
    GroupfillError,
    IndexOutOfRange,
    LengthMismatch,
    NegativeGain,
    NonFiniteGradient,
    NonFiniteInput,
    NonPositiveBudget,
    OverlappingGroups,
    ProblemTooLarge,
    ToleranceNotReached,
    UncoveredAntenna,
    ValidationError,
)
from .ergodic import (
    ChannelEnsemble,
    EnsembleKind,
    MonteCarloEstimate,
    ergodic_capacity_closed_form,
    ergodic_capacity_mc,
    expected_log_rayleigh,
    expint_ei,
    jensen_upper_bound,
    sample_gains,
)
from .fading import (
    AllocationCase,
    FadingSolveReport,
    detect_case,
    opa_fading,
)
from .fixed import (
    FixedSolveReport,
    KktResiduals,
    capacity_fixed,
    kkt_residuals,
    opa_fixed,
    waterfill_tpc,
)
from .oracle import (
    LaminarPolytope,
    OracleResult,
    frank_wolfe,
    grid_oracle,
    lp_greedy,
    majorizes,
    oracle_fading_saa,
    oracle_fixed,
)
from .problem import (
    DualSolution,
    GainVector,
    GroupPartition,
    PowerAllocation,
    ValidatedProblem,
    expand_allocation,
    group_of,
    load_problem,
    problem_from_dict,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationCase",
    "ChannelEnsemble",
    "DimensionMismatch",
    "DomainError",
    "DualSolution",
    "EmptyProblem",
    "EnsembleKind",
    "FadingSolveReport",
    "FixedSolveReport",
    "GainVector",
    "GroupPartition",
    "GroupfillError",
    "IndexOutOfRange",
    "KktResiduals",
    "LaminarPolytope",
    "LengthMismatch",
    "MonteCarloEstimate",
    "NegativeGain",
    "NonFiniteGradient",
    "NonFiniteInput",
    "NonPositiveBudget",
    "OracleResult",
    "OverlappingGroups",
    "PowerAllocation",
    "ProblemTooLarge",
    "ToleranceNotReached",
    "UncoveredAntenna",
    "ValidatedProblem",
    "ValidationError",
    "capacity_fixed",
    "detect_case",
    "ergodic_capacity_closed_form",
    "ergodic_capacity_mc",
    "expand_allocation",
    "expected_log_rayleigh",
    "expint_ei",
    "frank_wolfe",
    "grid_oracle",
    "group_of",
    "jensen_upper_bound",
    "kkt_residuals",
    "load_problem",
    "lp_greedy",
    "majorizes",
    "opa_fading",
    "opa_fixed",
    "oracle_fading_saa",
    "oracle_fixed",
    "problem_from_dict",
    "sample_gains",
    "validate",
    "waterfill_tpc",
]
