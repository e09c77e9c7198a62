"""Exact, finite-sample confidence intervals for the average treatment effect
in binary-outcome completely randomized experiments."""

from .core import (
    CapacityError,
    ContractError,
    CountVector,
    Design,
    EffectRange,
    ExactStat,
    Interval,
    ObservedCounts,
    PermCIError,
    ScaledEffect,
    ValidationError,
    c_set,
    neyman,
    tau,
)
from .exactdist import (
    ExactTester,
    StatPmf,
    TreatmentSplit,
    copas_pmf_term,
    exact_pmf,
    exact_pvalue,
)
from .feasibility import feasible_v10_range, is_possible
from .baseline import enumerated_interval
from .balanced import binary_search, fast_interval_balanced, is_compatible_balanced
from .montecarlo import (
    McConfig,
    mc_interval_balanced,
    mc_test,
    required_k_balanced,
    sample_split,
)
from .unbalanced import (
    AssignmentSummary,
    LineSegment,
    required_k_unbalanced,
    scan_line,
    stat_from_summary,
    step_summary,
    unbalanced_interval,
)
from .missing import (
    MaskedCounts,
    MaskedObservations,
    SubjectRecord,
    impute_extremes,
    missing_interval,
    pad_odd,
)

__version__ = "0.1.0"

__all__ = [
    "AssignmentSummary",
    "CapacityError",
    "ContractError",
    "CountVector",
    "Design",
    "EffectRange",
    "ExactStat",
    "ExactTester",
    "Interval",
    "LineSegment",
    "MaskedCounts",
    "MaskedObservations",
    "McConfig",
    "ObservedCounts",
    "PermCIError",
    "ScaledEffect",
    "StatPmf",
    "SubjectRecord",
    "TreatmentSplit",
    "ValidationError",
    "binary_search",
    "c_set",
    "copas_pmf_term",
    "enumerated_interval",
    "exact_pmf",
    "exact_pvalue",
    "fast_interval_balanced",
    "feasible_v10_range",
    "impute_extremes",
    "is_compatible_balanced",
    "is_possible",
    "mc_interval_balanced",
    "mc_test",
    "missing_interval",
    "neyman",
    "pad_odd",
    "required_k_balanced",
    "required_k_unbalanced",
    "sample_split",
    "scan_line",
    "stat_from_summary",
    "step_summary",
    "tau",
    "unbalanced_interval",
]
