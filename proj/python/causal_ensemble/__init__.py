"""Ensemble causal discovery and effect estimation."""

from ._core import (
    CausalRuntimeError,
    ValidationError,
    backdoor_sets,
    consensus,
    d_separated,
    discover,
    estimate_effect,
    fit_hemm,
    run_pipeline,
    sample_scm,
    true_effect,
    vote_threshold,
)

__all__ = [
    "CausalRuntimeError",
    "ValidationError",
    "backdoor_sets",
    "consensus",
    "d_separated",
    "discover",
    "estimate_effect",
    "fit_hemm",
    "run_pipeline",
    "sample_scm",
    "true_effect",
    "vote_threshold",
]
