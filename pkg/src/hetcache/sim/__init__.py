"""Monte Carlo STP simulator with a compiled core and a numpy fallback."""

from .core import (
    SimulationResult,
    SimWindow,
    StpEstimate,
    TrialOutcome,
    available_backends,
    default_backend,
    estimate_stp,
    sample_cache,
    sample_ppp,
    simulate_trial,
)

__all__ = [
    "SimWindow",
    "TrialOutcome",
    "StpEstimate",
    "SimulationResult",
    "available_backends",
    "default_backend",
    "sample_ppp",
    "sample_cache",
    "simulate_trial",
    "estimate_stp",
]
