"""Classical simulation and benchmarking of discrete-time Quantum Hamiltonian Descent."""

from .corpus import (
    BarrierWrappedObjective,
    DomainViolation,
    ObjectiveSpec,
    UnknownFunction,
    clarke_subgradient,
    evaluate,
    lookup,
    rescale_to_hypercube,
    wrap_barrier,
)
from .engine import ConfigError, QHDConfig, RunTrace, Schedule, evolve
from .grid import GridSpec, ProbabilityField, WaveFunction, cos_product_state, uniform_state
from .harness import best_of_k_exact, best_of_k_mc, run_suite

__version__ = "0.1.0"

__all__ = [
    "BarrierWrappedObjective",
    "ConfigError",
    "DomainViolation",
    "GridSpec",
    "ObjectiveSpec",
    "ProbabilityField",
    "QHDConfig",
    "RunTrace",
    "Schedule",
    "UnknownFunction",
    "WaveFunction",
    "best_of_k_exact",
    "best_of_k_mc",
    "clarke_subgradient",
    "cos_product_state",
    "evaluate",
    "evolve",
    "lookup",
    "rescale_to_hypercube",
    "run_suite",
    "uniform_state",
    "wrap_barrier",
]
