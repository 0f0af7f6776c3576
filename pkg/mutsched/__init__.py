"""
mutsched: mutation testing of real-time task-set scheduling models.

Simulates task/runnable models under preemptive fixed-priority scheduling
(or zero execution time), generates first-order timing and shared-memory
mutants, and scores them with deadline, access-sequence and output oracles.
"""

__version__ = "0.1.0"

from .analysis import (
    Oracle,
    Verdict,
    access_sequence,
    compare,
    mutation_score,
    run_campaign,
    run_dual_campaign,
    schedulable,
)
from .engine import Trace, derive_gantt, simulate, simulate_zero_time
from .exceptions import (
    MutschedError,
    ModelError,
    ModelValidationError,
    ConfigurationError,
    SimulationError,
    MutationError,
    AnalysisError,
)
from .model import Semantics, SystemModel, parse_model, serialize_model, validate
from .mutation import DeltaConfig, MutationDescriptor, MutationOperator, apply_mutant, enumerate_mutants

__all__ = [
    "simulate",
    "simulate_zero_time",
    "derive_gantt",
    "Trace",
    "parse_model",
    "serialize_model",
    "validate",
    "Semantics",
    "SystemModel",
    "DeltaConfig",
    "MutationDescriptor",
    "MutationOperator",
    "enumerate_mutants",
    "apply_mutant",
    "Oracle",
    "Verdict",
    "access_sequence",
    "compare",
    "schedulable",
    "run_campaign",
    "run_dual_campaign",
    "mutation_score",
    "MutschedError",
    "ModelError",
    "ModelValidationError",
    "ConfigurationError",
    "SimulationError",
    "MutationError",
    "AnalysisError",
]
