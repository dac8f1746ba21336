"""Offline planning toolkit for speculative decoding on heterogeneous SoCs.

Answers three questions for a given platform, model pair, and workload:
whether speculative decoding pays off at all, which draft length and device
mapping to use, and how far the analytic speedup prediction can be trusted
against a stochastic simulation of the serving loop.
"""

from __future__ import annotations

from .acceptance import AcceptanceTrace, AlphaDistribution, distribution, sample_alpha
from .cost_model import (
    AcceptanceRate,
    CostCoefficient,
    DraftLength,
    Speedup,
    cost_for_speedup,
    expected_tokens_per_round,
    is_feasible,
    optimal_gamma,
    speedup,
)
from .design_space import (
    DesignSpaceError,
    DesignVariant,
    Mapping,
    Platform,
    ProcessingUnit,
    UnitKind,
    enumerate_mappings,
    enumerate_variants,
    search_space_size,
    variant_count,
)
from .planner import CoverageError, PlanDecision, PlanRequest, best_global, plan
from .profiles import (
    CostCurve,
    CurvePoint,
    LatencyProfile,
    LatencySample,
    MissingProfileError,
    ModelRole,
    ModelSpec,
    ProfileKey,
    RangeError,
    build_cost_curves,
    cost_coefficient,
    index_profiles,
    latency_at,
    sequence_regime,
)
from .simulator import (
    ConstantAlpha,
    ServingOverheads,
    SimResult,
    SimScenario,
    SweepCell,
    ToyModelSource,
    TraceReplay,
    simulate,
    simulate_rounds,
    sweep,
)
from .toy_models import (
    AcceptanceRule,
    ConvergenceError,
    MarkovModel,
    exact_mean_alpha,
    exact_state_alpha,
    generate,
    generate_and_verify,
    occupancy_weights,
    speculative_round,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AcceptanceRate",
    "AcceptanceRule",
    "AcceptanceTrace",
    "AlphaDistribution",
    "ConstantAlpha",
    "ConvergenceError",
    "CostCoefficient",
    "CostCurve",
    "CoverageError",
    "CurvePoint",
    "DesignSpaceError",
    "DesignVariant",
    "DraftLength",
    "LatencyProfile",
    "LatencySample",
    "Mapping",
    "MarkovModel",
    "MissingProfileError",
    "ModelRole",
    "ModelSpec",
    "PlanDecision",
    "PlanRequest",
    "Platform",
    "ProcessingUnit",
    "ProfileKey",
    "RangeError",
    "ServingOverheads",
    "SimResult",
    "SimScenario",
    "Speedup",
    "SweepCell",
    "ToyModelSource",
    "TraceReplay",
    "UnitKind",
    "best_global",
    "build_cost_curves",
    "cost_coefficient",
    "cost_for_speedup",
    "distribution",
    "enumerate_mappings",
    "enumerate_variants",
    "exact_mean_alpha",
    "exact_state_alpha",
    "expected_tokens_per_round",
    "generate",
    "generate_and_verify",
    "index_profiles",
    "is_feasible",
    "latency_at",
    "occupancy_weights",
    "optimal_gamma",
    "plan",
    "sample_alpha",
    "search_space_size",
    "sequence_regime",
    "simulate",
    "simulate_rounds",
    "speculative_round",
    "speedup",
    "sweep",
    "variant_count",
]
