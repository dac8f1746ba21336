"""Deployment planner: should this platform speculate, and how.

For every design variant the planner scores each partition-to-unit mapping
with the analytic speedup model at the requested sequence length, drops
mappings that are infeasible (cost ratio at or above the acceptance rate) or
below the deployment threshold, and keeps the fastest survivor. A
heterogeneous winner must beat the best homogeneous candidate by a margin,
otherwise the homogeneous mapping is kept and the decision says why: on
shared-memory SoCs splitting the models across units costs integration
effort that a hairline gain does not repay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cost_model import AcceptanceRate, is_feasible, optimal_gamma
from .design_space import DesignVariant, Mapping, Platform, enumerate_mappings, enumerate_variants
from .profiles import CostCurve, RangeError

__all__ = [
    "PlanRequest",
    "PlanDecision",
    "CoverageError",
    "plan",
    "best_global",
]


class CoverageError(Exception):
    """The cost-curve set does not cover some (variant, mapping) pair."""


@dataclass(frozen=True)
class PlanRequest:
    platform: Platform
    alpha: float
    seq_len: int = 63
    gamma_max: int = 16
    min_speedup: float = 1.05
    heterogeneity_margin: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", AcceptanceRate(self.alpha).value)
        if not isinstance(self.seq_len, int) or self.seq_len < 1:
            raise ValueError(f"seq_len must be an integer >= 1, got {self.seq_len!r}")
        if not isinstance(self.gamma_max, int) or self.gamma_max < 1:
            raise ValueError(f"gamma_max must be an integer >= 1, got {self.gamma_max!r}")
        ms = float(self.min_speedup)
        if not (ms >= 1.0 and math.isfinite(ms)):
            raise ValueError(f"min_speedup must be >= 1, got {self.min_speedup!r}")
        object.__setattr__(self, "min_speedup", ms)
        hm = float(self.heterogeneity_margin)
        if not (hm >= 0.0 and math.isfinite(hm)):
            raise ValueError(f"heterogeneity_margin must be >= 0, got {self.heterogeneity_margin!r}")
        object.__setattr__(self, "heterogeneity_margin", hm)


@dataclass(frozen=True)
class PlanDecision:
    """Outcome for one design variant.

    ``heterogeneous`` is None when it does not apply: no speculation, a
    single-unit platform, or a single partition.
    """

    variant_index: int  # 1-based, enumeration order
    variant: DesignVariant
    use_speculation: bool
    gamma: int
    mapping: Mapping | None
    heterogeneous: bool | None
    predicted_speedup: float
    notes: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "notes", tuple(self.notes))
        if self.use_speculation:
            if self.mapping is None or self.gamma < 1:
                raise ValueError("a speculation decision needs a mapping and gamma >= 1")
        else:
            if self.gamma != 0 or self.predicted_speedup != 1.0:
                raise ValueError("a no-speculation decision has gamma = 0 and speedup 1")
            if self.mapping is not None or self.heterogeneous is not None:
                raise ValueError("a no-speculation decision carries no mapping")


@dataclass(frozen=True)
class _Candidate:
    mapping: Mapping
    order: int  # enumeration index, the deterministic tie-breaker
    c: float
    gamma: int
    speedup: float
    heterogeneous: bool


def _mapping_is_heterogeneous(platform: Platform, mapping: Mapping) -> bool:
    if len(platform.units) < 2 or platform.partition_count < 2:
        return False
    return mapping.assignment[0] != mapping.assignment[1]


def plan(request: PlanRequest, curves: list[CostCurve]) -> list[PlanDecision]:
    """One decision per design variant, in enumeration order.

    The curve set must cover every (variant, mapping) pair of the platform at
    the requested sequence length.
    """
    platform = request.platform
    by_pair: dict[tuple[tuple[int, ...], tuple[int, ...]], CostCurve] = {}
    for curve in curves:
        pair = (curve.variant.allocation, curve.mapping.assignment)
        if pair in by_pair:
            raise ValueError(f"duplicate cost curve for variant {pair[0]}, mapping {pair[1]}")
        by_pair[pair] = curve

    hetero_applicable = len(platform.units) > 1 and platform.partition_count >= 2
    extra_partitions = platform.partition_count > 2

    decisions: list[PlanDecision] = []
    for index, variant in enumerate(enumerate_variants(platform), start=1):
        candidates: list[_Candidate] = []
        any_feasible = False
        best_gated = 0.0
        for order, mapping in enumerate(enumerate_mappings(platform)):
            pair = (variant.allocation, mapping.assignment)
            curve = by_pair.get(pair)
            if curve is None:
                raise CoverageError(
                    f"no cost curve for variant {variant.allocation}, mapping {mapping.assignment}"
                )
            try:
                c = curve.coefficient_at(request.seq_len)
            except RangeError as err:
                raise CoverageError(
                    f"cost curve for variant {variant.allocation}, mapping "
                    f"{mapping.assignment} does not cover seq_len {request.seq_len}: {err}"
                ) from None
            if not is_feasible(request.alpha, c):
                continue
            any_feasible = True
            gamma, s = optimal_gamma(request.alpha, c, request.gamma_max)
            if s < request.min_speedup:
                best_gated = max(best_gated, s)
                continue
            candidates.append(
                _Candidate(mapping, order, c, gamma, s, _mapping_is_heterogeneous(platform, mapping))
            )

        notes: list[str] = []
        if extra_partitions:
            notes.append(
                f"partition_count={platform.partition_count} exceeds the modeled "
                "draft/verify split; partitions beyond the first two are ignored"
            )

        if not candidates:
            if not any_feasible:
                notes.append("every mapping has a cost ratio at or above alpha")
            else:
                notes.append(
                    f"best feasible speedup {best_gated:.4f} is below "
                    f"min_speedup {request.min_speedup:.4f}"
                )
            decisions.append(
                PlanDecision(index, variant, False, 0, None, None, 1.0, tuple(notes))
            )
            continue

        # Fastest first; prefer homogeneous, then enumeration order, on exact ties.
        winner = min(candidates, key=lambda k: (-k.speedup, k.heterogeneous, k.order))
        if winner.heterogeneous:
            homogeneous = [k for k in candidates if not k.heterogeneous]
            if homogeneous:
                runner_up = min(homogeneous, key=lambda k: (-k.speedup, k.order))
                gain = winner.speedup - runner_up.speedup
                if gain < request.heterogeneity_margin:
                    notes.append(
                        f"heterogeneous gain {gain:.4f} below margin "
                        f"{request.heterogeneity_margin:.4f}; homogeneous mapping kept"
                    )
                    winner = runner_up

        decisions.append(
            PlanDecision(
                index,
                variant,
                True,
                winner.gamma,
                winner.mapping,
                winner.heterogeneous if hetero_applicable else None,
                winner.speedup,
                tuple(notes),
            )
        )
    return decisions


def best_global(decisions: list[PlanDecision]) -> PlanDecision:
    """The single best decision: fastest, then fewest resources, then homogeneous.

    Resource ties compare allocation vectors lexicographically; a decision
    without speculation counts as homogeneous for the final tie-breaker.
    """
    if not decisions:
        raise ValueError("best_global needs at least one decision")
    return min(
        decisions,
        key=lambda d: (
            -d.predicted_speedup,
            d.variant.allocation,
            bool(d.heterogeneous),
            d.variant_index,
        ),
    )
