"""Closed-form speedup model for draft-then-verify decoding.

One round drafts ``gamma`` tokens with the cheap model and verifies them with
the target in a single pass; a fully accepted round emits one extra bonus
token from the verification pass. With per-token acceptance probability
``alpha`` and a draft/target latency ratio ``c``, the expected tokens per
round form the truncated geometric sum ``1 + alpha + ... + alpha**gamma``
while the round costs ``gamma * c + 1`` target-equivalent passes, so

    speedup(alpha, gamma, c) = (1 - alpha**(gamma + 1)) / ((1 - alpha) * (gamma * c + 1))

relative to plain target-only decoding. Speculation can only help when the
drafter is cheap in proportion to how often it is right: for ``c >= alpha``
no draft length beats speedup 1, and ``gamma = 0`` is always exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "AcceptanceRate",
    "CostCoefficient",
    "DraftLength",
    "Speedup",
    "speedup",
    "expected_tokens_per_round",
    "is_feasible",
    "optimal_gamma",
    "cost_for_speedup",
]


@dataclass(frozen=True)
class AcceptanceRate:
    """Per-token probability that the target keeps a drafted token; in [0, 1]."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"acceptance rate must lie in [0, 1], got {self.value!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class CostCoefficient:
    """Draft latency over target latency at the same sequence length; > 0."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not (v > 0.0 and math.isfinite(v)):
            raise ValueError(f"cost coefficient must be a positive finite real, got {self.value!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class DraftLength:
    """Number of tokens drafted per round; an integer >= 0."""

    value: int

    def __post_init__(self) -> None:
        v = self.value
        if isinstance(v, float):
            if not v.is_integer():
                raise ValueError(f"draft length must be an integer, got {v!r}")
            v = int(v)
        if not isinstance(v, int) or v < 0:
            raise ValueError(f"draft length must be an integer >= 0, got {self.value!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Speedup:
    """Ratio of baseline to speculative decoding time; > 0."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not (v > 0.0 and math.isfinite(v)):
            raise ValueError(f"speedup must be a positive finite real, got {self.value!r}")
        object.__setattr__(self, "value", v)


def expected_tokens_per_round(alpha: float, gamma: int) -> float:
    """Expected emitted tokens per round, sum of alpha**k for k in 0..gamma.

    Equals gamma + 1 when alpha is exactly 1, and lies in [1, gamma + 1].
    """
    a = AcceptanceRate(alpha).value
    g = DraftLength(gamma).value
    if a == 1.0:
        return float(g + 1)
    return (1.0 - a ** (g + 1)) / (1.0 - a)


def speedup(alpha: float, gamma: int, c: float) -> float:
    """Expected speedup of speculative decoding over the plain target.

    Exactly 1 for gamma = 0; for alpha = 1 the analytic limit
    (gamma + 1) / (gamma * c + 1) is returned.
    """
    g = DraftLength(gamma).value
    cost = g * CostCoefficient(c).value + 1.0
    return expected_tokens_per_round(alpha, g) / cost


def is_feasible(alpha: float, c: float) -> bool:
    """True when some draft length can beat plain decoding, i.e. c < alpha."""
    return CostCoefficient(c).value < AcceptanceRate(alpha).value


def optimal_gamma(alpha: float, c: float, gamma_max: int = 16) -> tuple[int, float]:
    """Best integer draft length in [0, gamma_max] and its speedup.

    Ties break toward the smaller gamma. Infeasible (alpha, c) pairs return
    (0, 1.0), the no-speculation point.
    """
    g_max = DraftLength(gamma_max).value
    if g_max < 1:
        raise ValueError(f"gamma_max must be >= 1, got {gamma_max!r}")
    if not is_feasible(alpha, c):
        return 0, 1.0
    best_g, best_s = 0, 1.0
    for g in range(1, g_max + 1):
        s = speedup(alpha, g, c)
        if s > best_s:
            best_g, best_s = g, s
    return best_g, best_s


def cost_for_speedup(alpha: float, gamma: int, target: float) -> float:
    """Back-solve the cost coefficient giving ``speedup(alpha, gamma, c) == target``.

    Needs gamma >= 1 (gamma = 0 pins the speedup to 1 regardless of c). Raises
    when no positive coefficient reaches the requested value.
    """
    g = DraftLength(gamma).value
    if g < 1:
        raise ValueError("gamma must be >= 1 to solve for a cost coefficient")
    s = Speedup(target).value
    c = (expected_tokens_per_round(alpha, g) / s - 1.0) / g
    if c <= 0.0:
        raise ValueError(
            f"no positive cost coefficient yields speedup {target!r} at alpha={alpha!r}, gamma={g}"
        )
    return c
