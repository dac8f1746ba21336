"""Acceptance-rate statistics from recorded draft/verify traces.

Each trace row records, for one benchmark sample under one drafter/target
configuration, how many tokens the drafter proposed and how many the target
accepted. The per-sample acceptance rate is their ratio; planning scenarios
are percentiles of the per-sample distribution (a typical sample for the
median, an optimistic one for p90).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "AcceptanceTrace",
    "AlphaDistribution",
    "sample_alpha",
    "distribution",
]


@dataclass(frozen=True)
class AcceptanceTrace:
    """Aggregate draft/verify counts for one sample.

    ``drafted`` counts drafter-proposed tokens only; bonus tokens emitted on
    fully accepted rounds are never drafted, so they appear in neither count.
    """

    task: str
    sample_id: str
    config: str
    drafted: int
    accepted: int

    def __post_init__(self) -> None:
        if not self.task or not self.sample_id or not self.config:
            raise ValueError("task, sample_id and config must be non-empty")
        if not isinstance(self.drafted, int) or self.drafted < 1:
            raise ValueError(f"drafted must be an integer >= 1, got {self.drafted!r}")
        if not isinstance(self.accepted, int) or not 0 <= self.accepted <= self.drafted:
            raise ValueError(
                f"accepted must be an integer in [0, drafted], got {self.accepted!r} "
                f"with drafted={self.drafted!r}"
            )


def sample_alpha(trace: AcceptanceTrace) -> float:
    """Per-sample acceptance rate, accepted / drafted."""
    return trace.accepted / trace.drafted


@dataclass(frozen=True)
class AlphaDistribution:
    """Per-sample acceptance rates for one configuration (and optional task)."""

    config: str
    task: str | None
    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.alphas:
            raise ValueError("distribution needs at least one sample")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    @property
    def n(self) -> int:
        return len(self.alphas)

    def percentile(self, q: float) -> float:
        """Inclusive linear interpolation between order statistics."""
        if not 0.0 < q <= 100.0:
            raise ValueError(f"percentile must lie in (0, 100], got {q!r}")
        return float(np.percentile(np.asarray(self.alphas), q, method="linear"))

    def summary(self) -> dict[str, float]:
        return {
            "median": self.percentile(50.0),
            "mean": float(np.mean(np.asarray(self.alphas))),
            "p10": self.percentile(10.0),
            "p25": self.percentile(25.0),
            "p75": self.percentile(75.0),
            "p90": self.percentile(90.0),
        }


def distribution(
    traces: Iterable[AcceptanceTrace] | Sequence[AcceptanceTrace],
    config: str,
    task: str | None = None,
) -> AlphaDistribution:
    """Distribution of per-sample rates filtered by config and, optionally, task.

    An empty selection is an error naming the config/task tags that do exist.
    """
    traces = list(traces)
    selected = [
        t for t in traces if t.config == config and (task is None or t.task == task)
    ]
    if not selected:
        configs = sorted({t.config for t in traces})
        tasks = sorted({t.task for t in traces})
        raise ValueError(
            f"no traces match config={config!r}"
            + (f", task={task!r}" if task is not None else "")
            + f"; known configs: {configs}; known tasks: {tasks}"
        )
    return AlphaDistribution(config, task, tuple(sample_alpha(t) for t in selected))
