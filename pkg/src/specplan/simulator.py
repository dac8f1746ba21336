"""Stochastic round-level simulator for draft-then-verify serving.

Where the cost model is a closed form, this simulator plays the rounds out:
each round drafts gamma tokens, verifies them, emits the accepted prefix
plus one token (the correction or the bonus), and charges wall time

    gamma * t_draft + t_target + calls * per_module_call + per_round_fixed

with ``calls`` the number of model invocations in the round (gamma drafter
calls plus one target call by default, or two calls with a batched drafter).
The measured speedup compares against plain target decoding at
``t_target + per_module_call`` per token. Acceptance outcomes come from an
alpha source: a constant rate, a replay of recorded per-sample rates, or a
toy Markov model pair played token by token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .cost_model import AcceptanceRate, CostCoefficient, speedup
from .toy_models import AcceptanceRule, MarkovModel, speculative_round

__all__ = [
    "ServingOverheads",
    "ConstantAlpha",
    "TraceReplay",
    "ToyModelSource",
    "AlphaSource",
    "SimScenario",
    "SimResult",
    "SweepCell",
    "simulate",
    "simulate_rounds",
    "sweep",
]

_CHUNK_ROUNDS = 8192


@dataclass(frozen=True)
class ServingOverheads:
    """Fixed serving costs in milliseconds."""

    per_module_call: float = 0.0
    per_round_fixed: float = 0.0

    def __post_init__(self) -> None:
        for name in ("per_module_call", "per_round_fixed"):
            v = float(getattr(self, name))
            if v < 0.0 or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite value >= 0, got {getattr(self, name)!r}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class ConstantAlpha:
    """Independent per-token acceptance coin flips at a fixed rate."""

    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", AcceptanceRate(self.value).value)


@dataclass(frozen=True)
class TraceReplay:
    """Cycle through recorded per-sample rates, one rate per round."""

    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(AcceptanceRate(a).value for a in self.alphas)
        if not values:
            raise ValueError("trace replay needs at least one rate")
        object.__setattr__(self, "alphas", values)


@dataclass(frozen=True)
class ToyModelSource:
    """Round outcomes from an actual draft/target Markov pair."""

    draft: MarkovModel
    target: MarkovModel
    rule: AcceptanceRule
    initial_state: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rule", AcceptanceRule(self.rule))
        if self.draft.vocab_size != self.target.vocab_size:
            raise ValueError(
                f"draft and target vocabulary sizes differ: "
                f"{self.draft.vocab_size} vs {self.target.vocab_size}"
            )
        if not 0 <= self.initial_state < self.target.vocab_size:
            raise ValueError(
                f"initial_state {self.initial_state} out of range for vocab size "
                f"{self.target.vocab_size}"
            )


AlphaSource = Union[ConstantAlpha, TraceReplay, ToyModelSource]


@dataclass(frozen=True)
class SimScenario:
    alpha_source: AlphaSource
    gamma: int
    t_draft_ms: float
    t_target_ms: float
    tokens_to_generate: int
    seed: int
    overheads: ServingOverheads = field(default_factory=ServingOverheads)
    batched_draft_call: bool = False  # one drafter invocation per round instead of gamma

    def __post_init__(self) -> None:
        if not isinstance(self.gamma, int) or self.gamma < 0:
            raise ValueError(f"gamma must be an integer >= 0, got {self.gamma!r}")
        for name in ("t_draft_ms", "t_target_ms"):
            v = float(getattr(self, name))
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {getattr(self, name)!r}")
            object.__setattr__(self, name, v)
        if not isinstance(self.tokens_to_generate, int) or self.tokens_to_generate < 1:
            raise ValueError(
                f"tokens_to_generate must be an integer >= 1, got {self.tokens_to_generate!r}"
            )
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimResult:
    total_time_ms: float
    tokens: int
    rounds: int
    measured_speedup: float
    empirical_alpha: float  # nan when gamma = 0 (nothing is drafted)
    speedup_stderr: float | None  # None below two rounds


@dataclass(frozen=True)
class SweepCell:
    alpha: float
    gamma: int
    c: float
    predicted: float
    measured: float
    stderr: float | None


def _round_cost_ms(
    gamma: int, t_draft: float, t_target: float, ov: ServingOverheads, batched: bool
) -> float:
    if gamma == 0:
        calls = 1
    else:
        calls = 2 if batched else gamma + 1
    return gamma * t_draft + t_target + calls * ov.per_module_call + ov.per_round_fixed


def _coin_flip_rounds(
    alphas: np.ndarray, gamma: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized accepted/verified counts for rounds with given rates.

    Per round, gamma acceptance coins are flipped; the accepted prefix length
    is the run of successes before the first failure. Coins after the first
    failure are drawn but discarded, which leaves the distribution unchanged
    and keeps the RNG stream independent of outcomes.
    """
    n = alphas.shape[0]
    if gamma == 0:
        zero = np.zeros(n, dtype=np.int64)
        return zero, zero.copy()
    u = rng.random((n, gamma))
    prefix = np.cumprod(u < alphas[:, None], axis=1)
    accepted = prefix.sum(axis=1).astype(np.int64)
    verified = np.minimum(accepted + 1, gamma)
    return accepted, verified


class _RoundSampler:
    """Stateful per-round accepted/verified sampler for one simulation run."""

    def __init__(self, source: AlphaSource, gamma: int, rng: np.random.Generator):
        self._source = source
        self._gamma = gamma
        self._rng = rng
        self._round_index = 0
        if isinstance(source, ToyModelSource):
            self._state = source.initial_state

    def next_rounds(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        source, gamma = self._source, self._gamma
        if isinstance(source, ConstantAlpha):
            alphas = np.full(count, source.value)
            out = _coin_flip_rounds(alphas, gamma, self._rng)
        elif isinstance(source, TraceReplay):
            rates = np.asarray(source.alphas)
            idx = (self._round_index + np.arange(count)) % rates.shape[0]
            out = _coin_flip_rounds(rates[idx], gamma, self._rng)
        else:
            accepted = np.empty(count, dtype=np.int64)
            verified = np.empty(count, dtype=np.int64)
            if gamma == 0:
                accepted[:] = 0
                verified[:] = 0
            else:
                for i in range(count):
                    outcome = speculative_round(
                        source.draft, source.target, self._state, gamma, source.rule, self._rng
                    )
                    accepted[i] = outcome.accepted
                    verified[i] = outcome.verified
                    self._state = outcome.next_state
            out = accepted, verified
        self._round_index += count
        return out


def _finish(
    accepted: np.ndarray,
    verified: np.ndarray,
    gamma: int,
    t_draft: float,
    t_target: float,
    ov: ServingOverheads,
    batched: bool,
) -> SimResult:
    rounds = int(accepted.shape[0])
    tokens_per_round = accepted + 1
    tokens = int(tokens_per_round.sum())
    round_cost = _round_cost_ms(gamma, t_draft, t_target, ov, batched)
    total_time = rounds * round_cost
    per_token_baseline = t_target + ov.per_module_call
    measured = (tokens * per_token_baseline) / total_time
    verified_total = int(verified.sum())
    empirical_alpha = (
        int(accepted.sum()) / verified_total if verified_total else float("nan")
    )
    stderr = None
    if rounds >= 2:
        sd = float(np.std(tokens_per_round, ddof=1))
        stderr = sd / math.sqrt(rounds) * per_token_baseline / round_cost
    return SimResult(
        total_time_ms=total_time,
        tokens=tokens,
        rounds=rounds,
        measured_speedup=measured,
        empirical_alpha=empirical_alpha,
        speedup_stderr=stderr,
    )


def simulate(scenario: SimScenario) -> SimResult:
    """Run whole rounds until the token budget is met.

    Identical scenarios (including the seed) give bit-identical results; the
    RNG stream is consumed in fixed-size blocks of whole rounds regardless of
    outcomes.
    """
    sampler = _RoundSampler(
        scenario.alpha_source, scenario.gamma, np.random.default_rng(scenario.seed)
    )
    accepted_parts: list[np.ndarray] = []
    verified_parts: list[np.ndarray] = []
    produced = 0
    while produced < scenario.tokens_to_generate:
        accepted, verified = sampler.next_rounds(_CHUNK_ROUNDS)
        need = scenario.tokens_to_generate - produced
        cumulative = np.cumsum(accepted + 1)
        cut = int(np.searchsorted(cumulative, need, side="left")) + 1
        accepted_parts.append(accepted[:cut])
        verified_parts.append(verified[:cut])
        produced += int(cumulative[min(cut, accepted.shape[0]) - 1])
    return _finish(
        np.concatenate(accepted_parts),
        np.concatenate(verified_parts),
        scenario.gamma,
        scenario.t_draft_ms,
        scenario.t_target_ms,
        scenario.overheads,
        scenario.batched_draft_call,
    )


def simulate_rounds(scenario: SimScenario, rounds: int) -> SimResult:
    """Run exactly ``rounds`` rounds, ignoring the scenario's token budget."""
    if not isinstance(rounds, int) or rounds < 1:
        raise ValueError(f"rounds must be an integer >= 1, got {rounds!r}")
    sampler = _RoundSampler(
        scenario.alpha_source, scenario.gamma, np.random.default_rng(scenario.seed)
    )
    accepted_parts: list[np.ndarray] = []
    verified_parts: list[np.ndarray] = []
    remaining = rounds
    while remaining > 0:
        take = min(remaining, _CHUNK_ROUNDS)
        accepted, verified = sampler.next_rounds(take)
        accepted_parts.append(accepted)
        verified_parts.append(verified)
        remaining -= take
    return _finish(
        np.concatenate(accepted_parts),
        np.concatenate(verified_parts),
        scenario.gamma,
        scenario.t_draft_ms,
        scenario.t_target_ms,
        scenario.overheads,
        scenario.batched_draft_call,
    )


def sweep(
    alphas: Sequence[float],
    gammas: Sequence[int],
    c: float,
    overheads: ServingOverheads | None = None,
    rounds: int = 100_000,
    seed: int = 0,
    batched_draft_call: bool = False,
) -> list[SweepCell]:
    """Predicted versus measured speedup over an (alpha, gamma) grid at fixed c.

    Cells run in grid order (gammas outer, alphas inner) with exactly
    ``rounds`` rounds each and an RNG derived as seed + cell index, so the
    output is reproducible cell by cell. Latencies are normalized to
    t_target = 1, t_draft = c.
    """
    cc = CostCoefficient(c).value
    ov = overheads if overheads is not None else ServingOverheads()
    cells: list[SweepCell] = []
    index = 0
    for gamma in gammas:
        for alpha in alphas:
            scenario = SimScenario(
                alpha_source=ConstantAlpha(alpha),
                gamma=gamma,
                t_draft_ms=cc,
                t_target_ms=1.0,
                tokens_to_generate=1,
                seed=seed + index,
                overheads=ov,
                batched_draft_call=batched_draft_call,
            )
            result = simulate_rounds(scenario, rounds)
            cells.append(
                SweepCell(
                    alpha=float(alpha),
                    gamma=int(gamma),
                    c=cc,
                    predicted=speedup(alpha, gamma, cc),
                    measured=result.measured_speedup,
                    stderr=result.speedup_stderr,
                )
            )
            index += 1
    return cells
