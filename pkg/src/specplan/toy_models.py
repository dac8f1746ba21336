"""First-order Markov toy models for validating the draft/verify loop.

These models are small enough that per-state acceptance rates have closed
forms, so the token-level speculative loop can be checked against exact
oracles instead of against another simulation. Two verification rules are
supported:

* ``greedy_match``: the drafter proposes its argmax token; the target accepts
  exactly when it matches the target's own argmax. Fully deterministic.
* ``stochastic_rejection``: a drafted token x with draft probability q(x) is
  accepted with probability min(1, p(x) / q(x)); on rejection the replacement
  is drawn from the normalized residual max(0, p - q). This construction
  makes every emitted token an exact sample of the target's conditional, so
  the emitted stream is distributed as the target chain itself.

Per state s, the acceptance probability is sum_x min(p(x|s), q(x|s)) under
stochastic rejection, and the argmax-match indicator under greedy matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "AcceptanceRule",
    "MarkovModel",
    "RoundOutcome",
    "GenerationResult",
    "ConvergenceError",
    "exact_state_alpha",
    "exact_mean_alpha",
    "occupancy_weights",
    "generate",
    "speculative_round",
    "generate_and_verify",
]

_ROW_SUM_TOL = 1e-9


class ConvergenceError(Exception):
    """Power iteration failed to reach tolerance within the iteration cap."""


class AcceptanceRule(str, Enum):
    GREEDY_MATCH = "greedy_match"
    STOCHASTIC_REJECTION = "stochastic_rejection"


class MarkovModel:
    """Row-stochastic transition matrix over a vocabulary of V states."""

    def __init__(self, matrix: np.ndarray | list[list[float]]):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"transition matrix must be square and non-empty, got shape {m.shape}")
        if np.any(m < 0.0) or not np.all(np.isfinite(m)):
            raise ValueError("transition probabilities must be finite and >= 0")
        sums = m.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > _ROW_SUM_TOL)[0]
        if bad.size:
            raise ValueError(
                f"rows must sum to 1 within {_ROW_SUM_TOL}; row {int(bad[0])} sums to {sums[bad[0]]!r}"
            )
        m.setflags(write=False)
        self._matrix = m

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def vocab_size(self) -> int:
        return int(self._matrix.shape[0])

    def row(self, state: int) -> np.ndarray:
        if not 0 <= state < self.vocab_size:
            raise ValueError(f"state {state} out of range for vocab size {self.vocab_size}")
        return self._matrix[state]

    def __repr__(self) -> str:
        return f"MarkovModel(V={self.vocab_size})"


def _check_pair(draft: MarkovModel, target: MarkovModel) -> int:
    if draft.vocab_size != target.vocab_size:
        raise ValueError(
            f"draft and target vocabulary sizes differ: {draft.vocab_size} vs {target.vocab_size}"
        )
    return draft.vocab_size


def _sample(rng: np.random.Generator, dist: np.ndarray) -> int:
    # Inverse-CDF draw; clamp guards the u ~= 1 edge when rows sum just under 1.
    cdf = np.cumsum(dist)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(idx, dist.shape[0] - 1)


def exact_state_alpha(
    draft: MarkovModel, target: MarkovModel, state: int, rule: AcceptanceRule
) -> float:
    """Exact acceptance probability for a draft proposed from ``state``."""
    _check_pair(draft, target)
    q = draft.row(state)
    p = target.row(state)
    rule = AcceptanceRule(rule)
    if rule is AcceptanceRule.GREEDY_MATCH:
        return 1.0 if int(np.argmax(q)) == int(np.argmax(p)) else 0.0
    return float(np.minimum(p, q).sum())


def occupancy_weights(
    model: MarkovModel,
    initial_state: int = 0,
    tol: float = 1e-10,
    max_iterations: int = 200_000,
) -> np.ndarray:
    """Long-run average state occupancy of the chain started at ``initial_state``.

    Plain power iteration never settles on periodic chains, so the iteration
    runs on the averaged operator (P + I) / 2, which has the same long-run
    occupancy and converges geometrically for every finite chain. The stop
    rule bounds the L1 step size by ``tol``; the remaining distance to the
    limit is at most that step scaled by the chain's contraction factor, so
    treat ``tol`` as a resolution, not an exact error bound.
    """
    if not 0 <= initial_state < model.vocab_size:
        raise ValueError(
            f"initial_state {initial_state} out of range for vocab size {model.vocab_size}"
        )
    half_lazy = 0.5 * (model.matrix + np.eye(model.vocab_size))
    v = np.zeros(model.vocab_size)
    v[initial_state] = 1.0
    for _ in range(max_iterations):
        nxt = v @ half_lazy
        if np.abs(nxt - v).sum() <= tol:
            return nxt
        v = nxt
    raise ConvergenceError(
        f"occupancy iteration did not reach tolerance {tol} within {max_iterations} steps"
    )


def exact_mean_alpha(
    draft: MarkovModel,
    target: MarkovModel,
    rule: AcceptanceRule,
    initial_state: int = 0,
    tol: float = 1e-10,
    max_iterations: int = 200_000,
) -> float:
    """Occupancy-weighted mean of per-state acceptance probabilities.

    The weights are the target chain's long-run state occupancy, because
    emitted tokens follow the target chain and every verification context is
    an emitted token.
    """
    _check_pair(draft, target)
    weights = occupancy_weights(target, initial_state, tol, max_iterations)
    per_state = np.array(
        [exact_state_alpha(draft, target, s, rule) for s in range(target.vocab_size)]
    )
    return float(weights @ per_state)


def generate(
    model: MarkovModel, steps: int, seed: int, initial_state: int = 0
) -> np.ndarray:
    """Run the chain alone for ``steps`` tokens; the verification baseline."""
    if not isinstance(steps, int) or steps < 1:
        raise ValueError(f"steps must be an integer >= 1, got {steps!r}")
    if not 0 <= initial_state < model.vocab_size:
        raise ValueError(
            f"initial_state {initial_state} out of range for vocab size {model.vocab_size}"
        )
    rng = np.random.default_rng(seed)
    out = np.empty(steps, dtype=np.int64)
    state = initial_state
    for i in range(steps):
        state = _sample(rng, model.row(state))
        out[i] = state
    return out


@dataclass(frozen=True)
class RoundOutcome:
    """Result of one draft/verify round."""

    tokens: tuple[int, ...]  # emitted this round: accepted drafts + replacement or bonus
    accepted: int  # drafts the target kept
    verified: int  # drafts that reached verification (rejection stops the scan)
    next_state: int


def speculative_round(
    draft: MarkovModel,
    target: MarkovModel,
    state: int,
    gamma: int,
    rule: AcceptanceRule,
    rng: np.random.Generator,
) -> RoundOutcome:
    """Draft gamma tokens from ``state``, verify left to right, emit the round.

    Emits accepted drafts followed by either the replacement for the first
    rejected draft or, when all gamma drafts pass, one bonus token from the
    target. Every round therefore emits accepted + 1 tokens.
    """
    _check_pair(draft, target)
    if not isinstance(gamma, int) or gamma < 1:
        raise ValueError(f"gamma must be an integer >= 1, got {gamma!r}")
    rule = AcceptanceRule(rule)
    greedy = rule is AcceptanceRule.GREEDY_MATCH

    drafts: list[int] = []
    s = state
    for _ in range(gamma):
        x = int(np.argmax(draft.row(s))) if greedy else _sample(rng, draft.row(s))
        drafts.append(x)
        s = x

    emitted: list[int] = []
    s = state
    accepted = 0
    verified = 0
    for x in drafts:
        verified += 1
        p_row = target.row(s)
        if greedy:
            keep = x == int(np.argmax(p_row))
        else:
            q_val = draft.row(s)[x]
            ratio = 1.0 if q_val <= 0.0 else min(1.0, p_row[x] / q_val)
            keep = rng.random() < ratio
        if keep:
            accepted += 1
            emitted.append(x)
            s = x
            continue
        # Rejected: emit the corrected token and end the round.
        if greedy:
            replacement = int(np.argmax(p_row))
        else:
            residual = np.maximum(p_row - draft.row(s), 0.0)
            total = residual.sum()
            # Identical rows make rejection a zero-probability event; the
            # fallback only guards floating-point dust.
            replacement = _sample(rng, residual / total) if total > 0.0 else _sample(rng, p_row)
        emitted.append(replacement)
        return RoundOutcome(tuple(emitted), accepted, verified, replacement)

    # All gamma drafts accepted: the verification pass yields a bonus token.
    p_row = target.row(s)
    bonus = int(np.argmax(p_row)) if greedy else _sample(rng, p_row)
    emitted.append(bonus)
    return RoundOutcome(tuple(emitted), accepted, verified, bonus)


@dataclass(frozen=True)
class GenerationResult:
    tokens: np.ndarray
    tokens_generated: int
    rounds: int
    verified_drafts: int
    accepted_drafts: int
    empirical_alpha: float


def generate_and_verify(
    draft: MarkovModel,
    target: MarkovModel,
    gamma: int,
    steps: int,
    seed: int,
    rule: AcceptanceRule,
    initial_state: int = 0,
) -> GenerationResult:
    """Run whole draft/verify rounds until at least ``steps`` tokens are emitted.

    empirical_alpha is accepted over verified drafts; drafts queued behind a
    rejection never reach verification and are not counted.
    """
    if not isinstance(steps, int) or steps < 1:
        raise ValueError(f"steps must be an integer >= 1, got {steps!r}")
    if not 0 <= initial_state < target.vocab_size:
        raise ValueError(
            f"initial_state {initial_state} out of range for vocab size {target.vocab_size}"
        )
    rng = np.random.default_rng(seed)
    tokens: list[int] = []
    rounds = 0
    verified = 0
    accepted = 0
    state = initial_state
    while len(tokens) < steps:
        outcome = speculative_round(draft, target, state, gamma, rule, rng)
        tokens.extend(outcome.tokens)
        rounds += 1
        verified += outcome.verified
        accepted += outcome.accepted
        state = outcome.next_state
    return GenerationResult(
        tokens=np.array(tokens, dtype=np.int64),
        tokens_generated=len(tokens),
        rounds=rounds,
        verified_drafts=verified,
        accepted_drafts=accepted,
        empirical_alpha=accepted / verified if verified else float("nan"),
    )
