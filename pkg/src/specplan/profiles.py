"""Measured latency profiles and the cost curves derived from them.

A profile is a set of (seq_len, latency) samples for one model role on one
unit with a fixed resource allocation and quantization scheme. Latencies
between samples are linearly interpolated; queries outside the measured
range are refused rather than extrapolated. The cost coefficient feeding the
speedup model is the ratio of drafter to target latency at the same
sequence length, evaluated per (variant, mapping) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping as MappingType, NamedTuple

from .design_space import (
    DesignVariant,
    Mapping,
    Platform,
    enumerate_mappings,
    enumerate_variants,
)

__all__ = [
    "ModelRole",
    "ModelSpec",
    "LatencySample",
    "LatencyProfile",
    "ProfileKey",
    "CurvePoint",
    "CostCurve",
    "RangeError",
    "MissingProfileError",
    "index_profiles",
    "latency_at",
    "cost_coefficient",
    "build_cost_curves",
    "sequence_regime",
]


class RangeError(Exception):
    """A sequence length falls outside a profile's measured range."""


class MissingProfileError(Exception):
    """A (role, unit, allocation, quantization) lookup has no profile."""

    def __init__(self, key: "ProfileKey"):
        self.key = key
        super().__init__(
            "no latency profile for role={0.role}, unit={0.unit_id}, "
            "allocation={0.allocation}, quantization={0.quantization}".format(key)
        )


class ModelRole(str, Enum):
    DRAFTER = "drafter"
    TARGET = "target"


_TAG_OK = set("abcdefghijklmnopqrstuvwxyz0123456789_-./")


def _check_tag(tag: str, what: str) -> str:
    if not tag or not set(tag) <= _TAG_OK:
        raise ValueError(f"{what} must be a lowercase token, got {tag!r}")
    return tag


@dataclass(frozen=True)
class ModelSpec:
    """Descriptive model metadata; only used to classify the workload regime."""

    name: str
    hidden_dim: int
    quantization: str

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("model name must be non-empty")
        if not isinstance(self.hidden_dim, int) or self.hidden_dim < 1:
            raise ValueError(f"hidden_dim must be an integer >= 1, got {self.hidden_dim!r}")
        _check_tag(self.quantization, "quantization")


def sequence_regime(model: ModelSpec, seq_len: int) -> str:
    """"short" while seq_len is below the hidden dimension, else "long".

    Short sequences keep per-token cost roughly flat, which is what makes a
    single latency ratio per seq_len a usable cost model.
    """
    if not isinstance(seq_len, int) or seq_len < 1:
        raise ValueError(f"seq_len must be an integer >= 1, got {seq_len!r}")
    return "short" if seq_len < model.hidden_dim else "long"


@dataclass(frozen=True)
class LatencySample:
    seq_len: int
    latency_ms: float

    def __post_init__(self) -> None:
        if not isinstance(self.seq_len, int) or self.seq_len < 1:
            raise ValueError(f"seq_len must be an integer >= 1, got {self.seq_len!r}")
        ms = float(self.latency_ms)
        if not (ms > 0.0 and math.isfinite(ms)):
            raise ValueError(f"latency_ms must be positive and finite, got {self.latency_ms!r}")
        object.__setattr__(self, "latency_ms", ms)


@dataclass(frozen=True)
class LatencyProfile:
    """Measured latencies for one (role, unit, allocation, quantization)."""

    role: ModelRole
    unit_id: str
    allocation: int
    quantization: str
    samples: tuple[LatencySample, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.role, ModelRole):
            object.__setattr__(self, "role", ModelRole(self.role))
        if not self.unit_id:
            raise ValueError("unit_id must be non-empty")
        if not isinstance(self.allocation, int) or self.allocation < 1:
            raise ValueError(f"allocation must be an integer >= 1, got {self.allocation!r}")
        _check_tag(self.quantization, "quantization")
        samples = tuple(self.samples)
        if not samples:
            raise ValueError("profile needs at least one latency sample")
        for prev, cur in zip(samples, samples[1:]):
            if cur.seq_len <= prev.seq_len:
                raise ValueError(
                    f"seq_len values must be strictly increasing, got {prev.seq_len} "
                    f"then {cur.seq_len}"
                )
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_points(
        cls,
        role: ModelRole | str,
        unit_id: str,
        allocation: int,
        quantization: str,
        points: Iterable[tuple[int, float]],
    ) -> "LatencyProfile":
        ordered = sorted(points, key=lambda p: p[0])
        return cls(
            ModelRole(role),
            unit_id,
            allocation,
            quantization,
            tuple(LatencySample(s, ms) for s, ms in ordered),
        )

    @property
    def key(self) -> "ProfileKey":
        return ProfileKey(self.role, self.unit_id, self.allocation, self.quantization)

    @property
    def min_seq_len(self) -> int:
        return self.samples[0].seq_len

    @property
    def max_seq_len(self) -> int:
        return self.samples[-1].seq_len


class ProfileKey(NamedTuple):
    role: ModelRole
    unit_id: str
    allocation: int
    quantization: str


def index_profiles(profiles: Iterable[LatencyProfile]) -> dict[ProfileKey, LatencyProfile]:
    """Key profiles for lookup; duplicate keys are an error."""
    out: dict[ProfileKey, LatencyProfile] = {}
    for profile in profiles:
        if profile.key in out:
            raise ValueError(f"duplicate profile for {tuple(profile.key)}")
        out[profile.key] = profile
    return out


def latency_at(profile: LatencyProfile, seq_len: int) -> float:
    """Latency at seq_len: exact at samples, linear between them, no extrapolation."""
    if not isinstance(seq_len, int) or seq_len < 1:
        raise ValueError(f"seq_len must be an integer >= 1, got {seq_len!r}")
    lo, hi = profile.min_seq_len, profile.max_seq_len
    if not lo <= seq_len <= hi:
        raise RangeError(
            f"seq_len {seq_len} outside measured range [{lo}, {hi}] for "
            f"role={profile.role.value}, unit={profile.unit_id}, "
            f"allocation={profile.allocation}, quantization={profile.quantization}"
        )
    samples = profile.samples
    for i, sample in enumerate(samples):
        if sample.seq_len == seq_len:
            return sample.latency_ms
        if sample.seq_len > seq_len:
            left, right = samples[i - 1], sample
            frac = (seq_len - left.seq_len) / (right.seq_len - left.seq_len)
            return left.latency_ms + frac * (right.latency_ms - left.latency_ms)
    raise AssertionError("unreachable: range checked above")


def cost_coefficient(draft: LatencyProfile, target: LatencyProfile, seq_len: int) -> float:
    """Draft over target latency at one sequence length."""
    return latency_at(draft, seq_len) / latency_at(target, seq_len)


@dataclass(frozen=True)
class CurvePoint:
    seq_len: int
    c: float
    infeasible: bool  # c > 1: the drafter is slower than the target here

    def __post_init__(self) -> None:
        if not isinstance(self.seq_len, int) or self.seq_len < 1:
            raise ValueError(f"seq_len must be an integer >= 1, got {self.seq_len!r}")
        v = float(self.c)
        if not (v > 0.0 and math.isfinite(v)):
            raise ValueError(f"cost coefficient must be positive and finite, got {self.c!r}")
        object.__setattr__(self, "c", v)


@dataclass(frozen=True)
class CostCurve:
    """Cost coefficient versus sequence length for one (variant, mapping)."""

    variant: DesignVariant
    mapping: Mapping
    points: tuple[CurvePoint, ...]

    def __post_init__(self) -> None:
        points = tuple(self.points)
        if not points:
            raise ValueError("cost curve needs at least one point")
        for prev, cur in zip(points, points[1:]):
            if cur.seq_len <= prev.seq_len:
                raise ValueError("curve points must have strictly increasing seq_len")
        object.__setattr__(self, "points", points)

    @property
    def min_seq_len(self) -> int:
        return self.points[0].seq_len

    @property
    def max_seq_len(self) -> int:
        return self.points[-1].seq_len

    def coefficient_at(self, seq_len: int) -> float:
        if not isinstance(seq_len, int) or seq_len < 1:
            raise ValueError(f"seq_len must be an integer >= 1, got {seq_len!r}")
        lo, hi = self.min_seq_len, self.max_seq_len
        if not lo <= seq_len <= hi:
            raise RangeError(
                f"seq_len {seq_len} outside curve range [{lo}, {hi}] for "
                f"variant {self.variant.allocation}, mapping {self.mapping.assignment}"
            )
        for i, point in enumerate(self.points):
            if point.seq_len == seq_len:
                return point.c
            if point.seq_len > seq_len:
                left, right = self.points[i - 1], point
                frac = (seq_len - left.seq_len) / (right.seq_len - left.seq_len)
                return left.c + frac * (right.c - left.c)
        raise AssertionError("unreachable: range checked above")

    def infeasible_lengths(self) -> tuple[int, ...]:
        return tuple(p.seq_len for p in self.points if p.infeasible)


def _profile_for(
    profiles: MappingType[ProfileKey, LatencyProfile], key: ProfileKey
) -> LatencyProfile:
    try:
        return profiles[key]
    except KeyError:
        raise MissingProfileError(key) from None


def build_cost_curves(
    platform: Platform,
    profiles: MappingType[ProfileKey, LatencyProfile],
    drafter_quantization: str = "fp16",
    target_quantization: str = "w8a8",
) -> list[CostCurve]:
    """One cost curve per (variant, mapping) pair, in enumeration order.

    The drafter runs on the unit of partition 0 and the target on partition 1
    (partition 0 doubles as both on single-partition platforms). Each curve
    is sampled at the union of both profiles' sample points restricted to the
    intersection of their ranges; an empty intersection is an error.
    """
    curves: list[CostCurve] = []
    for variant in enumerate_variants(platform):
        for mapping in enumerate_mappings(platform):
            d_idx = mapping.assignment[0]
            t_idx = mapping.assignment[1] if len(mapping.assignment) > 1 else d_idx
            d_unit = platform.units[d_idx]
            t_unit = platform.units[t_idx]
            d_prof = _profile_for(
                profiles,
                ProfileKey(
                    ModelRole.DRAFTER,
                    d_unit.unit_id,
                    variant.allocation[d_idx],
                    drafter_quantization,
                ),
            )
            t_prof = _profile_for(
                profiles,
                ProfileKey(
                    ModelRole.TARGET,
                    t_unit.unit_id,
                    variant.allocation[t_idx],
                    target_quantization,
                ),
            )
            lo = max(d_prof.min_seq_len, t_prof.min_seq_len)
            hi = min(d_prof.max_seq_len, t_prof.max_seq_len)
            if lo > hi:
                raise RangeError(
                    f"profiles for variant {variant.allocation}, mapping "
                    f"{mapping.assignment} have no overlapping seq_len range "
                    f"([{d_prof.min_seq_len}, {d_prof.max_seq_len}] vs "
                    f"[{t_prof.min_seq_len}, {t_prof.max_seq_len}])"
                )
            grid = sorted(
                {s.seq_len for s in d_prof.samples if lo <= s.seq_len <= hi}
                | {s.seq_len for s in t_prof.samples if lo <= s.seq_len <= hi}
            )
            points = []
            for s in grid:
                c = cost_coefficient(d_prof, t_prof, s)
                points.append(CurvePoint(s, c, c > 1.0))
            curves.append(CostCurve(variant, mapping, tuple(points)))
    return curves
