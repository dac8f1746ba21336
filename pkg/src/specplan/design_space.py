"""Hardware design space: processing units, variants, and model mappings.

A platform is a set of processing units, each with a number of identical
resources (CPU cores, GPU shader cores, NPU tiles). A design variant fixes
how many resources of every unit are available to the runtime; a mapping
assigns each model partition (drafter, target) to one unit. The planner
scores every (variant, mapping) pair, so the sizes here bound its work:
``variant_count * unit_count ** partition_count`` pairs in total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import product

__all__ = [
    "UnitKind",
    "ProcessingUnit",
    "Platform",
    "DesignVariant",
    "Mapping",
    "DesignSpaceError",
    "ENUMERATION_LIMIT",
    "variant_count",
    "search_space_size",
    "enumerate_variants",
    "enumerate_mappings",
    "validate_variant",
    "validate_mapping",
]

# Eager enumeration refuses to materialize spaces larger than this.
ENUMERATION_LIMIT = 1_000_000


class DesignSpaceError(Exception):
    """A design space is too large to enumerate eagerly."""


class UnitKind(str, Enum):
    CPU = "cpu"
    GPU = "gpu"
    NPU = "npu"
    OTHER = "other"


@dataclass(frozen=True)
class ProcessingUnit:
    """One unit of the SoC, with ``resource_count`` identical resources."""

    unit_id: str
    kind: UnitKind
    resource_count: int

    def __post_init__(self) -> None:
        if not self.unit_id or any(ch.isspace() for ch in self.unit_id):
            raise ValueError(f"unit_id must be a non-empty token, got {self.unit_id!r}")
        if not isinstance(self.kind, UnitKind):
            object.__setattr__(self, "kind", UnitKind(self.kind))
        if not isinstance(self.resource_count, int) or self.resource_count < 1:
            raise ValueError(
                f"resource_count must be an integer >= 1, got {self.resource_count!r}"
            )


@dataclass(frozen=True)
class Platform:
    """Units in declaration order plus the number of model partitions.

    The declaration order is significant: variant and mapping enumeration is
    lexicographic over it, so reports are reproducible only relative to the
    order stated in the platform file.
    """

    units: tuple[ProcessingUnit, ...]
    partition_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))
        if not self.units:
            raise ValueError("platform needs at least one processing unit")
        ids = [u.unit_id for u in self.units]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate unit ids: {ids}")
        if not isinstance(self.partition_count, int) or self.partition_count < 1:
            raise ValueError(
                f"partition_count must be an integer >= 1, got {self.partition_count!r}"
            )

    @property
    def unit_ids(self) -> tuple[str, ...]:
        return tuple(u.unit_id for u in self.units)

    def unit_index(self, unit_id: str) -> int:
        for i, u in enumerate(self.units):
            if u.unit_id == unit_id:
                return i
        raise ValueError(f"unknown unit id {unit_id!r}; known: {list(self.unit_ids)}")


@dataclass(frozen=True)
class DesignVariant:
    """Per-unit resource allocation, aligned with ``Platform.units``."""

    allocation: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "allocation", tuple(self.allocation))
        if not self.allocation:
            raise ValueError("allocation must not be empty")
        for count in self.allocation:
            if not isinstance(count, int) or count < 1:
                raise ValueError(f"allocation entries must be integers >= 1, got {self.allocation!r}")


@dataclass(frozen=True)
class Mapping:
    """Partition-to-unit assignment; entry j is the unit index running partition j.

    By convention partition 0 is the drafter and partition 1 the target.
    """

    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignment", tuple(self.assignment))
        if not self.assignment:
            raise ValueError("assignment must not be empty")
        for idx in self.assignment:
            if not isinstance(idx, int) or idx < 0:
                raise ValueError(f"assignment entries must be integers >= 0, got {self.assignment!r}")

    @property
    def is_homogeneous(self) -> bool:
        return len(set(self.assignment)) == 1


def variant_count(platform: Platform) -> int:
    """Number of design variants, the product of per-unit resource counts."""
    return math.prod(u.resource_count for u in platform.units)


def search_space_size(platform: Platform) -> int:
    """Total (variant, mapping) pairs: variant_count * N ** partition_count."""
    n_units = len(platform.units)
    return variant_count(platform) * n_units**platform.partition_count


def _check_enumerable(count: int, what: str) -> None:
    if count > ENUMERATION_LIMIT:
        raise DesignSpaceError(
            f"{what} has {count} entries, above the enumeration limit {ENUMERATION_LIMIT}"
        )


def enumerate_variants(platform: Platform) -> list[DesignVariant]:
    """All variants in lexicographic allocation order, smallest first."""
    _check_enumerable(variant_count(platform), "variant space")
    ranges = [range(1, u.resource_count + 1) for u in platform.units]
    return [DesignVariant(alloc) for alloc in product(*ranges)]


def enumerate_mappings(platform: Platform) -> list[Mapping]:
    """All N ** partition_count mappings in lexicographic order."""
    n_units = len(platform.units)
    _check_enumerable(n_units**platform.partition_count, "mapping space")
    return [
        Mapping(assignment)
        for assignment in product(range(n_units), repeat=platform.partition_count)
    ]


def validate_variant(platform: Platform, variant: DesignVariant) -> None:
    """Check a variant against the platform's unit count and resource bounds."""
    if len(variant.allocation) != len(platform.units):
        raise ValueError(
            f"allocation length {len(variant.allocation)} does not match "
            f"{len(platform.units)} platform units"
        )
    for unit, count in zip(platform.units, variant.allocation):
        if count > unit.resource_count:
            raise ValueError(
                f"allocation {count} exceeds {unit.unit_id}'s resource_count {unit.resource_count}"
            )


def validate_mapping(platform: Platform, mapping: Mapping) -> None:
    """Check a mapping against the platform's partition and unit counts."""
    if len(mapping.assignment) != platform.partition_count:
        raise ValueError(
            f"assignment length {len(mapping.assignment)} does not match "
            f"partition_count {platform.partition_count}"
        )
    n_units = len(platform.units)
    for idx in mapping.assignment:
        if idx >= n_units:
            raise ValueError(f"unit index {idx} out of range for {n_units} units")
