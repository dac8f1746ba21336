from __future__ import annotations

import pytest

from specplan.design_space import (
    DesignSpaceError,
    DesignVariant,
    Mapping,
    Platform,
    ProcessingUnit,
    UnitKind,
    enumerate_mappings,
    enumerate_variants,
    search_space_size,
    validate_mapping,
    validate_variant,
    variant_count,
)


def _soc() -> Platform:
    return Platform(
        (
            ProcessingUnit("cpu", UnitKind.CPU, 6),
            ProcessingUnit("gpu", UnitKind.GPU, 1),
        ),
        partition_count=2,
    )


def test_counts_for_cpu6_gpu1():
    platform = _soc()
    assert variant_count(platform) == 6
    assert search_space_size(platform) == 24
    assert len(enumerate_variants(platform)) == 6
    assert len(enumerate_mappings(platform)) == 4


def test_variant_enumeration_is_lexicographic():
    allocations = [v.allocation for v in enumerate_variants(_soc())]
    assert allocations == [(k, 1) for k in range(1, 7)]


def test_mapping_enumeration_is_lexicographic():
    assignments = [m.assignment for m in enumerate_mappings(_soc())]
    assert assignments == [(0, 0), (0, 1), (1, 0), (1, 1)]
    three = Platform(
        (
            ProcessingUnit("a", UnitKind.CPU, 1),
            ProcessingUnit("b", UnitKind.GPU, 1),
            ProcessingUnit("c", UnitKind.NPU, 1),
        ),
        partition_count=2,
    )
    assignments = [m.assignment for m in enumerate_mappings(three)]
    assert assignments[:4] == [(0, 0), (0, 1), (0, 2), (1, 0)]
    assert len(assignments) == 9


def test_counts_are_exact_integers():
    platform = Platform(
        tuple(ProcessingUnit(f"u{i}", UnitKind.OTHER, 10) for i in range(9)),
        partition_count=3,
    )
    assert variant_count(platform) == 10**9
    assert search_space_size(platform) == 10**9 * 9**3


def test_enumeration_limit():
    wide = Platform(
        (
            ProcessingUnit("a", UnitKind.CPU, 1001),
            ProcessingUnit("b", UnitKind.CPU, 1000),
        ),
        partition_count=2,
    )
    with pytest.raises(DesignSpaceError):
        enumerate_variants(wide)
    deep = Platform(
        (
            ProcessingUnit("a", UnitKind.CPU, 1),
            ProcessingUnit("b", UnitKind.CPU, 1),
        ),
        partition_count=21,
    )
    with pytest.raises(DesignSpaceError):
        enumerate_mappings(deep)


def test_mapping_homogeneity():
    assert Mapping((1, 1)).is_homogeneous
    assert not Mapping((0, 1)).is_homogeneous


def test_validate_variant():
    platform = _soc()
    validate_variant(platform, DesignVariant((6, 1)))
    with pytest.raises(ValueError, match="exceeds"):
        validate_variant(platform, DesignVariant((7, 1)))
    with pytest.raises(ValueError, match="length"):
        validate_variant(platform, DesignVariant((1,)))


def test_validate_mapping():
    platform = _soc()
    validate_mapping(platform, Mapping((1, 0)))
    with pytest.raises(ValueError, match="out of range"):
        validate_mapping(platform, Mapping((0, 2)))
    with pytest.raises(ValueError, match="partition_count"):
        validate_mapping(platform, Mapping((0, 1, 0)))


def test_construction_errors():
    with pytest.raises(ValueError, match="duplicate"):
        Platform(
            (
                ProcessingUnit("cpu", UnitKind.CPU, 2),
                ProcessingUnit("cpu", UnitKind.GPU, 1),
            ),
            partition_count=2,
        )
    with pytest.raises(ValueError):
        ProcessingUnit("cpu", UnitKind.CPU, 0)
    with pytest.raises(ValueError):
        ProcessingUnit("", UnitKind.CPU, 1)
    with pytest.raises(ValueError):
        DesignVariant(())
    with pytest.raises(ValueError):
        Mapping((0, -1))
    with pytest.raises(ValueError):
        Platform((), partition_count=2)


def test_unit_lookup():
    platform = _soc()
    assert platform.unit_ids == ("cpu", "gpu")
    assert platform.unit_index("gpu") == 1
    with pytest.raises(ValueError, match="unknown unit id"):
        platform.unit_index("npu")
