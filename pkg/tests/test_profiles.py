from __future__ import annotations

import pytest

from specplan.design_space import Platform, ProcessingUnit, UnitKind
from specplan.profiles import (
    LatencyProfile,
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


def _profile(role, unit_id, points, allocation=1, quantization="fp16"):
    return LatencyProfile.from_points(role, unit_id, allocation, quantization, points)


def test_latency_exact_at_samples_linear_between():
    prof = _profile("target", "cpu", [(10, 10.0), (20, 30.0), (40, 50.0)])
    assert latency_at(prof, 10) == 10.0
    assert latency_at(prof, 20) == 30.0
    assert latency_at(prof, 40) == 50.0
    assert latency_at(prof, 15) == 20.0
    assert latency_at(prof, 30) == 40.0


def test_latency_refuses_extrapolation():
    prof = _profile("target", "cpu", [(10, 10.0), (20, 30.0)])
    with pytest.raises(RangeError, match=r"outside measured range \[10, 20\]"):
        latency_at(prof, 21)
    with pytest.raises(RangeError):
        latency_at(prof, 9)
    with pytest.raises(ValueError):
        latency_at(prof, 0)


def test_from_points_sorts_and_rejects_duplicates():
    prof = _profile("drafter", "gpu", [(30, 3.0), (10, 1.0), (20, 2.0)])
    assert [s.seq_len for s in prof.samples] == [10, 20, 30]
    with pytest.raises(ValueError, match="strictly increasing"):
        _profile("drafter", "gpu", [(10, 1.0), (10, 2.0)])


def test_profile_validation():
    with pytest.raises(ValueError):
        _profile("drafter", "gpu", [])
    with pytest.raises(ValueError):
        _profile("drafter", "gpu", [(10, 0.0)])
    with pytest.raises(ValueError):
        _profile("drafter", "gpu", [(10, 1.0)], allocation=0)
    with pytest.raises(ValueError, match="lowercase token"):
        _profile("drafter", "gpu", [(10, 1.0)], quantization="FP16")


def test_cost_coefficient_quoted_ratio():
    draft = _profile("drafter", "gpu", [(63, 41.0)])
    target = _profile("target", "cpu", [(63, 100.0)], quantization="w8a8")
    assert cost_coefficient(draft, target, 63) == 0.41


def test_cost_coefficient_scale_invariance():
    points = [(16, 10.0), (63, 25.0), (128, 60.0)]
    draft = _profile("drafter", "cpu", points)
    target = _profile("target", "cpu", [(s, 2.0 * ms) for s, ms in points])
    scaled_d = _profile("drafter", "cpu", [(s, 8.0 * ms) for s, ms in points])
    scaled_t = _profile("target", "cpu", [(s, 16.0 * ms) for s, ms in points])
    for s in (16, 40, 63, 100, 128):
        assert cost_coefficient(draft, target, s) == cost_coefficient(scaled_d, scaled_t, s)


def test_index_profiles_rejects_duplicates():
    prof = _profile("drafter", "cpu", [(10, 1.0)])
    again = _profile("drafter", "cpu", [(10, 2.0)])
    with pytest.raises(ValueError, match="duplicate profile"):
        index_profiles([prof, again])


def _two_unit_platform() -> Platform:
    return Platform(
        (
            ProcessingUnit("cpu", UnitKind.CPU, 2),
            ProcessingUnit("gpu", UnitKind.GPU, 1),
        ),
        partition_count=2,
    )


def _full_profile_set(platform: Platform):
    profiles = []
    base = {"cpu": {1: 80.0, 2: 50.0}, "gpu": {1: 30.0}}
    target = {"cpu": {1: 100.0, 2: 60.0}, "gpu": {1: 25.0}}
    for unit in platform.units:
        for alloc in range(1, unit.resource_count + 1):
            profiles.append(
                _profile(
                    "drafter",
                    unit.unit_id,
                    [(16, base[unit.unit_id][alloc] * 0.9), (128, base[unit.unit_id][alloc] * 1.2)],
                    allocation=alloc,
                )
            )
            profiles.append(
                _profile(
                    "target",
                    unit.unit_id,
                    [(16, target[unit.unit_id][alloc] * 0.9), (128, target[unit.unit_id][alloc] * 1.2)],
                    allocation=alloc,
                    quantization="w8a8",
                )
            )
    return index_profiles(profiles)


def test_build_cost_curves_full_pairing():
    platform = _two_unit_platform()
    curves = build_cost_curves(platform, _full_profile_set(platform))
    # 2 variants x 4 mappings, enumeration order
    assert len(curves) == 8
    assert [c.variant.allocation for c in curves[:4]] == [(1, 1)] * 4
    assert [c.mapping.assignment for c in curves[:4]] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    hetero = curves[2]  # variant (1,1), drafter on gpu, target on cpu
    assert hetero.coefficient_at(16) == pytest.approx(30.0 / 100.0)
    assert hetero.coefficient_at(128) == pytest.approx(30.0 / 100.0)
    assert hetero.infeasible_lengths() == ()
    slow = curves[1]  # drafter on cpu@1, target on gpu: 80/25 > 1 everywhere
    assert slow.infeasible_lengths() == (16, 128)


def test_curve_interpolates_between_grid_points():
    platform = _two_unit_platform()
    curves = build_cost_curves(platform, _full_profile_set(platform))
    curve = curves[0]
    mid = curve.coefficient_at(72)
    lo, hi = curve.coefficient_at(16), curve.coefficient_at(128)
    assert min(lo, hi) <= mid <= max(lo, hi)
    with pytest.raises(RangeError, match="outside curve range"):
        curve.coefficient_at(129)


def test_build_cost_curves_missing_profile():
    platform = _two_unit_platform()
    profiles = _full_profile_set(platform)
    del profiles[ProfileKey(ModelRole.DRAFTER, "gpu", 1, "fp16")]
    with pytest.raises(MissingProfileError, match="unit=gpu"):
        build_cost_curves(platform, profiles)


def test_build_cost_curves_disjoint_ranges():
    platform = Platform((ProcessingUnit("cpu", UnitKind.CPU, 1),), partition_count=2)
    profiles = index_profiles(
        [
            _profile("drafter", "cpu", [(10, 5.0), (20, 6.0)]),
            _profile("target", "cpu", [(30, 9.0), (40, 10.0)], quantization="w8a8"),
        ]
    )
    with pytest.raises(RangeError, match="no overlapping"):
        build_cost_curves(platform, profiles)


def test_single_partition_platform_uses_one_unit_for_both_roles():
    platform = Platform((ProcessingUnit("cpu", UnitKind.CPU, 1),), partition_count=1)
    profiles = index_profiles(
        [
            _profile("drafter", "cpu", [(10, 5.0), (20, 6.0)]),
            _profile("target", "cpu", [(10, 10.0), (20, 24.0)], quantization="w8a8"),
        ]
    )
    curves = build_cost_curves(platform, profiles)
    assert len(curves) == 1
    assert curves[0].coefficient_at(10) == 0.5
    assert curves[0].coefficient_at(20) == 0.25


def test_merged_grid_respects_range_intersection():
    platform = Platform((ProcessingUnit("cpu", UnitKind.CPU, 1),), partition_count=2)
    profiles = index_profiles(
        [
            _profile("drafter", "cpu", [(10, 5.0), (32, 6.0), (60, 8.0)]),
            _profile("target", "cpu", [(20, 10.0), (48, 12.0), (90, 16.0)], quantization="w8a8"),
        ]
    )
    (curve,) = build_cost_curves(platform, profiles)
    assert [p.seq_len for p in curve.points] == [20, 32, 48, 60]


def test_sequence_regime_threshold():
    model = ModelSpec("drafter-160m", hidden_dim=64, quantization="fp16")
    assert sequence_regime(model, 63) == "short"
    assert sequence_regime(model, 64) == "long"
    with pytest.raises(ValueError):
        sequence_regime(model, 0)


def test_model_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec("", 64, "fp16")
    with pytest.raises(ValueError):
        ModelSpec("m", 0, "fp16")
    with pytest.raises(ValueError):
        ModelSpec("m", 64, "FP16")
