from __future__ import annotations

import pytest

from specplan.acceptance import AcceptanceTrace
from specplan.design_space import DesignVariant, Mapping, Platform, ProcessingUnit, UnitKind
from specplan.formats import (
    FormatError,
    WorkspaceConfig,
    load_matrix,
    load_platform,
    load_profiles,
    load_traces,
    load_workspace,
    parse_plan_records,
    plan_record_fields,
    read_records,
    render_record,
    write_alpha_samples,
    write_lines,
    write_plan_records,
    write_sweep_records,
)
from specplan.planner import PlanDecision
from specplan.profiles import ModelRole, ProfileKey, latency_at
from specplan.simulator import SweepCell

from conftest import DEMO_DIR

PLATFORM = Platform(
    (ProcessingUnit("cpu", UnitKind.CPU, 6), ProcessingUnit("gpu", UnitKind.GPU, 1)),
    partition_count=2,
)


def _write(tmp_path, name: str, body: str):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return path


# -- record primitives -------------------------------------------------------


def test_quoting_round_trips_awkward_values(tmp_path):
    fields = [
        ("plain", "simple"),
        ("spaced", "a b  c"),
        ("quoted", 'say "hi" there'),
        ("slashed", "back\\slash"),
        ("empty", ""),
    ]
    path = _write(tmp_path, "r.txt", "#format plan v1\n" + render_record(fields) + "\n")
    (record,) = read_records(path, "plan")
    assert record.fields == dict(fields)


def test_header_is_checked(tmp_path):
    path = _write(tmp_path, "r.txt", "#format traces v1\nk=v\n")
    with pytest.raises(FormatError, match="expected header"):
        read_records(path, "plan")
    empty = _write(tmp_path, "empty.txt", "\n\n")
    with pytest.raises(FormatError, match="missing header"):
        read_records(empty, "plan")
    with pytest.raises(FormatError, match="file not found"):
        read_records(tmp_path / "absent.txt", "plan")


def test_comments_and_blank_lines_are_skipped(tmp_path):
    path = _write(tmp_path, "r.txt", "#format plan v1\n\n# note\na=1\n\nb=2\n")
    records = read_records(path, "plan")
    assert [r.fields for r in records] == [{"a": "1"}, {"b": "2"}]
    assert [r.line_no for r in records] == [4, 6]


def test_malformed_records_report_path_and_line(tmp_path):
    bare = _write(tmp_path, "bare.txt", "#format plan v1\nfoo\n")
    with pytest.raises(FormatError, match="not key=value") as exc:
        read_records(bare, "plan")
    assert str(exc.value).startswith(f"{bare}:2:")

    dup = _write(tmp_path, "dup.txt", "#format plan v1\na=1 a=2\n")
    with pytest.raises(FormatError, match="duplicate field"):
        read_records(dup, "plan")

    unterminated = _write(tmp_path, "open.txt", '#format plan v1\na="oops\n')
    with pytest.raises(FormatError, match="unparseable record"):
        read_records(unterminated, "plan")


# -- platform ---------------------------------------------------------------


def test_load_platform_demo():
    assert load_platform(DEMO_DIR / "platform.txt") == PLATFORM


def test_load_platform_errors(tmp_path):
    no_partitions = _write(
        tmp_path, "p.txt", "#format platform v1\nunit_id=cpu kind=cpu resource_count=2\n"
    )
    with pytest.raises(FormatError, match="missing partition_count"):
        load_platform(no_partitions)

    twice = _write(
        tmp_path,
        "p2.txt",
        "#format platform v1\npartition_count=2\npartition_count=2\n"
        "unit_id=cpu kind=cpu resource_count=2\n",
    )
    with pytest.raises(FormatError, match="duplicate partition_count"):
        load_platform(twice)

    extra = _write(
        tmp_path,
        "p3.txt",
        "#format platform v1\npartition_count=2\n"
        "unit_id=cpu kind=cpu resource_count=2 color=red\n",
    )
    with pytest.raises(FormatError, match="unknown fields"):
        load_platform(extra)

    bad_count = _write(
        tmp_path,
        "p4.txt",
        "#format platform v1\npartition_count=2\nunit_id=cpu kind=cpu resource_count=x\n",
    )
    with pytest.raises(FormatError, match="must be an integer"):
        load_platform(bad_count)


# -- profiles ---------------------------------------------------------------


def test_load_profiles_demo_is_clean():
    profiles, warnings = load_profiles(DEMO_DIR / "profiles.txt")
    assert warnings == []
    assert len(profiles) == 14
    key = ProfileKey(ModelRole.DRAFTER, "gpu", 1, "fp16")
    assert latency_at(profiles[key], 63) == pytest.approx(35.78, abs=1e-12)
    key = ProfileKey(ModelRole.TARGET, "cpu", 1, "w8a8")
    assert latency_at(profiles[key], 63) == pytest.approx(100.0, abs=1e-12)


def _profile_line(seq_len: int, latency: float) -> str:
    return (
        f"model_role=target unit_id=cpu allocation=1 quantization=w8a8 "
        f"seq_len={seq_len} latency_ms={latency}\n"
    )


def test_load_profiles_duplicate_point(tmp_path):
    body = "#format profiles v1\n" + _profile_line(16, 90.0) + _profile_line(16, 95.0)
    path = _write(tmp_path, "prof.txt", body)
    with pytest.raises(FormatError, match="duplicate seq_len 16"):
        load_profiles(path)


def test_load_profiles_warns_on_falling_latency(tmp_path):
    body = "#format profiles v1\n" + _profile_line(16, 90.0) + _profile_line(32, 80.0)
    profiles, warnings = load_profiles(_write(tmp_path, "prof.txt", body))
    assert len(profiles) == 1
    (warning,) = warnings
    assert "latency falls from 90.0 to 80.0 between seq_len 16 and 32" in warning


# -- traces -----------------------------------------------------------------


def test_load_traces_demo():
    traces = load_traces(DEMO_DIR / "traces.txt")
    assert len(traces) == 66
    assert {t.config for t in traces} == {"fp16/w8a8", "fp16/fp16", "w8a8/w8a8"}
    assert all(t.drafted == 100 for t in traces)


def test_load_traces_duplicate_sample(tmp_path):
    line = "task=t sample_id=s1 config=a/b drafted=10 accepted=5\n"
    path = _write(tmp_path, "tr.txt", "#format traces v1\n" + line + line)
    with pytest.raises(FormatError, match="duplicate sample_id"):
        load_traces(path)
    # the same sample_id under a different task is a different sample
    other = "task=u sample_id=s1 config=a/b drafted=10 accepted=5\n"
    traces = load_traces(_write(tmp_path, "tr2.txt", "#format traces v1\n" + line + other))
    assert len(traces) == 2


def test_load_traces_reports_count_errors(tmp_path):
    bad = "task=t sample_id=s1 config=a/b drafted=10 accepted=11\n"
    with pytest.raises(FormatError, match="accepted"):
        load_traces(_write(tmp_path, "tr.txt", "#format traces v1\n" + bad))


# -- workspace --------------------------------------------------------------


def test_load_workspace_demo():
    ws = load_workspace(DEMO_DIR / "workspace.txt")
    assert ws.platform_file == (DEMO_DIR / "platform.txt").resolve()
    assert ws.output_dir == (DEMO_DIR / "out").resolve()
    assert ws.seq_len == 63
    assert ws.alpha_percentile == 90.0
    assert ws.min_speedup == 1.0
    assert ws.task == "translation"
    assert ws.alpha_config == "fp16/w8a8"
    ws.require_input_files()


_WS_BODY = (
    "#format workspace v1\n"
    "platform_file=platform.txt\n"
    "profiles_file=profiles.txt\n"
    "traces_file=traces.txt\n"
    "output_dir=out\n"
)


def test_load_workspace_resolves_relative_paths(tmp_path):
    nested = tmp_path / "nested"
    nested.mkdir()
    ws = load_workspace(_write(nested, "ws.txt", _WS_BODY))
    assert ws.platform_file == (nested / "platform.txt").resolve()
    assert ws.output_dir == (nested / "out").resolve()
    # defaults apply for everything else
    assert ws.seq_len == 63 and ws.gamma_max == 16 and ws.seed == 1234
    assert ws.min_speedup == 1.05 and ws.task is None
    with pytest.raises(ValueError, match="platform_file does not exist"):
        ws.require_input_files()


def test_load_workspace_errors(tmp_path):
    with pytest.raises(FormatError, match="missing workspace keys"):
        load_workspace(_write(tmp_path, "w1.txt", "#format workspace v1\nplatform_file=p\n"))
    with pytest.raises(FormatError, match="unknown workspace key"):
        load_workspace(_write(tmp_path, "w2.txt", _WS_BODY + "bogus=1\n"))
    with pytest.raises(FormatError, match="duplicate workspace key"):
        load_workspace(_write(tmp_path, "w3.txt", _WS_BODY + "seed=1\nseed=2\n"))
    with pytest.raises(FormatError, match="must be int"):
        load_workspace(_write(tmp_path, "w4.txt", _WS_BODY + "seq_len=abc\n"))
    with pytest.raises(FormatError, match="exactly one key=value"):
        load_workspace(_write(tmp_path, "w5.txt", _WS_BODY + "seed=1 task=t\n"))
    with pytest.raises(FormatError, match="alpha_percentile"):
        load_workspace(_write(tmp_path, "w6.txt", _WS_BODY + "alpha_percentile=0\n"))


def test_workspace_config_validation(tmp_path):
    with pytest.raises(ValueError, match="min_speedup"):
        WorkspaceConfig(tmp_path, tmp_path, tmp_path, tmp_path, min_speedup=0.9)
    with pytest.raises(ValueError, match="seq_len"):
        WorkspaceConfig(tmp_path, tmp_path, tmp_path, tmp_path, seq_len=0)


# -- matrices ---------------------------------------------------------------


def test_load_matrix_demo_chains():
    for name in ("draft_chain.txt", "target_chain.txt"):
        matrix = load_matrix(DEMO_DIR / name)
        assert matrix.shape == (3, 3)
        assert matrix.sum(axis=1) == pytest.approx([1.0, 1.0, 1.0], abs=1e-12)


def test_load_matrix_errors(tmp_path):
    with pytest.raises(FormatError, match="row length 2 does not match 3"):
        load_matrix(_write(tmp_path, "m1.txt", "#format matrix v1\n1 2 3\n4 5\n"))
    with pytest.raises(FormatError, match="non-numeric"):
        load_matrix(_write(tmp_path, "m2.txt", "#format matrix v1\n1 x\n"))
    with pytest.raises(FormatError, match="missing header"):
        load_matrix(_write(tmp_path, "m3.txt", ""))
    with pytest.raises(FormatError, match="no rows"):
        load_matrix(_write(tmp_path, "m4.txt", "#format matrix v1\n# only comments\n"))


# -- plan records -----------------------------------------------------------


def _decisions() -> list[PlanDecision]:
    return [
        PlanDecision(
            1,
            DesignVariant((2, 1)),
            True,
            4,
            Mapping((1, 0)),
            True,
            1.6843945376768676,
            (),
        ),
        PlanDecision(
            2,
            DesignVariant((3, 1)),
            False,
            0,
            None,
            None,
            1.0,
            ("every mapping has a cost ratio at or above alpha",),
        ),
        PlanDecision(
            3,
            DesignVariant((1, 1)),
            True,
            1,
            Mapping((0, 0)),
            False,
            1.0200246953,
            (
                "heterogeneous gain 0.0044 below margin 0.0500; homogeneous mapping kept",
                "second note with spaces",
            ),
        ),
    ]


def test_plan_records_round_trip(tmp_path):
    path = tmp_path / "plan.txt"
    decisions = _decisions()
    write_plan_records(path, decisions, PLATFORM)
    assert parse_plan_records(path, PLATFORM) == decisions


def test_plan_record_fields_shape():
    fields = dict(plan_record_fields(_decisions()[0], PLATFORM))
    assert fields["mapping"] == "gpu,cpu"
    assert fields["allocation"] == "2,1"
    assert fields["heterogeneous"] == "yes"
    assert fields["predicted_speedup"] == repr(1.6843945376768676)
    fields = dict(plan_record_fields(_decisions()[1], PLATFORM))
    assert fields["mapping"] == "none" and fields["heterogeneous"] == "na"


def test_plan_record_rejects_pipe_in_notes():
    decision = PlanDecision(
        1, DesignVariant((1,)), False, 0, None, None, 1.0, ("a|b",)
    )
    with pytest.raises(ValueError, match=r"notes must not contain '\|'"):
        plan_record_fields(decision, PLATFORM)


def test_parse_plan_records_unknown_unit(tmp_path):
    path = tmp_path / "plan.txt"
    write_plan_records(path, _decisions(), PLATFORM)
    other = Platform((ProcessingUnit("npu", UnitKind.NPU, 1),), partition_count=2)
    with pytest.raises(FormatError):
        parse_plan_records(path, other)


# -- alpha samples and sweep records ----------------------------------------


def test_write_alpha_samples(tmp_path):
    path = tmp_path / "alphas.txt"
    traces = [
        AcceptanceTrace("t", "s1", "fp16/w8a8", 100, 17),
        AcceptanceTrace("t", "s2", "fp16/w8a8", 100, 90),
    ]
    write_alpha_samples(path, traces)
    records = read_records(path, "alphas")
    assert [r.fields["alpha"] for r in records] == [repr(0.17), repr(0.9)]
    assert records[0].fields["sample_id"] == "s1"


def test_write_sweep_records(tmp_path):
    path = tmp_path / "sweep.txt"
    cells = [
        SweepCell(0.5, 3, 0.4, 1.2, 1.19, 0.01),
        SweepCell(0.5, 3, 0.4, 1.2, 1.19, None),
    ]
    write_sweep_records(path, cells)
    records = read_records(path, "sweep")
    assert records[0].fields["stderr"] == repr(0.01)
    assert records[1].fields["stderr"] == "na"
    assert records[0].fields["alpha"] == repr(0.5)


def test_write_lines_uses_newline_terminators(tmp_path):
    path = tmp_path / "lines.txt"
    write_lines(path, ["a", "b"])
    assert path.read_bytes() == b"a\nb\n"
