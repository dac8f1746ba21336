"""Line-oriented text formats for platforms, profiles, traces, and results.

Every file starts with a header line ``#format <kind> v1``. After it, each
non-empty line is either a comment (leading ``#``) or one record: whitespace
separated ``key=value`` fields, with double quotes around values that contain
spaces. The formats are deliberately diff- and grep-friendly; rewriting the
same data produces byte-identical files.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acceptance import AcceptanceTrace
from .design_space import DesignVariant, Mapping, Platform, ProcessingUnit, UnitKind
from .planner import PlanDecision
from .profiles import LatencyProfile, LatencySample, ModelRole, ProfileKey
from .simulator import SweepCell

__all__ = [
    "FormatError",
    "Record",
    "WorkspaceConfig",
    "read_records",
    "load_platform",
    "load_profiles",
    "load_traces",
    "load_workspace",
    "load_matrix",
    "write_plan_records",
    "parse_plan_records",
    "plan_record_fields",
    "write_alpha_samples",
    "write_sweep_records",
    "sweep_record_fields",
    "render_record",
    "write_lines",
]

FORMAT_VERSION = "v1"


class FormatError(Exception):
    """A structured text file is malformed; the message names file and line."""

    def __init__(self, path: Path | str, line_no: int | None, message: str):
        self.path = str(path)
        self.line_no = line_no
        where = f"{self.path}:{line_no}" if line_no is not None else self.path
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Record:
    line_no: int
    fields: dict[str, str]


def _quote(value: str) -> str:
    if value and not any(ch.isspace() for ch in value) and '"' not in value and "\\" not in value:
        return value
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def render_record(fields: list[tuple[str, str]]) -> str:
    return " ".join(f"{key}={_quote(value)}" for key, value in fields)


def read_records(path: Path | str, kind: str) -> list[Record]:
    """Parse a record file, checking the format header for ``kind``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError(path, None, "file not found") from None
    lines = text.splitlines()
    expected = f"#format {kind} {FORMAT_VERSION}"
    header_seen = False
    records: list[Record] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if not header_seen:
            if line != expected:
                raise FormatError(path, line_no, f"expected header {expected!r}, got {line!r}")
            header_seen = True
            continue
        if line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line)
        except ValueError as err:
            raise FormatError(path, line_no, f"unparseable record: {err}") from None
        fields: dict[str, str] = {}
        for token in tokens:
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise FormatError(path, line_no, f"field {token!r} is not key=value")
            if key in fields:
                raise FormatError(path, line_no, f"duplicate field {key!r}")
            fields[key] = value
        records.append(Record(line_no, fields))
    if not header_seen:
        raise FormatError(path, None, f"missing header {expected!r}")
    return records


def write_lines(path: Path | str, lines: list[str]) -> None:
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")


def _require(record: Record, path: Path | str, *keys: str) -> list[str]:
    missing = [k for k in keys if k not in record.fields]
    if missing:
        raise FormatError(path, record.line_no, f"missing fields: {missing}")
    extra = sorted(set(record.fields) - set(keys))
    if extra:
        raise FormatError(path, record.line_no, f"unknown fields: {extra}")
    return [record.fields[k] for k in keys]


def _parse_int(value: str, what: str, path: Path | str, line_no: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise FormatError(path, line_no, f"{what} must be an integer, got {value!r}") from None


def _parse_float(value: str, what: str, path: Path | str, line_no: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise FormatError(path, line_no, f"{what} must be a number, got {value!r}") from None


def _fmt_float(value: float) -> str:
    return repr(float(value))


# -- platform ---------------------------------------------------------------


def load_platform(path: Path | str) -> Platform:
    """Platform file: one partition_count record plus one record per unit."""
    records = read_records(path, "platform")
    partition_count: int | None = None
    units: list[ProcessingUnit] = []
    for record in records:
        if "partition_count" in record.fields:
            (value,) = _require(record, path, "partition_count")
            if partition_count is not None:
                raise FormatError(path, record.line_no, "duplicate partition_count")
            partition_count = _parse_int(value, "partition_count", path, record.line_no)
            continue
        unit_id, kind, resources = _require(record, path, "unit_id", "kind", "resource_count")
        try:
            unit = ProcessingUnit(
                unit_id,
                UnitKind(kind),
                _parse_int(resources, "resource_count", path, record.line_no),
            )
        except ValueError as err:
            raise FormatError(path, record.line_no, str(err)) from None
        units.append(unit)
    if partition_count is None:
        raise FormatError(path, None, "missing partition_count record")
    try:
        return Platform(tuple(units), partition_count)
    except ValueError as err:
        raise FormatError(path, None, str(err)) from None


# -- profiles ---------------------------------------------------------------


def load_profiles(path: Path | str) -> tuple[dict[ProfileKey, LatencyProfile], list[str]]:
    """Profile file: one latency measurement per record, grouped by key.

    Duplicate (key, seq_len) pairs are an error; latencies that fall as
    seq_len grows are kept but reported in the warnings list.
    """
    records = read_records(path, "profiles")
    grouped: dict[ProfileKey, dict[int, float]] = {}
    order: list[ProfileKey] = []
    for record in records:
        role, unit_id, allocation, quant, seq_len, latency = _require(
            record, path, "model_role", "unit_id", "allocation", "quantization", "seq_len", "latency_ms"
        )
        try:
            key = ProfileKey(
                ModelRole(role),
                unit_id,
                _parse_int(allocation, "allocation", path, record.line_no),
                quant,
            )
            sample = LatencySample(
                _parse_int(seq_len, "seq_len", path, record.line_no),
                _parse_float(latency, "latency_ms", path, record.line_no),
            )
        except ValueError as err:
            raise FormatError(path, record.line_no, str(err)) from None
        if key not in grouped:
            order.append(key)
        samples = grouped.setdefault(key, {})
        if sample.seq_len in samples:
            raise FormatError(
                path,
                record.line_no,
                f"duplicate seq_len {sample.seq_len} for profile "
                f"({key.role.value}, {key.unit_id}, {key.allocation}, {key.quantization})",
            )
        samples[sample.seq_len] = sample.latency_ms

    profiles: dict[ProfileKey, LatencyProfile] = {}
    warnings: list[str] = []
    for key in order:
        samples = grouped[key]
        try:
            profile = LatencyProfile.from_points(
                key.role, key.unit_id, key.allocation, key.quantization, sorted(samples.items())
            )
        except ValueError as err:
            raise FormatError(path, None, str(err)) from None
        for prev, cur in zip(profile.samples, profile.samples[1:]):
            if cur.latency_ms < prev.latency_ms:
                warnings.append(
                    f"profile ({key.role.value}, {key.unit_id}, {key.allocation}, "
                    f"{key.quantization}): latency falls from {prev.latency_ms} to "
                    f"{cur.latency_ms} between seq_len {prev.seq_len} and {cur.seq_len}"
                )
        profiles[key] = profile
    return profiles, warnings


# -- traces -----------------------------------------------------------------


def load_traces(path: Path | str) -> list[AcceptanceTrace]:
    """Trace file: per-sample draft/verify counts, sample_id unique per task."""
    records = read_records(path, "traces")
    traces: list[AcceptanceTrace] = []
    seen: set[tuple[str, str]] = set()
    for record in records:
        task, sample_id, config, drafted, accepted = _require(
            record, path, "task", "sample_id", "config", "drafted", "accepted"
        )
        try:
            trace = AcceptanceTrace(
                task,
                sample_id,
                config,
                _parse_int(drafted, "drafted", path, record.line_no),
                _parse_int(accepted, "accepted", path, record.line_no),
            )
        except ValueError as err:
            raise FormatError(path, record.line_no, str(err)) from None
        ident = (trace.task, trace.sample_id)
        if ident in seen:
            raise FormatError(
                path, record.line_no, f"duplicate sample_id {sample_id!r} within task {task!r}"
            )
        seen.add(ident)
        traces.append(trace)
    return traces


# -- workspace --------------------------------------------------------------


@dataclass(frozen=True)
class WorkspaceConfig:
    """Paths and knobs shared by all CLI commands.

    Relative paths in the workspace file resolve against the file's own
    directory, so a checked-in workspace works from any working directory.
    """

    platform_file: Path
    profiles_file: Path
    traces_file: Path
    output_dir: Path
    seq_len: int = 63
    alpha_percentile: float = 90.0
    gamma_max: int = 16
    min_speedup: float = 1.05
    heterogeneity_margin: float = 0.05
    seed: int = 1234
    task: str | None = None
    alpha_config: str = "fp16/w8a8"
    drafter_quantization: str = "fp16"
    target_quantization: str = "w8a8"

    def __post_init__(self) -> None:
        for name in ("platform_file", "profiles_file", "traces_file", "output_dir"):
            object.__setattr__(self, name, Path(getattr(self, name)))
        if not isinstance(self.seq_len, int) or self.seq_len < 1:
            raise ValueError(f"seq_len must be an integer >= 1, got {self.seq_len!r}")
        if not 0.0 < float(self.alpha_percentile) <= 100.0:
            raise ValueError(
                f"alpha_percentile must lie in (0, 100], got {self.alpha_percentile!r}"
            )
        object.__setattr__(self, "alpha_percentile", float(self.alpha_percentile))
        if not isinstance(self.gamma_max, int) or self.gamma_max < 1:
            raise ValueError(f"gamma_max must be an integer >= 1, got {self.gamma_max!r}")
        if float(self.min_speedup) < 1.0:
            raise ValueError(f"min_speedup must be >= 1, got {self.min_speedup!r}")
        object.__setattr__(self, "min_speedup", float(self.min_speedup))
        if float(self.heterogeneity_margin) < 0.0:
            raise ValueError(
                f"heterogeneity_margin must be >= 0, got {self.heterogeneity_margin!r}"
            )
        object.__setattr__(self, "heterogeneity_margin", float(self.heterogeneity_margin))
        if not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")

    def require_input_files(self) -> None:
        """Every command checks all inputs up front, even ones it may not read."""
        for name in ("platform_file", "profiles_file", "traces_file"):
            p: Path = getattr(self, name)
            if not p.is_file():
                raise ValueError(f"{name} does not exist: {p}")


_WORKSPACE_PATHS = ("platform_file", "profiles_file", "traces_file", "output_dir")
_WORKSPACE_KEYS = _WORKSPACE_PATHS + (
    "seq_len",
    "alpha_percentile",
    "gamma_max",
    "min_speedup",
    "heterogeneity_margin",
    "seed",
    "task",
    "alpha_config",
    "drafter_quantization",
    "target_quantization",
)


def load_workspace(path: Path | str) -> WorkspaceConfig:
    """Workspace file: one key=value record per line, all keys optional except paths."""
    path = Path(path)
    records = read_records(path, "workspace")
    raw: dict[str, str] = {}
    for record in records:
        if len(record.fields) != 1:
            raise FormatError(path, record.line_no, "workspace records hold exactly one key=value")
        ((key, value),) = record.fields.items()
        if key not in _WORKSPACE_KEYS:
            raise FormatError(path, record.line_no, f"unknown workspace key {key!r}")
        if key in raw:
            raise FormatError(path, record.line_no, f"duplicate workspace key {key!r}")
        raw[key] = value
    missing = [k for k in _WORKSPACE_PATHS if k not in raw]
    if missing:
        raise FormatError(path, None, f"missing workspace keys: {missing}")

    base = path.resolve().parent
    kwargs: dict[str, object] = {}
    for key in _WORKSPACE_PATHS:
        kwargs[key] = (base / raw[key]).resolve()
    for key, kind in (
        ("seq_len", int),
        ("alpha_percentile", float),
        ("gamma_max", int),
        ("min_speedup", float),
        ("heterogeneity_margin", float),
        ("seed", int),
    ):
        if key in raw:
            try:
                kwargs[key] = kind(raw[key])
            except ValueError:
                raise FormatError(path, None, f"workspace key {key} must be {kind.__name__}") from None
    for key in ("task", "alpha_config", "drafter_quantization", "target_quantization"):
        if key in raw:
            kwargs[key] = raw[key]
    try:
        return WorkspaceConfig(**kwargs)  # type: ignore[arg-type]
    except ValueError as err:
        raise FormatError(path, None, str(err)) from None


# -- numeric grids ----------------------------------------------------------


def load_matrix(path: Path | str) -> np.ndarray:
    """Plain numeric grid: one row of whitespace-separated numbers per line."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FormatError(path, None, "file not found") from None
    expected = f"#format matrix {FORMAT_VERSION}"
    rows: list[list[float]] = []
    header_seen = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not header_seen:
            if line != expected:
                raise FormatError(path, line_no, f"expected header {expected!r}, got {line!r}")
            header_seen = True
            continue
        if line.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError:
            raise FormatError(path, line_no, f"non-numeric entry in row: {line!r}") from None
        if rows and len(row) != len(rows[0]):
            raise FormatError(path, line_no, f"row length {len(row)} does not match {len(rows[0])}")
        rows.append(row)
    if not header_seen:
        raise FormatError(path, None, f"missing header {expected!r}")
    if not rows:
        raise FormatError(path, None, "matrix has no rows")
    return np.array(rows, dtype=float)


# -- plan records -----------------------------------------------------------

_PLAN_FIELDS = (
    "variant_index",
    "allocation",
    "use_speculation",
    "gamma",
    "mapping",
    "heterogeneous",
    "predicted_speedup",
    "notes",
)


def _yes_no(flag: bool) -> str:
    return "yes" if flag else "no"


def plan_record_fields(decision: PlanDecision, platform: Platform) -> list[tuple[str, str]]:
    if decision.mapping is None:
        mapping_text = "none"
    else:
        mapping_text = ",".join(
            platform.units[idx].unit_id for idx in decision.mapping.assignment
        )
    if decision.heterogeneous is None:
        hetero_text = "na"
    else:
        hetero_text = _yes_no(decision.heterogeneous)
    for note in decision.notes:
        if "|" in note:
            raise ValueError(f"notes must not contain '|': {note!r}")
    return [
        ("variant_index", str(decision.variant_index)),
        ("allocation", ",".join(str(n) for n in decision.variant.allocation)),
        ("use_speculation", _yes_no(decision.use_speculation)),
        ("gamma", str(decision.gamma)),
        ("mapping", mapping_text),
        ("heterogeneous", hetero_text),
        ("predicted_speedup", _fmt_float(decision.predicted_speedup)),
        ("notes", "|".join(decision.notes)),
    ]


def write_plan_records(path: Path | str, decisions: list[PlanDecision], platform: Platform) -> None:
    lines = [f"#format plan {FORMAT_VERSION}"]
    for decision in decisions:
        lines.append(render_record(plan_record_fields(decision, platform)))
    write_lines(path, lines)


def parse_plan_records(path: Path | str, platform: Platform) -> list[PlanDecision]:
    records = read_records(path, "plan")
    decisions: list[PlanDecision] = []
    for record in records:
        values = dict(zip(_PLAN_FIELDS, _require(record, path, *_PLAN_FIELDS)))
        line_no = record.line_no
        allocation = tuple(
            _parse_int(tok, "allocation entry", path, line_no)
            for tok in values["allocation"].split(",")
        )
        mapping: Mapping | None = None
        if values["mapping"] != "none":
            try:
                mapping = Mapping(
                    tuple(platform.unit_index(uid) for uid in values["mapping"].split(","))
                )
            except ValueError as err:
                raise FormatError(path, line_no, str(err)) from None
        hetero_map = {"yes": True, "no": False, "na": None}
        if values["heterogeneous"] not in hetero_map:
            raise FormatError(path, line_no, f"heterogeneous must be yes/no/na, got {values['heterogeneous']!r}")
        try:
            decisions.append(
                PlanDecision(
                    variant_index=_parse_int(values["variant_index"], "variant_index", path, line_no),
                    variant=DesignVariant(allocation),
                    use_speculation=values["use_speculation"] == "yes",
                    gamma=_parse_int(values["gamma"], "gamma", path, line_no),
                    mapping=mapping,
                    heterogeneous=hetero_map[values["heterogeneous"]],
                    predicted_speedup=_parse_float(values["predicted_speedup"], "predicted_speedup", path, line_no),
                    notes=tuple(values["notes"].split("|")) if values["notes"] else (),
                )
            )
        except ValueError as err:
            raise FormatError(path, line_no, str(err)) from None
    return decisions


# -- alpha samples and sweep records ----------------------------------------


def write_alpha_samples(path: Path | str, traces: list[AcceptanceTrace]) -> None:
    lines = [f"#format alphas {FORMAT_VERSION}"]
    for trace in traces:
        lines.append(
            render_record(
                [
                    ("task", trace.task),
                    ("sample_id", trace.sample_id),
                    ("config", trace.config),
                    ("alpha", _fmt_float(trace.accepted / trace.drafted)),
                ]
            )
        )
    write_lines(path, lines)


def sweep_record_fields(cell: SweepCell) -> list[tuple[str, str]]:
    return [
        ("alpha", _fmt_float(cell.alpha)),
        ("gamma", str(cell.gamma)),
        ("c", _fmt_float(cell.c)),
        ("predicted", _fmt_float(cell.predicted)),
        ("measured", _fmt_float(cell.measured)),
        ("stderr", "na" if cell.stderr is None else _fmt_float(cell.stderr)),
    ]


def write_sweep_records(path: Path | str, cells: list[SweepCell]) -> None:
    lines = [f"#format sweep {FORMAT_VERSION}"]
    for cell in cells:
        lines.append(render_record(sweep_record_fields(cell)))
    write_lines(path, lines)
