"""Command-line interface: ingest, alpha, plan, and simulate subcommands.

Every subcommand reads a workspace file naming the input files and planning
knobs, and writes result files into the workspace's output directory (the
SPECPLAN_OUTPUT_DIR environment variable overrides the destination). Output
is deterministic: the same workspace and flags produce byte-identical stdout
and files, so runs can be diffed.

Exit codes: 0 on success, 1 for bad usage or malformed inputs, 2 when the
inputs parse but cannot support the request (missing profiles, sequence
lengths outside the measured range, uncovered design points).
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from dataclasses import replace
from pathlib import Path

from .acceptance import distribution
from .cost_model import speedup
from .design_space import (
    DesignSpaceError,
    Mapping,
    Platform,
    enumerate_mappings,
    enumerate_variants,
    search_space_size,
    variant_count,
)
from .formats import (
    FormatError,
    WorkspaceConfig,
    load_matrix,
    load_platform,
    load_profiles,
    load_traces,
    load_workspace,
    plan_record_fields,
    render_record,
    sweep_record_fields,
    write_alpha_samples,
    write_lines,
    write_plan_records,
    write_sweep_records,
)
from .planner import CoverageError, PlanRequest, best_global, plan
from .profiles import (
    MissingProfileError,
    ModelRole,
    ProfileKey,
    RangeError,
    build_cost_curves,
    cost_coefficient,
)
from .simulator import (
    ServingOverheads,
    SimScenario,
    SweepCell,
    ToyModelSource,
    simulate_rounds,
    sweep,
)
from .toy_models import AcceptanceRule, ConvergenceError, MarkovModel, exact_mean_alpha

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1, matching the other input-error paths
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _workspace(args: argparse.Namespace) -> WorkspaceConfig:
    ws = load_workspace(args.workspace)
    override = os.environ.get("SPECPLAN_OUTPUT_DIR")
    if override:
        ws = replace(ws, output_dir=Path(override).resolve())
    ws.require_input_files()
    return ws


def _output_path(ws: WorkspaceConfig, name: str) -> Path:
    ws.output_dir.mkdir(parents=True, exist_ok=True)
    return ws.output_dir / name


def _alloc_text(allocation: tuple[int, ...]) -> str:
    return ",".join(str(n) for n in allocation)


def _mapping_text(platform: Platform, mapping: Mapping | None) -> str:
    if mapping is None:
        return "-"
    return ",".join(platform.units[idx].unit_id for idx in mapping.assignment)


# -- ingest -------------------------------------------------------------------


def _coverage_pairs(
    ws: WorkspaceConfig, platform: Platform, profiles
) -> tuple[list[str], bool]:
    """One line per (variant, mapping) pair; reports the first gap it hits."""
    lines: list[str] = []
    missing = False
    for index, variant in enumerate(enumerate_variants(platform), start=1):
        for mapping in enumerate_mappings(platform):
            d_idx = mapping.assignment[0]
            t_idx = mapping.assignment[1] if len(mapping.assignment) > 1 else d_idx
            d_key = ProfileKey(
                ModelRole.DRAFTER,
                platform.units[d_idx].unit_id,
                variant.allocation[d_idx],
                ws.drafter_quantization,
            )
            t_key = ProfileKey(
                ModelRole.TARGET,
                platform.units[t_idx].unit_id,
                variant.allocation[t_idx],
                ws.target_quantization,
            )
            prefix = (
                f"coverage variant={index} allocation={_alloc_text(variant.allocation)} "
                f"mapping={_mapping_text(platform, mapping)}"
            )
            reason = None
            for key in (d_key, t_key):
                if key not in profiles:
                    reason = str(MissingProfileError(key))
                    break
            if reason is None:
                lo = max(profiles[d_key].min_seq_len, profiles[t_key].min_seq_len)
                hi = min(profiles[d_key].max_seq_len, profiles[t_key].max_seq_len)
                if not lo <= ws.seq_len <= hi:
                    reason = f"seq_len {ws.seq_len} outside covered range [{lo}, {hi}]"
            if reason is None:
                value = cost_coefficient(profiles[d_key], profiles[t_key], ws.seq_len)
                lines.append(f"{prefix} c={value!r} status=ok")
            else:
                missing = True
                lines.append(f"{prefix} status=missing reason={shlex.quote(reason)}")
    return lines, missing


def cmd_ingest(args: argparse.Namespace) -> int:
    ws = _workspace(args)
    platform = load_platform(ws.platform_file)
    profiles, warnings = load_profiles(ws.profiles_file)
    traces = load_traces(ws.traces_file)

    units = ",".join(f"{u.unit_id}:{u.resource_count}" for u in platform.units)
    print(f"platform: units={units} partitions={platform.partition_count}")
    mappings = len(platform.units) ** platform.partition_count
    print(
        f"design space: variants={variant_count(platform)} mappings={mappings} "
        f"pairs={search_space_size(platform)}"
    )
    for key in sorted(profiles, key=lambda k: (k.role.value, k.unit_id, k.allocation, k.quantization)):
        prof = profiles[key]
        print(
            f"profile role={key.role.value} unit={key.unit_id} allocation={key.allocation} "
            f"quantization={key.quantization} seq_range=[{prof.min_seq_len},{prof.max_seq_len}] "
            f"points={len(prof.samples)}"
        )
    for warning in warnings:
        print(f"warning: {warning}")
    tasks = ",".join(sorted({t.task for t in traces}))
    configs = ",".join(sorted({t.config for t in traces}))
    print(f"traces: {len(traces)} records tasks={tasks} configs={configs}")

    lines, missing = _coverage_pairs(ws, platform, profiles)
    for line in lines:
        print(line)
    return 2 if missing else 0


# -- alpha --------------------------------------------------------------------


def cmd_alpha(args: argparse.Namespace) -> int:
    ws = _workspace(args)
    traces = load_traces(ws.traces_file)
    config = args.config if args.config is not None else ws.alpha_config
    task = args.task if args.task is not None else ws.task
    dist = distribution(traces, config=config, task=task)
    selected = [
        t for t in traces if t.config == config and (task is None or t.task == task)
    ]
    stats = dist.summary()
    print(f"alpha config={config} task={task or 'all'} n={dist.n}")
    print(
        "median={median!r} mean={mean!r} p10={p10!r} p25={p25!r} "
        "p75={p75!r} p90={p90!r}".format(**stats)
    )
    out = _output_path(ws, "alpha_samples.txt")
    write_alpha_samples(out, selected)
    print(f"wrote {out}")
    return 0


# -- plan ---------------------------------------------------------------------


def _plan_table(platform: Platform, decisions) -> list[str]:
    header = ["variant", "allocation", "speculate", "gamma", "mapping", "hetero", "speedup", "notes"]
    rows = [header]
    for d in decisions:
        hetero = "na" if d.heterogeneous is None else ("yes" if d.heterogeneous else "no")
        rows.append(
            [
                str(d.variant_index),
                _alloc_text(d.variant.allocation),
                "yes" if d.use_speculation else "no",
                str(d.gamma),
                _mapping_text(platform, d.mapping),
                hetero,
                f"{d.predicted_speedup:.4f}",
                "; ".join(d.notes) if d.notes else "-",
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    return [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    ]


def cmd_plan(args: argparse.Namespace) -> int:
    ws = _workspace(args)
    platform = load_platform(ws.platform_file)
    profiles, _ = load_profiles(ws.profiles_file)

    if args.alpha is not None:
        alpha = args.alpha
    else:
        traces = load_traces(ws.traces_file)
        percentile = args.percentile if args.percentile is not None else ws.alpha_percentile
        dist = distribution(traces, config=ws.alpha_config, task=ws.task)
        alpha = dist.percentile(percentile)
    min_speedup = args.min_speedup if args.min_speedup is not None else ws.min_speedup

    curves = build_cost_curves(
        platform, profiles, ws.drafter_quantization, ws.target_quantization
    )
    request = PlanRequest(
        platform,
        alpha,
        seq_len=ws.seq_len,
        gamma_max=ws.gamma_max,
        min_speedup=min_speedup,
        heterogeneity_margin=ws.heterogeneity_margin,
    )
    decisions = plan(request, curves)
    best = best_global(decisions)

    report = [
        f"plan alpha={alpha!r} seq_len={ws.seq_len} gamma_max={ws.gamma_max} "
        f"min_speedup={min_speedup!r} margin={ws.heterogeneity_margin!r}"
    ]
    report.extend(_plan_table(platform, decisions))
    report.append(
        f"best: variant={best.variant_index} allocation={_alloc_text(best.variant.allocation)} "
        f"speculate={'yes' if best.use_speculation else 'no'} "
        f"speedup={best.predicted_speedup:.4f}"
    )
    for line in report:
        print(line)

    records_path = _output_path(ws, "plan_records.txt")
    write_plan_records(records_path, decisions, platform)
    table_path = _output_path(ws, "plan_table.txt")
    write_lines(table_path, report)
    print(f"wrote {records_path}")
    print(f"wrote {table_path}")
    return 0


# -- simulate -------------------------------------------------------------------


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"{what} must be comma-separated integers, got {text!r}") from None
    if not values:
        raise ValueError(f"{what} must name at least one value")
    return values


def _parse_alpha_grid(text: str) -> list[float]:
    """Either a comma list ("0.1,0.5") or an inclusive range ("0:1:0.05")."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"alpha range must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ValueError(f"alpha range must be numeric, got {text!r}") from None
        if step <= 0 or stop < start:
            raise ValueError(f"alpha range needs step > 0 and stop >= start, got {text!r}")
        count = int((stop - start) / step + 1e-9) + 1
        return [round(start + i * step, 12) for i in range(count)]
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"alphas must be comma-separated numbers, got {text!r}") from None
    if not values:
        raise ValueError("alphas must name at least one value")
    return values


def _cost_from_design(ws: WorkspaceConfig, variant_index: int, mapping_text: str) -> float:
    platform = load_platform(ws.platform_file)
    profiles, _ = load_profiles(ws.profiles_file)
    curves = build_cost_curves(
        platform, profiles, ws.drafter_quantization, ws.target_quantization
    )
    unit_ids = mapping_text.split(",")
    assignment = tuple(platform.unit_index(uid) for uid in unit_ids)
    for index, variant in enumerate(enumerate_variants(platform), start=1):
        if index != variant_index:
            continue
        for curve in curves:
            if curve.variant == variant and curve.mapping.assignment == assignment:
                return curve.coefficient_at(ws.seq_len)
        raise CoverageError(
            f"no cost curve for variant {variant_index} with mapping {mapping_text!r}"
        )
    raise ValueError(
        f"variant index {variant_index} out of range 1..{variant_count(platform)}"
    )


def _toy_sweep(args: argparse.Namespace, ws: WorkspaceConfig, gammas: list[int]) -> tuple[list[SweepCell], float]:
    draft = MarkovModel(load_matrix(args.draft_matrix))
    target = MarkovModel(load_matrix(args.target_matrix))
    rule = AcceptanceRule(args.rule)
    if args.c is None:
        raise ValueError("simulation from toy chains needs an explicit --c")
    if min(gammas) < 1:
        raise ValueError("toy-chain simulation needs gamma >= 1")
    alpha = exact_mean_alpha(draft, target, rule)
    overheads = ServingOverheads(args.per_module_call, args.per_round_fixed)
    seed = args.seed if args.seed is not None else ws.seed
    cells = []
    for offset, gamma in enumerate(gammas):
        scenario = SimScenario(
            alpha_source=ToyModelSource(draft, target, rule),
            gamma=gamma,
            t_draft_ms=args.c,
            t_target_ms=1.0,
            tokens_to_generate=1,
            seed=seed + offset,
            overheads=overheads,
            batched_draft_call=args.batched_draft_call,
        )
        result = simulate_rounds(scenario, args.rounds)
        cells.append(
            SweepCell(
                alpha=alpha,
                gamma=gamma,
                c=args.c,
                predicted=speedup(alpha, gamma, args.c),
                measured=result.measured_speedup,
                stderr=result.speedup_stderr,
            )
        )
    return cells, args.c


def cmd_simulate(args: argparse.Namespace) -> int:
    ws = _workspace(args)
    gammas = _parse_int_list(args.gammas, "gammas")
    if args.rounds < 2:
        raise ValueError(f"rounds must be >= 2, got {args.rounds}")

    if args.draft_matrix or args.target_matrix:
        if not (args.draft_matrix and args.target_matrix):
            raise ValueError("toy-chain simulation needs both --draft-matrix and --target-matrix")
        if args.alphas is not None:
            raise ValueError("--alphas does not apply when simulating from toy chains")
        cells, c = _toy_sweep(args, ws, gammas)
    else:
        if args.c is not None:
            c = args.c
        elif args.variant is not None and args.mapping is not None:
            c = _cost_from_design(ws, args.variant, args.mapping)
        else:
            raise ValueError("simulate needs --c, or --variant together with --mapping")
        alphas = _parse_alpha_grid(args.alphas if args.alphas is not None else "0:1:0.05")
        overheads = ServingOverheads(args.per_module_call, args.per_round_fixed)
        seed = args.seed if args.seed is not None else ws.seed
        cells = sweep(
            alphas,
            gammas,
            c,
            overheads=overheads,
            rounds=args.rounds,
            seed=seed,
            batched_draft_call=args.batched_draft_call,
        )

    print(f"sweep c={c!r} rounds={args.rounds} cells={len(cells)}")
    for cell in cells:
        print(render_record(sweep_record_fields(cell)))
    out = _output_path(ws, "sweep.txt")
    write_sweep_records(out, cells)
    print(f"wrote {out}")
    return 0


# -- wiring ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="specplan",
        description="Offline planning for speculative decoding on heterogeneous platforms.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, help_text: str, func) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--workspace", required=True, metavar="FILE", help="workspace file")
        p.set_defaults(func=func)
        return p

    add(
        "ingest",
        "Validate the workspace inputs and report profile coverage per design point.",
        cmd_ingest,
    )

    p_alpha = add(
        "alpha",
        "Summarize the measured acceptance-rate distribution and dump per-sample rates.",
        cmd_alpha,
    )
    p_alpha.add_argument("--config", help="model-pair config tag (default: workspace alpha_config)")
    p_alpha.add_argument("--task", help="restrict to one task (default: workspace task)")

    p_plan = add(
        "plan",
        "Decide speculation, draft length, and device mapping for every variant.",
        cmd_plan,
    )
    p_plan.add_argument("--alpha", type=float, help="override the acceptance rate directly")
    p_plan.add_argument(
        "--percentile",
        type=float,
        help="trace percentile used for alpha (default: workspace alpha_percentile)",
    )
    p_plan.add_argument(
        "--min-speedup", type=float, help="minimum predicted speedup to enable speculation"
    )

    p_sim = add(
        "simulate",
        "Monte Carlo check of predicted speedups over an alpha/gamma grid.",
        cmd_simulate,
    )
    p_sim.add_argument("--c", type=float, help="cost coefficient (drafter/target latency ratio)")
    p_sim.add_argument("--variant", type=int, help="variant index whose cost curve supplies c")
    p_sim.add_argument("--mapping", help="mapping unit ids for --variant, e.g. gpu,cpu")
    p_sim.add_argument(
        "--alphas", help="comma list or start:stop:step range (default 0:1:0.05)"
    )
    p_sim.add_argument("--gammas", default="1,3,5,7", help="comma-separated draft lengths")
    p_sim.add_argument("--rounds", type=int, default=100_000, help="rounds per grid cell")
    p_sim.add_argument("--seed", type=int, help="base seed (default: workspace seed)")
    p_sim.add_argument("--per-module-call", type=float, default=0.0, help="overhead per model invocation, ms")
    p_sim.add_argument("--per-round-fixed", type=float, default=0.0, help="fixed overhead per round, ms")
    p_sim.add_argument(
        "--batched-draft-call",
        action="store_true",
        help="count one drafter invocation per round instead of gamma",
    )
    p_sim.add_argument("--draft-matrix", help="toy drafter transition matrix file")
    p_sim.add_argument("--target-matrix", help="toy target transition matrix file")
    p_sim.add_argument(
        "--rule",
        choices=[rule.value for rule in AcceptanceRule],
        default=AcceptanceRule.STOCHASTIC_REJECTION.value,
        help="acceptance rule for toy-chain simulation",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (
        CoverageError,
        MissingProfileError,
        RangeError,
        ConvergenceError,
        DesignSpaceError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
