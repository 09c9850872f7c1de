"""Suite runner and command-line interface.

Plans validate every benchmark's parameters before anything runs, flush
partial results to disk after each benchmark, and finish with the
machine-model summary plus the datasheet comparison when the inputs
suffice.  Exit codes: 0 success, 2 validation failure (nothing ran),
3 runtime benchmark failure (failed records are marked in the report).
"""

from __future__ import annotations

import os
import statistics
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import click

from . import analysis, coherency, kernels
from .backends import ExecutionBackend, get_backend
from .errors import ArchprobeError, ValidationError
from .kernels import BandwidthKind
from .reporting import (
    Report,
    ResultRecord,
    claims_to_dicts,
    emit_report,
    model_to_dict,
    topology_digest,
)
from .timekit import RunProtocol
from .topo import PlacementPattern

KIB = 1024
MIB = 1024 * 1024
GIB = 1024 * 1024 * 1024

DEFAULT_GRID_SIZES = [1 * KIB << i for i in range(13)]  # 1 KiB .. 4 MiB
DEFAULT_GRID_STRIDES = [8 << i for i in range(10)]  # 8 B .. 4 KiB


@dataclass(frozen=True)
class SuitePlan:
    benchmarks: tuple[tuple[str, dict[str, Any]], ...]
    backend: str = "synthetic"
    protocol: RunProtocol = field(default_factory=RunProtocol)
    output_dir: Path = Path("archprobe-out")
    seed: int = 0
    datasheet: Path | None = None
    tolerance_pct: float = 15.0


# --- validators and runners, one pair per benchmark kind -----------------


def _placement(params: dict[str, Any]) -> PlacementPattern:
    return PlacementPattern.parse(params.get("placement", "scatter"))


def _validate_chase(params, backend) -> list[str]:
    problems = []
    for key in ("size_bytes", "stride_bytes"):
        v = params.get(key)
        if not isinstance(v, int) or v <= 0 or v % 8:
            problems.append(f"chase: {key} must be a positive multiple of 8")
    if not problems and params["stride_bytes"] >= params["size_bytes"]:
        problems.append("chase: stride_bytes must be smaller than size_bytes")
    return problems


def _run_chase(params, backend, protocol, seed):
    ns = kernels.chase_latency(
        kernels.build_chase(params["size_bytes"], params["stride_bytes"]),
        backend,
        protocol,
        iters=params.get("iters", 1_000_000),
    )
    return {"ns_per_access": ns}


def _validate_chase_grid(params, backend) -> list[str]:
    problems = []
    sizes = params.get("sizes", DEFAULT_GRID_SIZES)
    strides = params.get("strides", DEFAULT_GRID_STRIDES)
    for size in sizes:
        for stride in strides:
            if stride < size:
                problems += _validate_chase(
                    {"size_bytes": size, "stride_bytes": stride}, backend
                )
    return sorted(set(problems))


def _run_chase_grid(params, backend, protocol, seed):
    sizes = params.get("sizes", DEFAULT_GRID_SIZES)
    strides = params.get("strides", DEFAULT_GRID_STRIDES)
    strides = [s for s in strides if s < min(sizes)]
    grid = kernels.latency_grid(
        backend, sizes, strides, protocol, iters=params.get("iters", 1_000_000)
    )
    rows = [
        [size, stride, grid.latency_ns[i][j]]
        for i, size in enumerate(grid.sizes)
        for j, stride in enumerate(grid.strides)
    ]
    return {"columns": ["size_bytes", "stride_bytes", "latency_ns"], "rows": rows}


def _validate_inst(params, backend) -> list[str]:
    problems = []
    for op in params.get("ops", ["add", "mul", "fma"]):
        try:
            kernels.ChainSpec(op_kind=op, chain_len=params.get("chain_len", 100))
        except ValueError as exc:
            problems.append(f"inst: {exc}")
    return problems


def _run_inst(params, backend, protocol, seed):
    rows = []
    for op in params.get("ops", ["add", "mul", "fma"]):
        spec = kernels.ChainSpec(
            op_kind=op,
            chain_len=params.get("chain_len", 100),
            pair_mode=params.get("pair_mode", False),
        )
        rows.append([op, kernels.instruction_chain_latency(spec, backend, protocol)])
    unit = "cycles_per_pair" if params.get("pair_mode") else "cycles_per_op"
    return {"columns": ["op", unit], "rows": rows}


def _validate_throughput(params, backend) -> list[str]:
    problems = []
    total = backend.topology().total_threads
    for threads, streams, mix in params.get("points", []):
        if streams not in (1, 2):
            problems.append(f"throughput: streams must be 1 or 2, got {streams}")
        if mix not in ("mul", "mad"):
            problems.append(f"throughput: unknown mix {mix!r}")
        if not 1 <= threads <= total:
            problems.append(f"throughput: threads {threads} out of range 1..{total}")
    return problems


def _run_throughput(params, backend, protocol, seed):
    placement = _placement(params)
    rows = []
    for threads, streams, mix in params.get("points", []):
        gflops = kernels.arithmetic_throughput(
            backend,
            threads,
            streams,
            mix,
            placement,
            iters=params.get("iters", 100_000),
            protocol=protocol,
        )
        rows.append([threads, streams, mix, gflops])
    return {
        "columns": ["threads", "streams", "mix", "gflops"],
        "rows": rows,
        "placement": placement.label,
    }


def _validate_bw_curve(params, backend) -> list[str]:
    problems = []
    try:
        BandwidthKind(params.get("kind", "read"))
    except ValueError:
        problems.append(f"bw: unknown kind {params.get('kind')!r}")
    buffer_bytes = params.get("buffer_bytes", GIB)
    if buffer_bytes <= 0 or buffer_bytes % 8:
        problems.append("bw: buffer_bytes must be a positive multiple of 8")
    total = backend.topology().total_threads
    for threads in params.get("thread_counts", [1]):
        if not 1 <= threads <= total:
            problems.append(f"bw: threads {threads} out of range 1..{total}")
    try:
        _placement(params)
    except ArchprobeError as exc:
        problems.append(f"bw: {exc}")
    return problems


def _run_bw_curve(params, backend, protocol, seed):
    kind = BandwidthKind(params.get("kind", "read"))
    placement = _placement(params)
    curve = kernels.bandwidth_curve(
        backend,
        kind,
        params.get("thread_counts", [1]),
        placement,
        params.get("buffer_bytes", GIB),
        shared=params.get("shared", False),
        software_prefetch=params.get("software_prefetch", True),
        protocol=protocol,
    )
    return {
        "columns": ["threads", "placement", "gbps"],
        "rows": [list(p) for p in curve.points],
        "kind": kind.value,
        "shared": params.get("shared", False),
    }


def _validate_striad(params, backend) -> list[str]:
    problems = []
    for stanza in params.get("stanzas", [2048]):
        if stanza <= 0:
            problems.append("striad: stanza_elems must be positive")
    if params.get("jump_elems", 2048) < 0:
        problems.append("striad: jump_elems must be >= 0")
    return problems


def _run_striad(params, backend, protocol, seed):
    striad_protocol = protocol if protocol.flush_between else replace(
        protocol, flush_between=True
    )
    rows = [
        [
            stanza,
            kernels.striad(
                backend,
                stanza,
                total_bytes=params.get("total_bytes", 128 * MIB),
                jump_elems=params.get("jump_elems", 2048),
                protocol=striad_protocol,
            ),
        ]
        for stanza in params.get("stanzas", [2048])
    ]
    return {"columns": ["stanza_elems", "gbps"], "rows": rows}


def _validate_coherency(params, backend) -> list[str]:
    problems = []
    topo = backend.topology()
    for offset in params.get("reader_offsets", [1]):
        if not 1 <= offset < topo.core_count:
            problems.append(f"coherency: reader offset {offset} out of range")
    for ws in params.get("working_sets", [65536]):
        if ws <= 0 or ws % 64 or ws > 128 * KIB:
            problems.append(
                f"coherency: working set {ws} must be a multiple of 64 <= 128 KiB"
            )
    return problems


def _run_coherency(params, backend, protocol, seed):
    topo = backend.topology()
    owner = topo.cores[0].hw_threads[0]
    rows = []
    for offset in params.get("reader_offsets", [1, 2, 4, 8]):
        reader = topo.cores[offset].hw_threads[0]
        for state in coherency.CoherencyState:
            cycles = coherency.remote_latency_overall(
                owner,
                reader,
                state,
                backend,
                protocol,
                working_sets=params.get(
                    "working_sets", (4096, 16384, 65536, 131072)
                ),
            )
            rows.append([f"D+{offset}", state.value, cycles])
    return {"columns": ["reader_offset", "state", "cycles_per_line"], "rows": rows}


def _validate_math(params, backend) -> list[str]:
    problems = []
    for fn in params.get("fns", ["exp_e"]):
        if fn not in ("exp_e", "exp_2", "log_e", "log_2"):
            problems.append(f"math: unknown function {fn!r}")
    return problems


def _run_math(params, backend, protocol, seed):
    rows = []
    for fn in params.get("fns", ["exp_e"]):
        for precision in params.get("precisions", ["single", "double"]):
            ns = kernels.math_function_bench(
                backend,
                fn,
                precision,
                array_len=params.get("array_len", 1024),
                reps=params.get("reps", 100_000),
                protocol=protocol,
            )
            rows.append([fn, precision, ns])
    return {"columns": ["fn", "precision", "ns_per_elem"], "rows": rows}


BENCHMARKS: dict[str, tuple[Callable, Callable]] = {
    "chase": (_validate_chase, _run_chase),
    "chase_grid": (_validate_chase_grid, _run_chase_grid),
    "inst": (_validate_inst, _run_inst),
    "throughput": (_validate_throughput, _run_throughput),
    "bw_curve": (_validate_bw_curve, _run_bw_curve),
    "striad_curve": (_validate_striad, _run_striad),
    "coherency": (_validate_coherency, _run_coherency),
    "math": (_validate_math, _run_math),
}


def default_suite_plan(
    backend: str = "synthetic",
    output_dir: Path = Path("archprobe-out"),
    seed: int = 0,
    datasheet: Path | None = None,
) -> SuitePlan:
    """The full default suite: grid, curves, chains, coherency, math."""
    thread_counts = [1, 2, 4, 8, 16, 32, 60, 120, 240]
    benchmarks: list[tuple[str, dict[str, Any]]] = [
        ("chase_grid", {}),
        ("bw_curve", {"kind": "read", "thread_counts": thread_counts}),
        ("bw_curve", {"kind": "write", "thread_counts": thread_counts}),
        ("bw_curve", {"kind": "write_streaming", "thread_counts": thread_counts}),
        (
            "bw_curve",
            {
                "kind": "read",
                "thread_counts": thread_counts,
                "shared": True,
                "placement": "compact",
            },
        ),
        ("striad_curve", {"stanzas": [16 << i for i in range(13)]}),
        ("inst", {"ops": ["add", "mul", "fma"]}),
        (
            "throughput",
            {"points": [(60, 1, "mad"), (120, 2, "mad"), (240, 1, "mad"), (240, 1, "mul")]},
        ),
        ("coherency", {"reader_offsets": [1, 2, 4, 8, 16, 32]}),
        ("math", {"fns": ["exp_e"]}),
    ]
    return SuitePlan(
        benchmarks=tuple(benchmarks),
        backend=backend,
        output_dir=output_dir,
        seed=seed,
        datasheet=datasheet,
    )


def validate_plan(plan: SuitePlan, backend: ExecutionBackend) -> None:
    problems: list[str] = []
    for i, (kind, params) in enumerate(plan.benchmarks):
        if kind not in BENCHMARKS:
            problems.append(f"benchmark {i}: unknown kind {kind!r}")
            continue
        validator, _ = BENCHMARKS[kind]
        problems += [f"benchmark {i} ({kind}): {p}" for p in validator(params, backend)]
    if problems:
        raise ValidationError(problems)


def _grid_from_record(record: ResultRecord) -> analysis.LatencyGrid:
    rows = record.data["rows"]
    sizes = sorted({r[0] for r in rows})
    strides = sorted({r[1] for r in rows})
    lookup = {(r[0], r[1]): r[2] for r in rows}
    return analysis.LatencyGrid(
        sizes=sizes,
        strides=strides,
        latency_ns=[[lookup[(s, st)] for st in strides] for s in sizes],
    )


def _curve_from_record(record: ResultRecord) -> kernels.BandwidthCurve:
    curve = kernels.BandwidthCurve(kind=BandwidthKind(record.data["kind"]))
    for threads, label, gbps in record.data["rows"]:
        curve.add(threads, label, gbps)
    return curve


def finalize_report(report: Report, backend: ExecutionBackend, plan: SuitePlan) -> None:
    """Attach model and comparison when the collected results suffice."""
    grid_rec = next(
        (r for r in report.results if r.kind == "chase_grid" and not r.failed), None
    )
    read_rec = next(
        (
            r
            for r in report.results
            if r.kind == "bw_curve"
            and not r.failed
            and r.data.get("kind") == "read"
            and not r.data.get("shared")
        ),
        None,
    )
    if grid_rec is None or read_rec is None:
        return

    write_curves = [
        _curve_from_record(r)
        for r in report.results
        if r.kind == "bw_curve"
        and not r.failed
        and r.data.get("kind") in ("write", "write_streaming")
    ]
    coh_rec = next(
        (r for r in report.results if r.kind == "coherency" and not r.failed), None
    )
    remote = (
        float(statistics.median(row[2] for row in coh_rec.data["rows"]))
        if coh_rec and coh_rec.data.get("rows")
        else None
    )
    topo = backend.topology()
    model = analysis.build_machine_model(
        grid=_grid_from_record(grid_rec),
        calib=backend.calibration(),
        read_curve=_curve_from_record(read_rec),
        write_curves=write_curves,
        core_count=topo.core_count,
        smt_per_core=max(len(c.hw_threads) for c in topo.cores),
        vector_lanes_dp=backend.lanes_dp,
        remote_latency_cycles=remote,
    )
    report.model = model_to_dict(model)
    if plan.datasheet is not None:
        tp_rec = next(
            (r for r in report.results if r.kind == "throughput" and not r.failed),
            None,
        )
        extra = (
            {"peak_gflops": max(row[3] for row in tp_rec.data["rows"])}
            if tp_rec and tp_rec.data.get("rows")
            else None
        )
        claims = analysis.compare_datasheet(
            model,
            Path(plan.datasheet),
            tolerance_pct=plan.tolerance_pct,
            extra_measured=extra,
        )
        report.comparison = claims_to_dicts(claims)


def run_suite(plan: SuitePlan) -> tuple[Report, int]:
    """Validate, run in order, flush partials, finalize. Returns (report, exit code)."""
    backend = get_backend(plan.backend)
    validate_plan(plan, backend)  # raises ValidationError -> exit 2 at the CLI

    calib = backend.calibration()
    report = Report(
        environment={
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "backend": plan.backend,
            "calibration": {
                "overhead_ns": calib.overhead_ns,
                "resolution_ns": calib.resolution_ns,
                "cycles_per_ns": calib.cycles_per_ns,
            },
            "topology_digest": topology_digest(backend.topology()),
            "seed": plan.seed,
        }
    )
    report_path = Path(plan.output_dir) / "report.json"
    exit_code = 0
    for kind, params in plan.benchmarks:
        _, runner = BENCHMARKS[kind]
        record = ResultRecord(kind=kind, params=dict(params))
        try:
            record.data = runner(params, backend, plan.protocol, plan.seed)
        except ArchprobeError as exc:
            record.failed = True
            record.error = str(exc)
            exit_code = 3
        report.results.append(record)
        report.save(report_path)  # partial results survive interruption

    finalize_report(report, backend, plan)
    report.save(report_path)
    return report, exit_code


# --- click interface ------------------------------------------------------


def _resolve_out(out: str) -> Path:
    return Path(os.environ.get("ARCHPROBE_OUT", out))


def _common(func):
    func = click.option("--backend", default="synthetic", show_default=True)(func)
    func = click.option("--reps", default=10, show_default=True)(func)
    func = click.option("--out", default="archprobe-out", show_default=True)(func)
    func = click.option(
        "--format", "formats", default="json", show_default=True,
        help="comma-separated: json,csv,markdown",
    )(func)
    return func


def _run_single(kind: str, params: dict[str, Any], backend: str, reps: int,
                out: str, formats: str) -> None:
    plan = SuitePlan(
        benchmarks=((kind, params),),
        backend=backend,
        protocol=RunProtocol(repetitions=reps),
        output_dir=_resolve_out(out),
    )
    try:
        report, code = run_suite(plan)
    except ValidationError as exc:
        click.echo(f"validation failed: {exc}", err=True)
        sys.exit(2)
    emit_report(report, set(formats.split(",")), _resolve_out(out))
    sys.exit(code)


@click.group()
def main():
    """CPU micro-architecture characterization suite."""


@main.command()
@click.option("--size", default=64 * KIB, show_default=True)
@click.option("--stride", default=64, show_default=True)
@click.option("--iters", default=1_000_000, show_default=True)
@_common
def chase(size, stride, iters, backend, reps, out, formats):
    """Pointer-chase latency for one (size, stride) pair."""
    _run_single(
        "chase",
        {"size_bytes": size, "stride_bytes": stride, "iters": iters},
        backend, reps, out, formats,
    )


@main.command()
@click.option("--ops", default="add,mul,fma", show_default=True)
@click.option("--chain-len", default=100, show_default=True)
@click.option("--pair-mode", is_flag=True)
@_common
def inst(ops, chain_len, pair_mode, backend, reps, out, formats):
    """Dependent-chain instruction latency."""
    _run_single(
        "inst",
        {"ops": ops.split(","), "chain_len": chain_len, "pair_mode": pair_mode},
        backend, reps, out, formats,
    )


@main.command()
@click.option("--threads", default=60, show_default=True)
@click.option("--streams", default=1, show_default=True)
@click.option("--mix", default="mad", show_default=True)
@click.option("--placement", default="scatter", show_default=True)
@_common
def throughput(threads, streams, mix, placement, backend, reps, out, formats):
    """Arithmetic throughput in GFlops."""
    _run_single(
        "throughput",
        {"points": [(threads, streams, mix)], "placement": placement},
        backend, reps, out, formats,
    )


@main.command()
@click.option("--kind", default="read", show_default=True)
@click.option("--threads", default="1,2,4,8,16,32,60", show_default=True)
@click.option("--placement", default="scatter", show_default=True)
@click.option("--buffer-bytes", default=GIB, show_default=True)
@click.option("--shared", is_flag=True)
@click.option("--no-prefetch", is_flag=True)
@_common
def bw(kind, threads, placement, buffer_bytes, shared, no_prefetch,
       backend, reps, out, formats):
    """Memory bandwidth curve over thread counts."""
    _run_single(
        "bw_curve",
        {
            "kind": kind,
            "thread_counts": [int(t) for t in threads.split(",")],
            "placement": placement,
            "buffer_bytes": buffer_bytes,
            "shared": shared,
            "software_prefetch": not no_prefetch,
        },
        backend, reps, out, formats,
    )


@main.command()
@click.option("--stanzas", default="16,64,256,1024,4096,16384", show_default=True)
@click.option("--total-bytes", default=128 * MIB, show_default=True)
@click.option("--jump", default=2048, show_default=True)
@_common
def striad(stanzas, total_bytes, jump, backend, reps, out, formats):
    """Stanza-triad bandwidth over stanza lengths."""
    _run_single(
        "striad_curve",
        {
            "stanzas": [int(s) for s in stanzas.split(",")],
            "total_bytes": total_bytes,
            "jump_elems": jump,
        },
        backend, reps, out, formats,
    )


@main.command(name="coherency")
@click.option("--reader-offsets", default="1,2,4,8", show_default=True)
@_common
def coherency_cmd(reader_offsets, backend, reps, out, formats):
    """Remote cache-line latency by coherency state."""
    _run_single(
        "coherency",
        {"reader_offsets": [int(o) for o in reader_offsets.split(",")]},
        backend, reps, out, formats,
    )


@main.command(name="math")
@click.option("--fns", default="exp_e", show_default=True)
@click.option("--array-len", default=1024, show_default=True)
@click.option("--math-reps", default=100_000, show_default=True)
@_common
def math_cmd(fns, array_len, math_reps, backend, reps, out, formats):
    """Math-function throughput, single vs double precision."""
    _run_single(
        "math",
        {"fns": fns.split(","), "array_len": array_len, "reps": math_reps},
        backend, reps, out, formats,
    )


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--datasheet", type=click.Path(exists=True), default=None)
@_common
def suite(seed, datasheet, backend, reps, out, formats):
    """Run the full default benchmark suite."""
    plan = default_suite_plan(
        backend=backend,
        output_dir=_resolve_out(out),
        seed=seed,
        datasheet=Path(datasheet) if datasheet else None,
    )
    plan = replace(plan, protocol=RunProtocol(repetitions=reps))
    try:
        report, code = run_suite(plan)
    except ValidationError as exc:
        click.echo(f"validation failed: {exc}", err=True)
        sys.exit(2)
    emit_report(report, set(formats.split(",")), _resolve_out(out))
    sys.exit(code)


@main.command(name="report")
@click.argument("report_path", type=click.Path(exists=True))
@click.option("--format", "formats", default="json,csv,markdown", show_default=True)
@click.option("--out", default="archprobe-out", show_default=True)
def report_cmd(report_path, formats, out):
    """Re-emit an existing JSON report in other formats."""
    report = Report.load(report_path)
    emit_report(report, set(formats.split(",")), _resolve_out(out))


@main.command()
@click.argument("report_path", type=click.Path(exists=True))
@click.argument("claims_path", type=click.Path(exists=True))
@click.option("--tolerance", default=15.0, show_default=True)
def compare(report_path, claims_path, tolerance):
    """Diff a report's machine model against datasheet claims."""
    report = Report.load(report_path)
    if report.model is None:
        click.echo("report carries no machine model", err=True)
        sys.exit(2)
    model_dict = dict(report.model)
    model_dict["cache_levels"] = tuple(
        analysis.CacheLevel(**lvl) for lvl in model_dict["cache_levels"]
    )
    model = analysis.MachineModel(**model_dict)
    claims = analysis.compare_datasheet(model, Path(claims_path), tolerance)
    for c in claims:
        doc = "N/A" if c.documented is None else f"{c.documented:g}"
        meas = "N/A" if c.measured is None else f"{c.measured:g}"
        click.echo(f"{c.metric}: documented={doc} measured={meas} -> {c.verdict.value}")


if __name__ == "__main__":
    main()
