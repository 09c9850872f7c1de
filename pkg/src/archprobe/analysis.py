"""Invert measurement curves into a simplified machine model.

Knee detection on latency-vs-size curves yields cache capacities and
per-level latencies; the stride axis yields the line size; bandwidth
curves yield peaks.  The resulting model can be diffed against vendor
datasheet claims.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ValidationError
from .kernels import BandwidthCurve, BandwidthKind
from .kvtext import parse_kv, parse_kv_file
from .timekit import TimerCalibration


@dataclass(frozen=True)
class LatencyGrid:
    sizes: list[int]
    strides: list[int]
    latency_ns: list[list[float]]  # indexed [size][stride]

    def __post_init__(self):
        if sorted(self.sizes) != self.sizes or sorted(self.strides) != self.strides:
            raise ValueError("sizes and strides must be ascending")
        if len(self.latency_ns) != len(self.sizes) or any(
            len(row) != len(self.strides) for row in self.latency_ns
        ):
            raise ValueError("latency matrix does not match axis lists")
        for row in self.latency_ns:
            for v in row:
                if not (v > 0) or v != v or v in (float("inf"),):
                    raise ValueError("latency entries must be finite and > 0")

    def column(self, stride_index: int) -> list[float]:
        return [row[stride_index] for row in self.latency_ns]


@dataclass(frozen=True)
class CacheLevel:
    capacity_bytes: int
    latency_cycles: float
    latency_ns: float

    def __post_init__(self):
        if self.capacity_bytes <= 0 or self.latency_cycles <= 0 or self.latency_ns <= 0:
            raise ValueError("cache level fields must be positive")


@dataclass(frozen=True)
class InferredHierarchy:
    cache_levels: tuple[CacheLevel, ...]
    line_size_bytes: int
    dram_latency_cycles: float
    warning: str | None = None


@dataclass(frozen=True)
class MachineModel:
    core_count: int
    smt_per_core: int
    vector_lanes_dp: int
    cache_levels: tuple[CacheLevel, ...]
    line_size_bytes: int
    dram_latency_cycles: float
    read_peak_gbps: float
    write_peak_gbps: float
    per_thread_stream_gbps: float
    remote_latency_cycles: float | None = None

    def __post_init__(self):
        line = self.line_size_bytes
        if line < 16 or line > 512 or line & (line - 1) != 0:
            raise ValueError("line_size_bytes must be a power of two in [16, 512]")
        caps = [lvl.capacity_bytes for lvl in self.cache_levels]
        lats = [lvl.latency_cycles for lvl in self.cache_levels]
        if caps != sorted(caps) or lats != sorted(lats):
            raise ValueError("cache levels must increase in capacity and latency")
        if self.read_peak_gbps < self.per_thread_stream_gbps:
            raise ValueError("read peak must be >= per-thread stream bandwidth")


class Verdict(enum.Enum):
    MATCH = "match"
    MISMATCH = "mismatch"
    UNDOCUMENTED = "undocumented"
    UNMEASURED = "unmeasured"


@dataclass(frozen=True)
class DatasheetClaim:
    metric: str
    documented: float | None
    measured: float | None
    verdict: Verdict


def detect_knees(
    curve: Sequence[tuple[float, float]], ratio_threshold: float = 1.5
) -> list[int]:
    """Indices where the curve jumps from one plateau to the next.

    A knee at i means y[i] is the first point of the elevated plateau:
    the two-point window medians around i must differ by the threshold
    ratio and y[i] itself must sit on the new plateau.  Adjacent knees
    are kept at least two grid positions apart.
    """
    if len(curve) < 4:
        raise ValueError("curve must have at least 4 points")
    xs = [x for x, _ in curve]
    ys = [y for _, y in curve]
    if sorted(xs) != xs or len(set(xs)) != len(xs):
        raise ValueError("x values must be strictly ascending")
    if any(y <= 0 for y in ys):
        raise ValueError("y values must be positive")

    knees: list[int] = []
    for i in range(2, len(ys) - 1):
        prev = statistics.median(ys[i - 2 : i])
        nxt = statistics.median(ys[i : i + 2])
        if nxt / prev >= ratio_threshold and ys[i] / prev >= ratio_threshold:
            if not knees or i - knees[-1] >= 2:
                knees.append(i)
    return knees


def infer_hierarchy(
    grid: LatencyGrid, calib: TimerCalibration, ratio_threshold: float = 1.5
) -> InferredHierarchy:
    """Recover capacities, per-level latencies, line size and DRAM latency."""
    max_stride_col = grid.column(len(grid.strides) - 1)
    curve = list(zip([float(s) for s in grid.sizes], max_stride_col))
    knees = detect_knees(curve, ratio_threshold)
    cpns = calib.cycles_per_ns

    if not knees:
        lat_ns = float(statistics.median(max_stride_col))
        level = CacheLevel(
            capacity_bytes=grid.sizes[-1],
            latency_cycles=lat_ns * cpns,
            latency_ns=lat_ns,
        )
        return InferredHierarchy(
            cache_levels=(level,),
            line_size_bytes=grid.strides[-1],
            dram_latency_cycles=lat_ns * cpns,
            warning="no knees found; single-level model",
        )

    levels = []
    start = 0
    for knee in knees:
        plateau = max_stride_col[start:knee]
        lat_ns = float(statistics.median(plateau))
        levels.append(
            CacheLevel(
                capacity_bytes=grid.sizes[knee - 1],
                latency_cycles=lat_ns * cpns,
                latency_ns=lat_ns,
            )
        )
        start = knee
    dram_ns = float(statistics.median(max_stride_col[knees[-1] :]))
    dram_cycles = dram_ns * cpns

    # Line size: smallest stride saturating the first inter-level band.
    cap0 = levels[0].capacity_bytes
    band_end = levels[1].capacity_bytes if len(levels) > 1 else grid.sizes[-1]
    band_rows = [
        i for i, size in enumerate(grid.sizes) if cap0 < size <= band_end
    ]
    per_stride = [
        float(statistics.median(grid.latency_ns[i][j] for i in band_rows))
        for j in range(len(grid.strides))
    ]
    peak = max(per_stride)
    line_size = grid.strides[-1]
    for j, value in enumerate(per_stride):
        if value >= 0.95 * peak:
            line_size = grid.strides[j]
            break

    return InferredHierarchy(
        cache_levels=tuple(levels),
        line_size_bytes=line_size,
        dram_latency_cycles=dram_cycles,
    )


def build_machine_model(
    *,
    grid: LatencyGrid | None = None,
    calib: TimerCalibration | None = None,
    read_curve: BandwidthCurve | None = None,
    write_curves: Sequence[BandwidthCurve] = (),
    core_count: int | None = None,
    smt_per_core: int | None = None,
    vector_lanes_dp: int | None = None,
    remote_latency_cycles: float | None = None,
) -> MachineModel:
    """Assemble the simplified machine view from suite results."""
    missing = [
        name
        for name, value in (
            ("grid", grid),
            ("calib", calib),
            ("read_curve", read_curve),
            ("core_count", core_count),
            ("smt_per_core", smt_per_core),
            ("vector_lanes_dp", vector_lanes_dp),
        )
        if value is None
    ]
    if missing:
        raise ValidationError([f"missing mandatory input: {m}" for m in missing])
    assert grid and calib and read_curve

    hierarchy = infer_hierarchy(grid, calib)
    read_peak = max(g for _, _, g in read_curve.points)
    single = [g for t, _, g in read_curve.points if t == 1]
    per_thread = single[0] if single else min(
        g for t, _, g in read_curve.points
    )
    write_points = [g for curve in write_curves for _, _, g in curve.points]
    write_peak = max(write_points) if write_points else 0.0

    return MachineModel(
        core_count=core_count,
        smt_per_core=smt_per_core,
        vector_lanes_dp=vector_lanes_dp,
        cache_levels=hierarchy.cache_levels,
        line_size_bytes=hierarchy.line_size_bytes,
        dram_latency_cycles=hierarchy.dram_latency_cycles,
        read_peak_gbps=read_peak,
        write_peak_gbps=write_peak,
        per_thread_stream_gbps=per_thread,
        remote_latency_cycles=remote_latency_cycles,
    )


def model_metrics(model: MachineModel) -> dict[str, float | None]:
    """Flatten a machine model into datasheet-comparable metric keys."""
    metrics: dict[str, float | None] = {
        "core_count": float(model.core_count),
        "smt_per_core": float(model.smt_per_core),
        "vector_lanes_dp": float(model.vector_lanes_dp),
        "line_size": float(model.line_size_bytes),
        "dram_latency": model.dram_latency_cycles,
        "read_peak": model.read_peak_gbps,
        "write_peak": model.write_peak_gbps,
        "per_thread_stream": model.per_thread_stream_gbps,
        "remote_latency": model.remote_latency_cycles,
    }
    for i, level in enumerate(model.cache_levels, start=1):
        metrics[f"l{i}_latency"] = level.latency_cycles
        metrics[f"l{i}_capacity"] = float(level.capacity_bytes)
    return metrics


def compare_datasheet(
    model: MachineModel,
    claims: str | Path | Mapping[str, float | None],
    tolerance_pct: float = 15.0,
    extra_measured: Mapping[str, float] | None = None,
) -> list[DatasheetClaim]:
    """Per-metric verdicts against a datasheet claims file.

    ``claims`` may be a path, raw key-value text, or a parsed mapping.
    """
    if isinstance(claims, Mapping):
        documented: dict[str, float | None] = dict(claims)
    else:
        text_or_path = str(claims)
        if "\n" in text_or_path or "=" in text_or_path and not Path(
            text_or_path
        ).exists():
            entries = parse_kv(text_or_path)
        else:
            entries = parse_kv_file(text_or_path)
        documented = {k: e.value for k, e in entries.items()}

    measured = model_metrics(model)
    if extra_measured:
        measured.update(extra_measured)

    results = []
    for metric, doc_value in documented.items():
        meas_value = measured.get(metric)
        if doc_value is None:
            verdict = (
                Verdict.UNDOCUMENTED if meas_value is not None else Verdict.UNMEASURED
            )
        elif meas_value is None:
            verdict = Verdict.UNMEASURED
        else:
            rel = abs(meas_value - doc_value) / abs(doc_value)
            verdict = Verdict.MATCH if rel <= tolerance_pct / 100.0 else Verdict.MISMATCH
        results.append(
            DatasheetClaim(
                metric=metric,
                documented=doc_value,
                measured=meas_value,
                verdict=verdict,
            )
        )
    return results
