"""Deterministic analytical machine model used as the test oracle backend.

The model turns every quantitative characteristic of the machine under
study into a free parameter and answers closed-form questions: chase
latency for a (size, stride) pair, bandwidth for a (kind, threads,
shared, stanza) tuple, chain latencies, throughput, and remote-line
transfer cost.  All outputs are bit-deterministic for a fixed model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ClaimsParseError
from .kvtext import parse_kv_file

DEFAULT_OP_LATENCIES: Mapping[str, float] = {
    "add": 4.0,
    "mul": 4.0,
    "fma": 4.0,
    "div": 30.0,
    "custom": 5.0,
}

_READ_LIKE_KINDS = {"read", "scale1", "scale2", "saxpy1", "saxpy2", "triad"}


@dataclass(frozen=True)
class SyntheticHierarchy:
    """Parameterized machine: cache levels plus rate/latency knobs."""

    levels: tuple[tuple[int, float], ...]  # (capacity_bytes, latency_cycles)
    line_size_bytes: int = 64
    dram_latency_cycles: float = 302.0
    freq_ghz: float = 1.05
    cores: int = 60
    smt: int = 4
    lanes_dp: int = 8
    issue_latency_cycles: float = 4.0
    per_thread_stream_gbps: float = 4.7
    read_peak_gbps: float = 164.0
    write_peak_gbps: float = 76.0
    streaming_store_factor: float = 1.7
    shared_floor_fraction: float = 1.0 / 3.0
    remote_latency_cycles: float = 250.0
    prefetch_ramp_elems: int = 512
    double_math_cost_factor: float = 5.0
    timer_overhead_ns: float = 25.0
    math_ns_per_elem: float = 2.0
    op_latency_cycles: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_OP_LATENCIES)
    )

    def __post_init__(self):
        caps = [c for c, _ in self.levels]
        lats = [l for _, l in self.levels]
        if any(c <= 0 for c in caps) or any(l <= 0 for l in lats):
            raise ValueError("level capacities and latencies must be positive")
        if caps != sorted(caps) or len(set(caps)) != len(caps):
            raise ValueError("levels must have strictly increasing capacity")
        if lats != sorted(lats) or len(set(lats)) != len(lats):
            raise ValueError("levels must have strictly increasing latency")
        if lats and self.dram_latency_cycles <= lats[-1]:
            raise ValueError("dram latency must exceed the last cache level")
        for name, value in (
            ("freq_ghz", self.freq_ghz),
            ("per_thread_stream_gbps", self.per_thread_stream_gbps),
            ("read_peak_gbps", self.read_peak_gbps),
            ("write_peak_gbps", self.write_peak_gbps),
            ("streaming_store_factor", self.streaming_store_factor),
            ("shared_floor_fraction", self.shared_floor_fraction),
            ("line_size_bytes", self.line_size_bytes),
        ):
            if value <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def last_level_capacity(self) -> int:
        return self.levels[-1][0] if self.levels else 0


def default_model() -> SyntheticHierarchy:
    """Two-level 60-core configuration matching the shipped model file."""
    return SyntheticHierarchy(levels=((32 * 1024, 3.0), (512 * 1024, 24.0)))


def synth_chase_latency(
    model: SyntheticHierarchy, size_bytes: int, stride_bytes: int
) -> float:
    """Closed-form pointer-chase latency in ns per access."""
    if size_bytes <= 0 or stride_bytes <= 0:
        raise ValueError("size and stride must be positive")
    if stride_bytes >= size_bytes:
        raise ValueError("stride must be smaller than size")

    upper = model.dram_latency_cycles
    lower = model.levels[-1][1] if model.levels else upper
    for i, (capacity, latency) in enumerate(model.levels):
        if size_bytes <= capacity:
            upper = latency
            lower = model.levels[i - 1][1] if i > 0 else latency
            break

    miss_fraction = min(stride_bytes / model.line_size_bytes, 1.0)
    latency_cycles = lower + miss_fraction * (upper - lower)
    return latency_cycles / model.freq_ghz


def synth_bandwidth(
    model: SyntheticHierarchy,
    kind: str,
    threads: int,
    shared: bool = False,
    stanza_elems: int | None = None,
) -> float:
    """Closed-form bandwidth in GB/s for a kernel kind and thread count."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if kind == "write":
        peak = model.write_peak_gbps
    elif kind == "write_streaming":
        peak = model.write_peak_gbps * model.streaming_store_factor
    elif kind in _READ_LIKE_KINDS:
        peak = model.read_peak_gbps
    else:
        raise ValueError(f"unknown bandwidth kind {kind!r}")

    base = min(threads * model.per_thread_stream_gbps, peak)
    if shared:
        base = max(
            base / threads,
            model.shared_floor_fraction * model.per_thread_stream_gbps,
        )
    if stanza_elems is not None:
        if stanza_elems <= 0:
            raise ValueError("stanza_elems must be positive")
        base *= stanza_elems / (stanza_elems + model.prefetch_ramp_elems)
    return base


def synth_chain_cycles(
    model: SyntheticHierarchy, op_kind: str, pair_mode: bool = False
) -> float:
    """Latency in cycles per op (per pair when pair_mode)."""
    if op_kind not in model.op_latency_cycles:
        raise ValueError(f"op kind {op_kind!r} not configured in model")
    latency = model.op_latency_cycles[op_kind]
    return 2.0 * latency if pair_mode else latency


def synth_throughput_gflops(
    model: SyntheticHierarchy,
    threads_per_core: Mapping[int, int],
    streams: int,
    mix: str,
) -> float:
    """Achieved GFlops given per-core thread counts, streams and mix.

    Per core the pipeline sustains min(streams * threads / issue_latency, 1)
    of its peak of one vector instruction per cycle.
    """
    if mix not in ("mul", "mad"):
        raise ValueError(f"unknown instruction mix {mix!r}")
    flops_per_lane = 2.0 if mix == "mad" else 1.0
    per_core_peak = model.freq_ghz * model.lanes_dp * flops_per_lane  # flops/ns
    total = 0.0
    for count in threads_per_core.values():
        efficiency = min(streams * count / model.issue_latency_cycles, 1.0)
        total += per_core_peak * efficiency
    return total


def synth_remote_cycles(
    model: SyntheticHierarchy,
    owner_local: bool,
    working_set_bytes: int,
) -> float:
    """Cycles per transferred line; local runs fall back to local latency."""
    if not owner_local:
        return model.remote_latency_cycles
    for capacity, latency in model.levels:
        if working_set_bytes <= capacity:
            return latency
    return model.dram_latency_cycles


def synth_math_ns_per_elem(model: SyntheticHierarchy, precision: str) -> float:
    if precision not in ("single", "double"):
        raise ValueError(f"unknown precision {precision!r}")
    factor = model.double_math_cost_factor if precision == "double" else 1.0
    return model.math_ns_per_elem * factor


def load_model(path: str | Path) -> SyntheticHierarchy:
    """Load a model from the key-value text format.

    Levels are given as ``l<N>_capacity`` / ``l<N>_latency`` pairs; all
    other keys map directly onto model parameters and fall back to the
    defaults when absent.
    """
    entries = parse_kv_file(path)

    def get(key: str, default: float | None = None) -> float | None:
        entry = entries.get(key)
        if entry is None:
            return default
        return entry.value

    levels = []
    n = 1
    while f"l{n}_capacity" in entries:
        capacity = entries[f"l{n}_capacity"].value
        latency = get(f"l{n}_latency")
        if capacity is None or latency is None:
            raise ClaimsParseError(
                f"level {n} needs both capacity and latency",
                entries[f"l{n}_capacity"].line_no,
            )
        levels.append((int(capacity), float(latency)))
        n += 1
    if not levels:
        raise ClaimsParseError("model file defines no cache levels", 1)

    defaults = SyntheticHierarchy(levels=tuple(levels))
    op_latencies = dict(DEFAULT_OP_LATENCIES)
    for op in list(op_latencies):
        value = get(f"op_{op}")
        if value is not None:
            op_latencies[op] = float(value)

    def f(key: str, default: float) -> float:
        value = get(key, default)
        assert value is not None
        return float(value)

    return SyntheticHierarchy(
        levels=tuple(levels),
        line_size_bytes=int(f("line_size", defaults.line_size_bytes)),
        dram_latency_cycles=f("dram_latency", defaults.dram_latency_cycles),
        freq_ghz=f("freq", defaults.freq_ghz),
        cores=int(f("cores", defaults.cores)),
        smt=int(f("smt", defaults.smt)),
        lanes_dp=int(f("lanes_dp", defaults.lanes_dp)),
        issue_latency_cycles=f("issue_latency", defaults.issue_latency_cycles),
        per_thread_stream_gbps=f("per_thread_stream", defaults.per_thread_stream_gbps),
        read_peak_gbps=f("read_peak", defaults.read_peak_gbps),
        write_peak_gbps=f("write_peak", defaults.write_peak_gbps),
        streaming_store_factor=f(
            "streaming_store_factor", defaults.streaming_store_factor
        ),
        shared_floor_fraction=f(
            "shared_floor_fraction", defaults.shared_floor_fraction
        ),
        remote_latency_cycles=f("remote_latency", defaults.remote_latency_cycles),
        prefetch_ramp_elems=int(f("prefetch_ramp", defaults.prefetch_ramp_elems)),
        double_math_cost_factor=f(
            "double_math_cost_factor", defaults.double_math_cost_factor
        ),
        timer_overhead_ns=f("timer_overhead", defaults.timer_overhead_ns),
        math_ns_per_elem=f("math_ns_per_elem", defaults.math_ns_per_elem),
        op_latency_cycles=op_latencies,
    )


def default_model_path() -> Path:
    return Path(__file__).parent / "data" / "xeonphi5110.model"


def default_claims_path() -> Path:
    return Path(__file__).parent / "data" / "xeonphi5110.claims"
