"""Measurement kernels.

Pointer chasing, dependent instruction chains, arithmetic throughput,
bandwidth kernels (read / write / streaming / scale / saxpy / triad),
stanza triad, and math-function throughput.  Every kernel runs through
an execution backend and the shared measurement protocol; results are
per-unit costs with timer overhead subtracted.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .backends import USEFUL_BYTES_PER_ELEM, ExecutionBackend
from .errors import CapabilityError, InsufficientWorkError
from .timekit import RunProtocol, Sample, run_protocol
from .topo import PlacementPattern, assign_threads

if TYPE_CHECKING:  # pragma: no cover
    from .analysis import LatencyGrid

MIB = 1024 * 1024


@dataclass(frozen=True)
class ChaseArray:
    """Strided index permutation over 8-byte elements, 4096-aligned."""

    indices: np.ndarray
    size_bytes: int
    stride_bytes: int

    @property
    def element_count(self) -> int:
        return self.size_bytes // 8


@dataclass(frozen=True)
class ChainSpec:
    op_kind: str  # add | mul | fma | div | custom
    lane_width: int = 8
    chain_len: int = 100
    pair_mode: bool = False

    def __post_init__(self):
        if self.op_kind not in {"add", "mul", "fma", "div", "custom"}:
            raise ValueError(f"unknown op kind {self.op_kind!r}")
        if self.chain_len < 2:
            raise ValueError("chain_len must be >= 2")
        if self.pair_mode and self.chain_len % 2 != 0:
            raise ValueError("pair_mode requires an even chain_len")


class BandwidthKind(enum.Enum):
    READ = "read"
    WRITE = "write"
    WRITE_STREAMING = "write_streaming"
    SCALE1 = "scale1"
    SCALE2 = "scale2"
    SAXPY1 = "saxpy1"
    SAXPY2 = "saxpy2"
    TRIAD = "triad"

    @property
    def useful_bytes_per_elem(self) -> int:
        return USEFUL_BYTES_PER_ELEM[self.value]

    @property
    def off_chip(self) -> bool:
        return self in (
            BandwidthKind.READ,
            BandwidthKind.WRITE,
            BandwidthKind.WRITE_STREAMING,
            BandwidthKind.TRIAD,
        )


@dataclass
class BandwidthCurve:
    kind: BandwidthKind
    points: list[tuple[int, str, float]] = field(default_factory=list)
    # (threads, placement label, gbps)

    def add(self, threads: int, placement_label: str, gbps: float) -> None:
        if gbps < 0:
            raise ValueError("gbps must be >= 0")
        prev = [t for t, lbl, _ in self.points if lbl == placement_label]
        if prev and threads <= prev[-1]:
            raise ValueError("threads must be strictly increasing within a series")
        self.points.append((threads, placement_label, gbps))

    def series(self, placement_label: str) -> list[tuple[int, float]]:
        return [(t, g) for t, lbl, g in self.points if lbl == placement_label]


def build_chase(size_bytes: int, stride_bytes: int) -> ChaseArray:
    """Build indices[k] = (k + stride) % S over 8-byte elements."""
    for name, value in (("size_bytes", size_bytes), ("stride_bytes", stride_bytes)):
        if value <= 0 or value % 8 != 0:
            raise ValueError(f"{name} must be a positive multiple of 8")
    if stride_bytes >= size_bytes:
        raise ValueError("stride_bytes must be smaller than size_bytes")

    count = size_bytes // 8
    stride_elems = stride_bytes // 8
    backing = np.empty(count + 512, dtype=np.int64)
    offset = (-backing.ctypes.data // 8) % 512  # 512 elements * 8 B = 4096 B
    view = backing[offset : offset + count]
    view[:] = (np.arange(count, dtype=np.int64) + stride_elems) % count
    return ChaseArray(indices=view, size_bytes=size_bytes, stride_bytes=stride_bytes)


def chase_cycle_length(chase: ChaseArray) -> int:
    """Length of the cycle through index 0; equals S / gcd(S, stride)."""
    return chase.element_count // math.gcd(
        chase.element_count, chase.stride_bytes // 8
    )


def _check_sufficient(net_elapsed_ns: float, resolution_ns: float) -> None:
    if net_elapsed_ns < 100.0 * resolution_ns:
        raise InsufficientWorkError(
            f"net elapsed {net_elapsed_ns:.1f} ns is below 100x timer "
            f"resolution ({resolution_ns:.1f} ns); increase the iteration count"
        )


def chase_latency(
    chase: ChaseArray,
    backend: ExecutionBackend,
    protocol: RunProtocol | None = None,
    iters: int = 1_000_000,
) -> float:
    """Pointer-chase latency in ns per access (single thread)."""
    protocol = protocol or RunProtocol()
    calib = backend.calibration()
    sample = run_protocol(
        lambda: backend.chase_pass(chase, iters), protocol, backend.flush_caches
    )
    net = max(sample.elapsed_ns - calib.overhead_ns, 0.0)
    _check_sufficient(net, calib.resolution_ns)
    return net / sample.work_units


def latency_grid(
    backend: ExecutionBackend,
    sizes: Sequence[int],
    strides: Sequence[int],
    protocol: RunProtocol | None = None,
    iters: int = 1_000_000,
) -> "LatencyGrid":
    """Measure the full (size, stride) latency surface."""
    from .analysis import LatencyGrid

    matrix = [
        [
            chase_latency(build_chase(size, stride), backend, protocol, iters)
            for stride in strides
        ]
        for size in sizes
    ]
    return LatencyGrid(
        sizes=list(sizes), strides=list(strides), latency_ns=matrix
    )


def instruction_chain_latency(
    spec: ChainSpec,
    backend: ExecutionBackend,
    protocol: RunProtocol | None = None,
    executions: int = 1000,
) -> float:
    """Dependent-chain latency in cycles per op (per pair in pair mode)."""
    protocol = protocol or RunProtocol()
    calib = backend.calibration()
    sample = run_protocol(
        lambda: backend.chain_pass(spec, executions), protocol, backend.flush_caches
    )
    net = max(sample.elapsed_ns - calib.overhead_ns, 0.0)
    _check_sufficient(net, calib.resolution_ns)
    units_per_exec = spec.chain_len // 2 if spec.pair_mode else spec.chain_len
    return net * calib.cycles_per_ns / (sample.work_units * units_per_exec)


def flops_per_element(mix: str) -> int:
    if mix == "mul":
        return 1
    if mix == "mad":
        return 2
    raise ValueError(f"unknown instruction mix {mix!r}")


def total_flops(threads: int, streams: int, lane_width: int, iters: int, mix: str) -> int:
    return threads * streams * lane_width * iters * flops_per_element(mix)


def arithmetic_throughput(
    backend: ExecutionBackend,
    threads: int,
    streams: int,
    mix: str,
    placement: PlacementPattern,
    iters: int = 100_000,
    protocol: RunProtocol | None = None,
) -> float:
    """Fully-unrolled arithmetic throughput in GFlops."""
    if streams not in (1, 2):
        raise ValueError("streams must be 1 or 2")
    protocol = protocol or RunProtocol()
    calib = backend.calibration()
    cpus = assign_threads(backend.topology(), threads, placement)
    flops = total_flops(threads, streams, backend.lanes_dp, iters, mix)
    sample = run_protocol(
        lambda: backend.throughput_pass(cpus, streams, mix, iters, flops),
        protocol,
        backend.flush_caches,
    )
    net = max(sample.elapsed_ns - calib.overhead_ns, 0.0)
    _check_sufficient(net, calib.resolution_ns)
    return sample.work_units / net  # flops per ns == GFlops


def bandwidth(
    backend: ExecutionBackend,
    kind: BandwidthKind,
    threads: int,
    placement: PlacementPattern,
    buffer_bytes: int,
    shared: bool = False,
    software_prefetch: bool = True,
    protocol: RunProtocol | None = None,
) -> float:
    """Memory bandwidth in GB/s over the kernel's semantic traffic only."""
    if buffer_bytes <= 0 or buffer_bytes % 8 != 0:
        raise ValueError("buffer_bytes must be a positive multiple of 8")
    llc = backend.llc_capacity_bytes
    if kind.off_chip and llc is not None and buffer_bytes < 4 * llc:
        raise ValueError(
            f"off-chip runs need buffer_bytes >= 4x last-level capacity ({4 * llc})"
        )
    if shared and not backend.supports_shared:
        raise CapabilityError(f"backend {backend.name} cannot share one buffer")

    protocol = protocol or RunProtocol(flush_between=True)
    calib = backend.calibration()
    cpus = assign_threads(backend.topology(), threads, placement)
    sample = run_protocol(
        lambda: backend.bandwidth_pass(
            kind.value, cpus, buffer_bytes, shared, software_prefetch
        ),
        protocol,
        backend.flush_caches,
    )
    net = max(sample.elapsed_ns - calib.overhead_ns, 0.0)
    _check_sufficient(net, calib.resolution_ns)
    return sample.work_units / net  # useful bytes per ns == GB/s


def bandwidth_curve(
    backend: ExecutionBackend,
    kind: BandwidthKind,
    thread_counts: Sequence[int],
    placement: PlacementPattern,
    buffer_bytes: int,
    shared: bool = False,
    software_prefetch: bool = True,
    protocol: RunProtocol | None = None,
) -> BandwidthCurve:
    curve = BandwidthCurve(kind=kind)
    for threads in thread_counts:
        gbps = bandwidth(
            backend,
            kind,
            threads,
            placement,
            buffer_bytes,
            shared,
            software_prefetch,
            protocol,
        )
        curve.add(threads, placement.label, gbps)
    return curve


def striad(
    backend: ExecutionBackend,
    stanza_elems: int,
    total_bytes: int = 128 * MIB,
    jump_elems: int = 2048,
    protocol: RunProtocol | None = None,
) -> float:
    """Stanza-triad bandwidth in GB/s (single thread, flush between reps)."""
    if stanza_elems <= 0:
        raise ValueError("stanza_elems must be positive")
    if jump_elems < 0:
        raise ValueError("jump_elems must be >= 0")
    protocol = protocol or RunProtocol(repetitions=10, flush_between=True)
    calib = backend.calibration()
    sample = run_protocol(
        lambda: backend.striad_pass(total_bytes, stanza_elems, jump_elems),
        protocol,
        backend.flush_caches,
    )
    net = max(sample.elapsed_ns - calib.overhead_ns, 0.0)
    _check_sufficient(net, calib.resolution_ns)
    return sample.work_units / net


def math_function_bench(
    backend: ExecutionBackend,
    fn: str,
    precision: str,
    array_len: int = 1024,
    reps: int = 100_000,
    protocol: RunProtocol | None = None,
) -> float:
    """ns per element for an elementwise math function over an array."""
    if precision not in ("single", "double"):
        raise ValueError(f"unknown precision {precision!r}")
    protocol = protocol or RunProtocol()
    calib = backend.calibration()
    sample = run_protocol(
        lambda: backend.math_pass(fn, precision, array_len, reps),
        protocol,
        backend.flush_caches,
    )
    net = max(sample.elapsed_ns - calib.overhead_ns, 0.0)
    _check_sufficient(net, calib.resolution_ns)
    return net / sample.work_units


def math_single_double_ratio(
    backend: ExecutionBackend,
    fn: str,
    array_len: int = 1024,
    reps: int = 100_000,
    protocol: RunProtocol | None = None,
) -> tuple[float, float, float]:
    """(single ns/elem, double ns/elem, double/single ratio)."""
    single = math_function_bench(backend, fn, "single", array_len, reps, protocol)
    double = math_function_bench(backend, fn, "double", array_len, reps, protocol)
    return single, double, double / single
