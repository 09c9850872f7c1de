"""Two-thread remote cache-line latency.

Lines are first placed on an owner core in a chosen coherency state
(modified, exclusive, or shared), then a reader core times their
transfer by chasing one pointer per line across the working set.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .backends import ExecutionBackend
from .errors import InsufficientWorkError, PlacementError
from .timekit import RunProtocol, run_protocol

LINE_BYTES = 64
MAX_WORKING_SET = 128 * 1024


class CoherencyState(enum.Enum):
    MODIFIED = "modified"
    EXCLUSIVE = "exclusive"
    SHARED = "shared"


class TraceEvent(NamedTuple):
    actor: str  # owner | reader
    action: str  # read | write | evict
    phase: str  # reset | place | share


@dataclass(frozen=True)
class CoherencyRun:
    owner_cpu: int
    reader_cpu: int
    state: CoherencyState
    working_set_bytes: int

    def __post_init__(self):
        if self.working_set_bytes <= 0 or self.working_set_bytes % LINE_BYTES != 0:
            raise ValueError("working_set_bytes must be a positive multiple of 64")
        if self.working_set_bytes > MAX_WORKING_SET:
            raise ValueError("working_set_bytes must be <= 128 KB")

    @property
    def lines(self) -> int:
        return self.working_set_bytes // LINE_BYTES

    @property
    def is_local(self) -> bool:
        return self.owner_cpu == self.reader_cpu


def placement_phases(state: CoherencyState) -> tuple[TraceEvent, ...]:
    """Canonical phase sequence leaving the lines in ``state`` on the owner."""
    if state is CoherencyState.MODIFIED:
        return (TraceEvent("owner", "write", "place"),)
    if state is CoherencyState.EXCLUSIVE:
        return (
            TraceEvent("owner", "evict", "reset"),
            TraceEvent("owner", "read", "place"),
        )
    return (
        TraceEvent("owner", "read", "place"),
        TraceEvent("reader", "read", "share"),
        TraceEvent("reader", "evict", "share"),
    )


def place_lines(
    run: CoherencyRun, backend: ExecutionBackend
) -> tuple[TraceEvent, ...]:
    """Drive the state-placement phases; returns the trace for verification."""
    if run.is_local:
        raise PlacementError(
            "owner and reader must differ for a remote placement request"
        )
    return backend.run_placement(run, placement_phases(run.state))


def remote_latency(
    run: CoherencyRun,
    backend: ExecutionBackend,
    protocol: RunProtocol | None = None,
) -> float:
    """Cycles per transferred line; local runs degrade to local latency."""
    protocol = protocol or RunProtocol()
    calib = backend.calibration()

    def one_pass():
        if not run.is_local:
            place_lines(run, backend)
        return backend.remote_pass(run)

    sample = run_protocol(one_pass, protocol, backend.flush_caches)
    net = max(sample.elapsed_ns - calib.overhead_ns, 0.0)
    if net < 100.0 * calib.resolution_ns:
        raise InsufficientWorkError(
            "remote-latency interval too short; use a larger working set"
        )
    return net * calib.cycles_per_ns / sample.work_units


def remote_latency_overall(
    owner_cpu: int,
    reader_cpu: int,
    state: CoherencyState,
    backend: ExecutionBackend,
    protocol: RunProtocol | None = None,
    working_sets: Sequence[int] = (4096, 8192, 16384, 32768, 65536, 131072),
) -> float:
    """Median cycles/line across working-set sizes up to 128 KB."""
    values = [
        remote_latency(
            CoherencyRun(owner_cpu, reader_cpu, state, ws), backend, protocol
        )
        for ws in working_sets
    ]
    return float(statistics.median(values))
