"""Calibrated timing and the measurement protocol.

All benchmarks share one discipline: a number of untimed warm-up passes,
then a number of timed repetitions whose elapsed times are reduced with a
median, with optional cache flushing between consecutive passes.  Timer
overhead is measured once and subtracted (clamped at zero) from every
timed interval.
"""

from __future__ import annotations

import enum
import statistics
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

from .errors import CalibrationError, KernelError, ProtocolError


class ClockSource(Protocol):
    """A monotone wall clock paired with a free-running cycle counter."""

    def wall_ns(self) -> float: ...

    def cycles(self) -> float: ...


class SystemClock:
    """Default clock: perf_counter for both roles (nominal 1 cycle/ns)."""

    def wall_ns(self) -> float:
        return time.perf_counter_ns()

    def cycles(self) -> float:
        return time.perf_counter_ns()


@dataclass(frozen=True)
class TimerCalibration:
    overhead_ns: float
    resolution_ns: float
    cycles_per_ns: float

    def __post_init__(self):
        if self.overhead_ns < 0:
            raise ValueError("overhead_ns must be >= 0")
        if self.resolution_ns <= 0:
            raise ValueError("resolution_ns must be > 0")
        if self.cycles_per_ns <= 0:
            raise ValueError("cycles_per_ns must be > 0")


class Aggregator(enum.Enum):
    MEDIAN = "median"


@dataclass(frozen=True)
class RunProtocol:
    """Warm passes, timed repetitions and the reduction applied to them."""

    warm_passes: int = 2
    repetitions: int = 10
    aggregator: Aggregator = Aggregator.MEDIAN
    flush_between: bool = False

    def __post_init__(self):
        if self.warm_passes < 0:
            raise ValueError("warm_passes must be >= 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    @classmethod
    def transfer(cls, **kw) -> "RunProtocol":
        """Protocol variant for transfer-style experiments (1000 reps)."""
        kw.setdefault("repetitions", 1000)
        return cls(**kw)


@dataclass(frozen=True)
class Sample:
    elapsed_ns: float
    work_units: float  # iterations, bytes, or flops the interval covered

    def __post_init__(self):
        if self.elapsed_ns < 0:
            raise ValueError("elapsed_ns must be >= 0")
        if self.work_units <= 0:
            raise ValueError("work_units must be > 0")

    def per_unit_ns(self, calibration: TimerCalibration) -> float:
        return max(self.elapsed_ns - calibration.overhead_ns, 0.0) / self.work_units


def calibrate_timer(
    clock: ClockSource,
    overhead_trials: int = 1000,
    window_ns: float = 50e6,
) -> TimerCalibration:
    """Measure timer overhead and the cycle counter rate of ``clock``.

    Overhead is the median cost of a back-to-back pair of wall clock reads.
    The cycle rate is obtained by running the cycle counter against the
    wall clock over at least ``window_ns`` (default 50 ms); variance above
    2% across windows is reported as a frequency-scaling warning.
    """
    if overhead_trials < 1:
        raise ValueError("overhead_trials must be >= 1")

    deltas = []
    prev = clock.wall_ns()
    for _ in range(max(overhead_trials, 1000)):
        now = clock.wall_ns()
        delta = now - prev
        if delta < 0:
            raise CalibrationError("clock source is not monotone non-decreasing")
        deltas.append(delta)
        prev = now

    overhead_ns = float(statistics.median(deltas))
    positive = [d for d in deltas if d > 0]
    resolution_ns = float(min(positive)) if positive else 1.0

    rates = []
    for _ in range(3):
        w0 = clock.wall_ns()
        c0 = clock.cycles()
        w1 = clock.wall_ns()
        while w1 - w0 < window_ns:
            w1 = clock.wall_ns()
            if w1 < w0:
                raise CalibrationError("clock source is not monotone non-decreasing")
        c1 = clock.cycles()
        if w1 == w0:
            raise CalibrationError("wall clock did not advance during calibration")
        rates.append((c1 - c0) / (w1 - w0))

    cycles_per_ns = float(statistics.median(rates))
    if cycles_per_ns <= 0:
        raise CalibrationError("cycle counter did not advance during calibration")
    spread = (max(rates) - min(rates)) / cycles_per_ns
    if spread > 0.02:
        warnings.warn(
            f"cycle rate varied by {spread:.1%} across calibration windows; "
            "frequency scaling may be active",
            RuntimeWarning,
            stacklevel=2,
        )

    return TimerCalibration(
        overhead_ns=overhead_ns,
        resolution_ns=resolution_ns,
        cycles_per_ns=cycles_per_ns,
    )


def aggregate(samples: Sequence[float], protocol: RunProtocol) -> float:
    """Reduce timed samples per the protocol (median; even count -> mean of middles)."""
    if len(samples) == 0:
        raise ProtocolError("cannot aggregate an empty sample list")
    if protocol.aggregator is Aggregator.MEDIAN:
        return float(statistics.median(samples))
    raise ProtocolError(f"unknown aggregator {protocol.aggregator!r}")


def run_protocol(
    kernel: Callable[[], Sample],
    protocol: RunProtocol,
    flush: Callable[[], None] | None = None,
) -> Sample:
    """Run ``kernel`` under the protocol and return the aggregated sample.

    The kernel is invoked ``warm_passes`` times with results discarded,
    then ``repetitions`` times with results kept; ``flush`` is invoked
    between consecutive passes iff the protocol asks for it.
    """
    timed: list[Sample] = []
    total = protocol.warm_passes + protocol.repetitions
    for i in range(total):
        if i > 0 and protocol.flush_between and flush is not None:
            flush()
        try:
            sample = kernel()
        except Exception as exc:
            raise KernelError(f"kernel failed: {exc}", pass_index=i) from exc
        if i >= protocol.warm_passes:
            timed.append(sample)

    work = timed[0].work_units
    if any(s.work_units != work for s in timed):
        raise ProtocolError("kernel reported inconsistent work_units across passes")
    elapsed = aggregate([s.elapsed_ns for s in timed], protocol)
    return Sample(elapsed_ns=elapsed, work_units=work)
