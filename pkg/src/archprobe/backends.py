"""Execution backends: where measurement passes actually run.

Two implementations exist: the synthetic analytical model (deterministic,
used as the test oracle) and live hardware (see :mod:`archprobe.live`).
Kernels drive a backend through per-pass methods that each return one
raw :class:`~archprobe.timekit.Sample`; protocol handling (warm passes,
repetitions, flushing, overhead subtraction) stays in the kernels.
"""

from __future__ import annotations

import abc
import math
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import CapabilityError
from .synthmodel import (
    SyntheticHierarchy,
    default_model,
    synth_bandwidth,
    synth_chain_cycles,
    synth_chase_latency,
    synth_math_ns_per_elem,
    synth_remote_cycles,
    synth_throughput_gflops,
)
from .timekit import Sample, TimerCalibration
from .topo import CoreGroup, CpuTopology

if TYPE_CHECKING:  # pragma: no cover
    from .coherency import CoherencyRun, TraceEvent
    from .kernels import ChainSpec, ChaseArray

# Semantic (useful) bytes moved per 8-byte element, by kernel kind.
# Write-allocate refill traffic is deliberately not counted.
USEFUL_BYTES_PER_ELEM = {
    "read": 8,
    "write": 8,
    "write_streaming": 8,
    "scale1": 16,
    "scale2": 16,
    "saxpy1": 24,
    "saxpy2": 24,
    "triad": 24,
}

_MATH_FNS = {
    "exp_e": {"single": np.float32, "double": np.float64},
    "exp_2": {"single": np.float32, "double": np.float64},
    "log_e": {"single": np.float32, "double": np.float64},
    "log_2": {"single": np.float32, "double": np.float64},
}


def eval_math_fn(fn: str, values: np.ndarray, precision: str) -> np.ndarray:
    if fn not in _MATH_FNS:
        raise CapabilityError(f"unknown math function {fn!r}")
    dtype = _MATH_FNS[fn][precision]
    x = np.asarray(values, dtype=dtype)
    if fn == "exp_e":
        return np.exp(x)
    if fn == "exp_2":
        return np.exp2(x)
    if fn == "log_e":
        return np.log(x)
    return np.log2(x)


class ExecutionBackend(abc.ABC):
    """Abstract measurement substrate for all kernels."""

    name: str = "abstract"
    supports_shared: bool = True

    @abc.abstractmethod
    def calibration(self) -> TimerCalibration: ...

    @abc.abstractmethod
    def topology(self) -> CpuTopology: ...

    @abc.abstractmethod
    def flush_caches(self) -> None: ...

    @property
    @abc.abstractmethod
    def lanes_dp(self) -> int: ...

    @property
    def llc_capacity_bytes(self) -> int | None:
        """Last-level cache capacity when known (None on unknown hardware)."""
        return None

    @abc.abstractmethod
    def chase_pass(self, chase: "ChaseArray", iters: int) -> Sample: ...

    @abc.abstractmethod
    def chain_pass(self, spec: "ChainSpec", executions: int) -> Sample: ...

    @abc.abstractmethod
    def throughput_pass(
        self,
        cpus: Sequence[int],
        streams: int,
        mix: str,
        iters: int,
        total_flops: int,
    ) -> Sample: ...

    @abc.abstractmethod
    def bandwidth_pass(
        self,
        kind: str,
        cpus: Sequence[int],
        buffer_bytes: int,
        shared: bool,
        software_prefetch: bool,
    ) -> Sample: ...

    @abc.abstractmethod
    def striad_pass(
        self, total_bytes: int, stanza_elems: int, jump_elems: int
    ) -> Sample: ...

    @abc.abstractmethod
    def math_pass(
        self, fn: str, precision: str, array_len: int, reps: int
    ) -> Sample: ...

    def math_eval(self, fn: str, values: np.ndarray, precision: str) -> np.ndarray:
        return eval_math_fn(fn, values, precision)

    @abc.abstractmethod
    def run_placement(
        self, run: "CoherencyRun", phases: Iterable["TraceEvent"]
    ) -> tuple["TraceEvent", ...]: ...

    @abc.abstractmethod
    def remote_pass(self, run: "CoherencyRun") -> Sample: ...


def _pass_for_rate(
    rate_per_ns: float, nominal_units: float, overhead_ns: float
) -> Sample:
    """A Sample whose per-ns rate round-trips to ``rate_per_ns`` bit-exactly.

    The kernel computes rate = work_units / (elapsed - overhead).  Pick the
    net interval as a power of two near nominal_units / rate: multiplying a
    float by a power of two is exact, so work_units = rate * 2^k recovers
    the rate without rounding, and 2^k + overhead - overhead is exact for
    any overhead with a short binary expansion (k capped at 52).
    """
    target = max(nominal_units / rate_per_ns, 1.0)
    k = max(7, min(52, round(math.log2(target))))
    net = float(2**k)
    return Sample(elapsed_ns=net + overhead_ns, work_units=rate_per_ns * net)


class SyntheticBackend(ExecutionBackend):
    """Analytical backend: every pass is computed, never executed."""

    name = "synthetic"

    def __init__(self, model: SyntheticHierarchy | None = None):
        self.model = model if model is not None else default_model()
        self.flush_count = 0
        self._calibration = TimerCalibration(
            overhead_ns=self.model.timer_overhead_ns,
            resolution_ns=1.0,
            cycles_per_ns=self.model.freq_ghz,
        )
        cpus = iter(range(self.model.cores * self.model.smt))
        self._topology = CpuTopology(
            cores=tuple(
                CoreGroup(
                    core_id=c,
                    hw_threads=tuple(next(cpus) for _ in range(self.model.smt)),
                )
                for c in range(self.model.cores)
            )
        )

    def calibration(self) -> TimerCalibration:
        return self._calibration

    def topology(self) -> CpuTopology:
        return self._topology

    def flush_caches(self) -> None:
        self.flush_count += 1

    @property
    def lanes_dp(self) -> int:
        return self.model.lanes_dp

    @property
    def llc_capacity_bytes(self) -> int | None:
        return self.model.last_level_capacity

    def _overhead(self) -> float:
        return self._calibration.overhead_ns

    def chase_pass(self, chase: "ChaseArray", iters: int) -> Sample:
        latency = synth_chase_latency(self.model, chase.size_bytes, chase.stride_bytes)
        return Sample(elapsed_ns=iters * latency + self._overhead(), work_units=iters)

    def chain_pass(self, spec: "ChainSpec", executions: int) -> Sample:
        try:
            per_op = synth_chain_cycles(self.model, spec.op_kind, pair_mode=False)
        except ValueError as exc:
            raise CapabilityError(str(exc)) from exc
        elapsed = executions * spec.chain_len * per_op / self.model.freq_ghz
        return Sample(elapsed_ns=elapsed + self._overhead(), work_units=executions)

    def throughput_pass(
        self,
        cpus: Sequence[int],
        streams: int,
        mix: str,
        iters: int,
        total_flops: int,
    ) -> Sample:
        counts: dict[int, int] = {}
        for cpu in cpus:
            core = self._topology.core_index_of(cpu)
            counts[core] = counts.get(core, 0) + 1
        gflops = synth_throughput_gflops(self.model, counts, streams, mix)
        return _pass_for_rate(gflops, total_flops, self._overhead())

    def bandwidth_pass(
        self,
        kind: str,
        cpus: Sequence[int],
        buffer_bytes: int,
        shared: bool,
        software_prefetch: bool,
    ) -> Sample:
        gbps = synth_bandwidth(self.model, kind, threads=len(cpus), shared=shared)
        useful = USEFUL_BYTES_PER_ELEM[kind] * (buffer_bytes // 8)
        return _pass_for_rate(gbps, useful, self._overhead())

    def striad_pass(
        self, total_bytes: int, stanza_elems: int, jump_elems: int
    ) -> Sample:
        total_elems = total_bytes // 8
        period = stanza_elems + jump_elems
        blocks, rem = divmod(total_elems, period)
        touched = blocks * stanza_elems + min(rem, stanza_elems)
        useful = 24 * touched
        gbps = synth_bandwidth(
            self.model, "triad", threads=1, stanza_elems=stanza_elems
        )
        return _pass_for_rate(gbps, useful, self._overhead())

    def math_pass(self, fn: str, precision: str, array_len: int, reps: int) -> Sample:
        if fn not in _MATH_FNS:
            raise CapabilityError(f"unknown math function {fn!r}")
        per_elem = synth_math_ns_per_elem(self.model, precision)
        work = array_len * reps
        return Sample(elapsed_ns=work * per_elem + self._overhead(), work_units=work)

    def run_placement(self, run, phases) -> tuple:
        # Nothing to execute analytically; the trace is the phase list.
        return tuple(phases)

    def remote_pass(self, run) -> Sample:
        cycles = synth_remote_cycles(
            self.model,
            owner_local=(run.owner_cpu == run.reader_cpu),
            working_set_bytes=run.working_set_bytes,
        )
        elapsed = run.lines * cycles / self.model.freq_ghz
        return Sample(elapsed_ns=elapsed + self._overhead(), work_units=run.lines)


def get_backend(spec: str) -> ExecutionBackend:
    """Build a backend from CLI syntax: ``live`` | ``synthetic[:<model path>]``."""
    if spec == "live":
        from .live import LiveBackend

        return LiveBackend()
    if spec == "synthetic":
        return SyntheticBackend()
    if spec.startswith("synthetic:"):
        from .synthmodel import load_model

        return SyntheticBackend(load_model(spec.split(":", 1)[1]))
    raise CapabilityError(f"unknown backend spec {spec!r}")
