"""Live-hardware execution backend.

Hot loops are JIT-compiled (numba, nogil) so the interpreter does not
dominate the measured interval; multi-threaded kernels pin each worker,
synchronize on a start barrier, and take wall time barrier-to-barrier.
Results on live hardware are only meaningful at the ordering level and
feed the non-CI smoke checks.
"""

from __future__ import annotations

import threading
import time
from typing import Iterable, Sequence

import numpy as np

from .backends import USEFUL_BYTES_PER_ELEM, ExecutionBackend
from .errors import CapabilityError, PlacementError
from .timekit import Sample, SystemClock, TimerCalibration, calibrate_timer
from .topo import CpuTopology, discover_topology, pin_current_thread

FLUSH_BUFFER_BYTES = 128 * 1024 * 1024  # >= 4x any plausible LLC slice

_sink = 0.0  # opaque accumulator: keeps kernel results live


def _require_numba():
    try:
        import numba
    except ImportError as exc:  # pragma: no cover
        raise CapabilityError(
            "live backend requires numba (pip install archprobe[live])"
        ) from exc
    return numba


def _jit_kernels():
    numba = _require_numba()
    njit = numba.njit

    @njit(cache=True, nogil=True)
    def chase_walk(indices, iters):
        k = 0
        n = iters // 16
        for _ in range(n):
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
            k = indices[k]
        return k

    @njit(cache=True, nogil=True)
    def chain_run(op_code, chain_len, executions):
        # op_code: 0 add, 1 mul, 2 fma, 3 div
        a = 1.0000001
        b = 0.9999999
        x = 1.0
        for _ in range(executions):
            for _ in range(chain_len):
                if op_code == 0:
                    x = x + b
                    x = x - b  # keep magnitude bounded
                elif op_code == 1:
                    x = x * a
                elif op_code == 2:
                    x = x * a + b * 1e-9
                else:
                    x = x / a
        return x

    @njit(cache=True, nogil=True)
    def mad_loop(streams, iters):
        a = 1.0000001
        b0 = 1.0
        b1 = 1.0
        for _ in range(iters):
            b0 = b0 * a + 1e-9
            if streams == 2:
                b1 = b1 * a + 1e-9
        return b0 + b1

    @njit(cache=True, nogil=True)
    def mul_loop(streams, iters):
        a = 1.0000001
        b0 = 1.0
        b1 = 1.0
        for _ in range(iters):
            b0 = b0 * a
            if streams == 2:
                b1 = b1 * a
        return b0 + b1

    @njit(cache=True, nogil=True)
    def bw_read(arr):
        s = 0.0
        for i in range(arr.shape[0]):
            s += arr[i]
        return s

    @njit(cache=True, nogil=True)
    def bw_write(arr, c):
        for i in range(arr.shape[0]):
            arr[i] = c
        return arr[0]

    @njit(cache=True, nogil=True)
    def bw_scale1(out, a, src):
        for i in range(out.shape[0]):
            out[i] = a * src[i]
        return out[0]

    @njit(cache=True, nogil=True)
    def bw_scale2(out, a):
        for i in range(out.shape[0]):
            out[i] = a * out[i]
        return out[0]

    @njit(cache=True, nogil=True)
    def bw_saxpy1(out, a, x, y):
        for i in range(out.shape[0]):
            out[i] = a * x[i] + y[i]
        return out[0]

    @njit(cache=True, nogil=True)
    def bw_saxpy2(out, a, x):
        for i in range(out.shape[0]):
            out[i] = a * x[i] + out[i]
        return out[0]

    @njit(cache=True, nogil=True)
    def bw_triad(out, a, x, y):
        for i in range(out.shape[0]):
            out[i] = x[i] + a * y[i]
        return out[0]

    @njit(cache=True, nogil=True)
    def striad_walk(out, a, x, y, stanza, jump):
        i = 0
        n = out.shape[0]
        touched = 0
        while i < n:
            end = min(i + stanza, n)
            for j in range(i, end):
                out[j] = x[j] + a * y[j]
            touched += end - i
            i = end + jump
        return touched

    @njit(cache=True, nogil=True)
    def line_walk(arr, lines):
        # one 8-byte read per 64-byte line
        s = 0.0
        for i in range(lines):
            s += arr[i * 8]
        return s

    @njit(cache=True, nogil=True)
    def sweep(arr):
        s = 0.0
        for i in range(arr.shape[0]):
            s += arr[i]
        return s

    return {
        "chase_walk": chase_walk,
        "chain_run": chain_run,
        "mad_loop": mad_loop,
        "mul_loop": mul_loop,
        "bw_read": bw_read,
        "bw_write": bw_write,
        "bw_scale1": bw_scale1,
        "bw_scale2": bw_scale2,
        "bw_saxpy1": bw_saxpy1,
        "bw_saxpy2": bw_saxpy2,
        "bw_triad": bw_triad,
        "striad_walk": striad_walk,
        "line_walk": line_walk,
        "sweep": sweep,
    }


class LiveBackend(ExecutionBackend):
    name = "live"

    def __init__(self, lanes_dp: int = 8):
        self._lanes_dp = lanes_dp
        self._calibration: TimerCalibration | None = None
        self._topology: CpuTopology | None = None
        self._kernels = None
        self._flush_buf = None
        self._clock = SystemClock()

    def _k(self):
        if self._kernels is None:
            self._kernels = _jit_kernels()
        return self._kernels

    def calibration(self) -> TimerCalibration:
        if self._calibration is None:
            self._calibration = calibrate_timer(self._clock)
        return self._calibration

    def topology(self) -> CpuTopology:
        if self._topology is None:
            self._topology = discover_topology()
        return self._topology

    @property
    def lanes_dp(self) -> int:
        return self._lanes_dp

    def flush_caches(self) -> None:
        global _sink
        if self._flush_buf is None:
            self._flush_buf = np.ones(FLUSH_BUFFER_BYTES // 8, dtype=np.float64)
        _sink += self._k()["sweep"](self._flush_buf)

    def _timed(self, fn, *args) -> float:
        global _sink
        t0 = self._clock.wall_ns()
        result = fn(*args)
        t1 = self._clock.wall_ns()
        _sink += float(result)
        return t1 - t0

    def chase_pass(self, chase, iters: int) -> Sample:
        iters = max(iters - iters % 16, 16)
        elapsed = self._timed(self._k()["chase_walk"], chase.indices, iters)
        return Sample(elapsed_ns=elapsed, work_units=iters)

    def chain_pass(self, spec, executions: int) -> Sample:
        codes = {"add": 0, "mul": 1, "fma": 2, "div": 3}
        if spec.op_kind not in codes:
            raise CapabilityError(
                f"live backend has no chain kernel for {spec.op_kind!r}"
            )
        elapsed = self._timed(
            self._k()["chain_run"], codes[spec.op_kind], spec.chain_len, executions
        )
        return Sample(elapsed_ns=elapsed, work_units=executions)

    def _run_pinned(self, cpus: Sequence[int], worker) -> float:
        """Spawn one pinned thread per cpu; wall time barrier-to-barrier."""
        start = threading.Barrier(len(cpus) + 1)
        done = threading.Barrier(len(cpus) + 1)
        errors: list[Exception] = []

        def wrap(rank: int, cpu: int):
            try:
                pin_current_thread(cpu)
                start.wait()
                worker(rank)
            except Exception as exc:  # propagate to coordinator
                errors.append(exc)
            finally:
                done.wait()

        threads = [
            threading.Thread(target=wrap, args=(rank, cpu), daemon=True)
            for rank, cpu in enumerate(cpus)
        ]
        for t in threads:
            t.start()
        start.wait()
        t0 = self._clock.wall_ns()
        done.wait()
        t1 = self._clock.wall_ns()
        for t in threads:
            t.join()
        if errors:
            raise errors[0]
        return t1 - t0

    def throughput_pass(self, cpus, streams, mix, iters, total_flops) -> Sample:
        loop = self._k()["mad_loop" if mix == "mad" else "mul_loop"]
        loop(streams, 16)  # compile outside the timed region
        results = [0.0] * len(cpus)

        def worker(rank: int):
            results[rank] = loop(streams, iters)

        elapsed = self._run_pinned(cpus, worker)
        global _sink
        _sink += sum(results)
        return Sample(elapsed_ns=elapsed, work_units=total_flops)

    def bandwidth_pass(
        self, kind, cpus, buffer_bytes, shared, software_prefetch
    ) -> Sample:
        if kind == "write_streaming":
            raise CapabilityError(
                "live backend cannot issue streaming stores from Python"
            )
        k = self._k()
        n = buffer_bytes // 8
        a = np.ones(n, dtype=np.float64)
        aux = {}
        if kind in ("scale1", "saxpy1", "saxpy2", "triad"):
            aux["out"] = np.zeros(n if shared else n, dtype=np.float64)
        if kind in ("saxpy1", "triad"):
            aux["y"] = np.ones(n, dtype=np.float64)

        def slice_of(arr, rank):
            if shared:
                return arr
            per = len(arr) // len(cpus)
            return arr[rank * per : (rank + 1) * per]

        def worker(rank: int):
            global _sink
            src = slice_of(a, rank)
            if kind == "read":
                _sink += k["bw_read"](src)
            elif kind == "write":
                _sink += k["bw_write"](src, 1.0)
            elif kind == "scale1":
                _sink += k["bw_scale1"](slice_of(aux["out"], rank), 1.5, src)
            elif kind == "scale2":
                _sink += k["bw_scale2"](src, 1.5)
            elif kind == "saxpy1":
                _sink += k["bw_saxpy1"](
                    slice_of(aux["out"], rank), 1.5, src, slice_of(aux["y"], rank)
                )
            elif kind == "saxpy2":
                _sink += k["bw_saxpy2"](slice_of(aux["out"], rank), 1.5, src)
            elif kind == "triad":
                _sink += k["bw_triad"](
                    slice_of(aux["out"], rank), 1.5, src, slice_of(aux["y"], rank)
                )
            else:
                raise CapabilityError(f"unknown bandwidth kind {kind!r}")

        # compile outside the timed region
        small = np.ones(16, dtype=np.float64)
        k["bw_read"](small)
        elapsed = self._run_pinned(list(cpus), worker)
        useful = USEFUL_BYTES_PER_ELEM[kind] * n
        return Sample(elapsed_ns=elapsed, work_units=useful)

    def striad_pass(self, total_bytes, stanza_elems, jump_elems) -> Sample:
        k = self._k()
        n = total_bytes // 8
        out = np.zeros(n, dtype=np.float64)
        x = np.ones(n, dtype=np.float64)
        y = np.ones(n, dtype=np.float64)
        k["striad_walk"](out[:64], 1.5, x[:64], y[:64], 16, 16)  # compile
        t0 = self._clock.wall_ns()
        touched = k["striad_walk"](out, 1.5, x, y, stanza_elems, jump_elems)
        t1 = self._clock.wall_ns()
        return Sample(elapsed_ns=t1 - t0, work_units=24 * int(touched))

    def math_pass(self, fn, precision, array_len, reps) -> Sample:
        from .backends import eval_math_fn

        rng = np.random.default_rng(12345)
        dtype = np.float32 if precision == "single" else np.float64
        a = rng.random(array_len, dtype=np.float64).astype(dtype)
        global _sink
        t0 = self._clock.wall_ns()
        for _ in range(reps):
            out = eval_math_fn(fn, a, precision)
        t1 = self._clock.wall_ns()
        _sink += float(out[0])
        return Sample(elapsed_ns=t1 - t0, work_units=array_len * reps)

    # -- coherency -------------------------------------------------------

    def run_placement(self, run, phases) -> tuple:
        buf = self._coherency_buffer(run)
        trace = []
        for event in phases:
            cpu = run.owner_cpu if event.actor == "owner" else run.reader_cpu
            self._on_cpu(cpu, self._coherency_action, event.action, buf)
            trace.append(event)
        return tuple(trace)

    def _coherency_buffer(self, run):
        key = (run.owner_cpu, run.reader_cpu, run.working_set_bytes)
        if getattr(self, "_coh_key", None) != key:
            self._coh_key = key
            self._coh_buf = np.ones(run.working_set_bytes // 8, dtype=np.float64)
        return self._coh_buf

    def _coherency_action(self, action, buf):
        global _sink
        k = self._k()
        if action == "read":
            _sink += k["sweep"](buf)
        elif action == "write":
            _sink += k["bw_write"](buf, 2.0)
        else:  # evict
            self.flush_caches()

    def _on_cpu(self, cpu: int, fn, *args):
        error: list[Exception] = []

        def body():
            try:
                pin_current_thread(cpu)
                fn(*args)
            except Exception as exc:
                error.append(exc)

        t = threading.Thread(target=body, daemon=True)
        t.start()
        t.join()
        if error:
            raise error[0]

    def remote_pass(self, run) -> Sample:
        buf = self._coherency_buffer(run)
        k = self._k()
        k["line_walk"](buf[:64], 8)  # compile
        holder: list[float] = []

        def timed_read():
            global _sink
            t0 = self._clock.wall_ns()
            s = k["line_walk"](buf, run.lines)
            t1 = self._clock.wall_ns()
            _sink += s
            holder.append(t1 - t0)

        self._on_cpu(run.reader_cpu, timed_read)
        return Sample(elapsed_ns=holder[0], work_units=run.lines)
