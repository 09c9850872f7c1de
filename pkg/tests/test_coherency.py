"""Coherency-state placement traces and remote line-transfer latency."""

import pytest

from archprobe.backends import SyntheticBackend
from archprobe.coherency import (
    CoherencyRun,
    CoherencyState,
    TraceEvent,
    place_lines,
    placement_phases,
    remote_latency,
    remote_latency_overall,
)
from archprobe.errors import PlacementError
from archprobe.synthmodel import SyntheticHierarchy


def run_for(state, owner=0, reader=4, ws=65536):
    return CoherencyRun(
        owner_cpu=owner, reader_cpu=reader, state=state, working_set_bytes=ws
    )


def test_run_validation():
    with pytest.raises(ValueError):
        run_for(CoherencyState.MODIFIED, ws=100)  # not a line multiple
    with pytest.raises(ValueError):
        run_for(CoherencyState.MODIFIED, ws=256 * 1024)  # above 128 KB
    assert run_for(CoherencyState.MODIFIED, ws=4096).lines == 64


def test_modified_trace_has_write_and_no_owner_read(synthetic_backend):
    trace = place_lines(run_for(CoherencyState.MODIFIED), synthetic_backend)
    assert TraceEvent("owner", "write", "place") in trace
    assert not any(e.actor == "owner" and e.action == "read" for e in trace)


def test_exclusive_trace_evicts_then_reads(synthetic_backend):
    trace = place_lines(run_for(CoherencyState.EXCLUSIVE), synthetic_backend)
    assert trace == (
        TraceEvent("owner", "evict", "reset"),
        TraceEvent("owner", "read", "place"),
    )


def test_shared_trace_order(synthetic_backend):
    trace = place_lines(run_for(CoherencyState.SHARED), synthetic_backend)
    assert trace == (
        TraceEvent("owner", "read", "place"),
        TraceEvent("reader", "read", "share"),
        TraceEvent("reader", "evict", "share"),
    )


def test_no_writes_outside_modified_placement():
    for state in (CoherencyState.EXCLUSIVE, CoherencyState.SHARED):
        assert not any(e.action == "write" for e in placement_phases(state))


def test_local_placement_request_rejected(synthetic_backend):
    with pytest.raises(PlacementError):
        place_lines(run_for(CoherencyState.MODIFIED, reader=0), synthetic_backend)


def test_remote_latency_recovers_configured_cycles(synthetic_backend):
    cycles = remote_latency(run_for(CoherencyState.MODIFIED), synthetic_backend)
    assert cycles == pytest.approx(250.0, rel=0.02)


def test_remote_latency_state_independent(synthetic_backend):
    values = [
        remote_latency_overall(0, 4, state, synthetic_backend)
        for state in CoherencyState
    ]
    assert max(values) / min(values) <= 1.05


def test_remote_latency_reader_independent(synthetic_backend):
    values = [
        remote_latency(run_for(CoherencyState.MODIFIED, reader=r), synthetic_backend)
        for r in (4, 8, 100, 236)
    ]
    assert len(set(values)) == 1


def test_local_run_degrades_to_local_latency(synthetic_backend):
    small = remote_latency(
        run_for(CoherencyState.MODIFIED, reader=0, ws=4096), synthetic_backend
    )
    assert small == pytest.approx(3.0)  # fits L1
    large = remote_latency(
        run_for(CoherencyState.MODIFIED, reader=0, ws=128 * 1024), synthetic_backend
    )
    assert large == pytest.approx(24.0)  # fits L2


def test_remote_between_local_l2_and_dram(synthetic_backend):
    model = synthetic_backend.model
    remote = remote_latency(run_for(CoherencyState.MODIFIED), synthetic_backend)
    assert model.levels[-1][1] < remote < model.dram_latency_cycles


def test_remote_overall_is_median_over_working_sets(synthetic_backend):
    overall = remote_latency_overall(
        0, 4, CoherencyState.SHARED, synthetic_backend, working_sets=(4096, 65536)
    )
    assert overall == pytest.approx(250.0, rel=0.02)


def test_custom_remote_cost_recovered():
    backend = SyntheticBackend(
        SyntheticHierarchy(
            levels=((32 * 1024, 3.0), (512 * 1024, 24.0)),
            remote_latency_cycles=470.0,
            dram_latency_cycles=600.0,
        )
    )
    cycles = remote_latency(run_for(CoherencyState.EXCLUSIVE), backend)
    assert cycles == pytest.approx(470.0, rel=0.02)
