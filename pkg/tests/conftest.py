"""Shared fixtures: deterministic clocks, stub backends, small topologies."""

from __future__ import annotations

import pytest

from archprobe.backends import SyntheticBackend
from archprobe.synthmodel import SyntheticHierarchy, default_model
from archprobe.topo import CoreGroup, CpuTopology
from support import ACCEPTANCE_LINES, FakeClock


def pytest_terminal_summary(terminalreporter):
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def fake_clock():
    return FakeClock()


@pytest.fixture
def synthetic_backend():
    return SyntheticBackend()


@pytest.fixture
def unit_freq_backend():
    """Synthetic backend at 1 GHz so cycles and ns coincide."""
    return SyntheticBackend(
        SyntheticHierarchy(
            levels=((32 * 1024, 3.0), (512 * 1024, 24.0)), freq_ghz=1.0
        )
    )


@pytest.fixture
def small_topology():
    """2 cores x 2 hw threads."""
    return CpuTopology(
        cores=(
            CoreGroup(core_id=0, hw_threads=(0, 1)),
            CoreGroup(core_id=1, hw_threads=(2, 3)),
        )
    )


@pytest.fixture
def flat_topology():
    """4 cores x 1 hw thread."""
    return CpuTopology(
        cores=tuple(CoreGroup(core_id=c, hw_threads=(c,)) for c in range(4))
    )


def model_with(**kw) -> SyntheticHierarchy:
    """Default model with overrides."""
    from dataclasses import replace

    return replace(default_model(), **kw)
