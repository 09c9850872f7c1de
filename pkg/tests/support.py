"""Test doubles and helpers shared across test modules."""

from __future__ import annotations

# Acceptance criteria append their pass lines here; the terminal-summary hook
# in conftest.py echoes them after the run, outside pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


class FakeClock:
    """Clock advancing a fixed number of ns per wall read."""

    def __init__(self, step_ns: float = 20.0, cycle_rate: float = 1.0):
        self.step_ns = step_ns
        self.cycle_rate = cycle_rate
        self._now = 0.0

    def wall_ns(self) -> float:
        self._now += self.step_ns
        return self._now

    def cycles(self) -> float:
        return self._now * self.cycle_rate
