"""Golden report fixture produced through the archprobe CLI."""

import os
import subprocess

import pytest

# Acceptance tests append their pass lines here; echoed after the run,
# outside pytest's output capture.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def report_pass():
    def _record(criterion: str) -> None:
        ACCEPTANCE_LINES.append(f"ACCEPTANCE PASS: {criterion}")

    return _record


@pytest.fixture(scope="session")
def golden_report(tmp_path_factory):
    """A full synthetic-suite report with a datasheet comparison."""
    out = tmp_path_factory.mktemp("golden")
    claims = out / "datasheet.claims"
    claims.write_text(
        "l1_latency = 1 cycles\n"
        "l2_latency = 11 cycles\n"
        "dram_latency = n/a cycles\n"
        "peak_gflops = 1008 gflops\n"
    )
    env = {k: v for k, v in os.environ.items() if k != "ARCHPROBE_OUT"}
    subprocess.run(
        ["archprobe", "suite", "--out", str(out), "--datasheet", str(claims)],
        check=True,
        env=env,
    )
    return out / "report.json"
