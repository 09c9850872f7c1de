"""Suite runner semantics and the command-line interface."""

import json
import re
from pathlib import Path

import pytest
from click.testing import CliRunner

from archprobe import cli
from archprobe.cli import SuitePlan, default_suite_plan, run_suite, validate_plan
from archprobe.backends import get_backend
from archprobe.errors import ValidationError
from archprobe.reporting import Report


def test_validate_plan_catches_bad_params():
    plan = SuitePlan(
        benchmarks=(
            ("chase", {"size_bytes": 4096, "stride_bytes": 64}),
            ("chase", {"size_bytes": 4096, "stride_bytes": 12}),
            ("bw_curve", {"kind": "teleport"}),
        )
    )
    with pytest.raises(ValidationError) as e:
        validate_plan(plan, get_backend("synthetic"))
    assert len(e.value.problems) == 2


def test_unknown_benchmark_kind_rejected():
    plan = SuitePlan(benchmarks=(("dance", {}),))
    with pytest.raises(ValidationError):
        validate_plan(plan, get_backend("synthetic"))


def test_run_suite_success(tmp_path):
    plan = SuitePlan(
        benchmarks=(
            ("chase", {"size_bytes": 16 * 1024, "stride_bytes": 64}),
            ("inst", {"ops": ["fma"]}),
        ),
        output_dir=tmp_path,
    )
    report, code = run_suite(plan)
    assert code == 0
    assert len(report.results) == 2
    assert not any(r.failed for r in report.results)
    on_disk = Report.load(tmp_path / "report.json")
    assert len(on_disk.results) == 2


def test_run_suite_validation_failure_runs_nothing(tmp_path):
    plan = SuitePlan(
        benchmarks=(
            ("chase", {"size_bytes": 16 * 1024, "stride_bytes": 64}),
            ("chase", {"size_bytes": 12, "stride_bytes": 8}),
        ),
        output_dir=tmp_path,
    )
    with pytest.raises(ValidationError):
        run_suite(plan)
    assert not (tmp_path / "report.json").exists()


def test_run_suite_marks_failed_record_and_exits_3(tmp_path):
    plan = SuitePlan(
        benchmarks=(
            # iters too small: net elapsed under 100x timer resolution
            ("chase", {"size_bytes": 16 * 1024, "stride_bytes": 64, "iters": 10}),
            ("inst", {"ops": ["fma"]}),
        ),
        output_dir=tmp_path,
    )
    report, code = run_suite(plan)
    assert code == 3
    assert report.results[0].failed
    assert report.results[0].error
    assert not report.results[1].failed  # suite continued


def test_interrupted_suite_leaves_partial_report(tmp_path, monkeypatch):
    calls = {"n": 0}
    orig = cli.BENCHMARKS["inst"]

    def crashing_runner(params, backend, protocol, seed):
        calls["n"] += 1
        if calls["n"] == 3:
            raise KeyboardInterrupt  # not an ArchprobeError: a real crash
        return orig[1](params, backend, protocol, seed)

    monkeypatch.setitem(cli.BENCHMARKS, "inst", (orig[0], crashing_runner))
    plan = SuitePlan(
        benchmarks=tuple(("inst", {"ops": ["fma"]}) for _ in range(5)),
        output_dir=tmp_path,
    )
    with pytest.raises(KeyboardInterrupt):
        run_suite(plan)
    on_disk = Report.load(tmp_path / "report.json")
    assert len(on_disk.results) == 2  # exactly the benchmarks that completed


def test_default_suite_builds_model_and_round_trips(tmp_path):
    plan = default_suite_plan(output_dir=tmp_path)
    report, code = run_suite(plan)
    assert code == 0
    model = report.model
    assert model is not None
    assert [lvl["capacity_bytes"] for lvl in model["cache_levels"]] == [32768, 524288]
    assert model["line_size_bytes"] == 64
    assert model["dram_latency_cycles"] == pytest.approx(302.0, rel=0.05)
    assert model["read_peak_gbps"] == 164.0
    assert model["core_count"] == 60


def strip_timestamp(text: str) -> str:
    return re.sub(r'"timestamp": "[^"]*"', '"timestamp": "X"', text)


def test_suite_determinism_modulo_timestamp(tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    run_suite(default_suite_plan(output_dir=a_dir))
    run_suite(default_suite_plan(output_dir=b_dir))
    a = strip_timestamp((a_dir / "report.json").read_text(encoding="utf-8"))
    b = strip_timestamp((b_dir / "report.json").read_text(encoding="utf-8"))
    assert a == b


def test_cli_chase_subcommand(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        ["chase", "--size", str(16 * 1024), "--stride", "64", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0
    report = Report.load(tmp_path / "report.json")
    assert report.results[0].kind == "chase"
    assert report.results[0].data["ns_per_access"] == pytest.approx(3.0 / 1.05)


def test_cli_invalid_params_exit_2(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        ["chase", "--size", "4096", "--stride", "4096", "--out", str(tmp_path)],
    )
    assert result.exit_code == 2
    assert "validation failed" in result.output


def test_cli_bw_subcommand(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        ["bw", "--kind", "read", "--threads", "1,2,4", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0
    report = Report.load(tmp_path / "report.json")
    rows = report.results[0].data["rows"]
    assert [r[2] for r in rows] == [4.7, 9.4, 18.8]


def test_cli_throughput_and_inst(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        ["throughput", "--threads", "240", "--streams", "1", "--out", str(tmp_path)],
    )
    assert result.exit_code == 0
    report = Report.load(tmp_path / "report.json")
    assert report.results[0].data["rows"][0][3] == pytest.approx(1008.0, rel=0.01)

    result = runner.invoke(cli.main, ["inst", "--ops", "fma", "--out", str(tmp_path)])
    assert result.exit_code == 0
    report = Report.load(tmp_path / "report.json")
    assert report.results[0].data["rows"][0][1] == pytest.approx(4.0)


def test_cli_coherency_math_striad(tmp_path):
    runner = CliRunner()
    for args in (
        ["coherency", "--reader-offsets", "1,2"],
        ["math", "--fns", "exp_e"],
        ["striad", "--stanzas", "16,256"],
    ):
        result = runner.invoke(cli.main, args + ["--out", str(tmp_path)])
        assert result.exit_code == 0, result.output


def test_cli_env_var_overrides_out(tmp_path, monkeypatch):
    env_dir = tmp_path / "from-env"
    monkeypatch.setenv("ARCHPROBE_OUT", str(env_dir))
    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        ["chase", "--size", "16384", "--stride", "64", "--out", str(tmp_path / "flag")],
    )
    assert result.exit_code == 0
    assert (env_dir / "report.json").exists()
    assert not (tmp_path / "flag").exists()


def test_cli_formats_emitted(tmp_path):
    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        [
            "bw", "--threads", "1,2", "--out", str(tmp_path),
            "--format", "json,csv,markdown",
        ],
    )
    assert result.exit_code == 0
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "report.md").exists()
    assert list(tmp_path.glob("*.csv"))


def test_cli_suite_with_datasheet(tmp_path):
    from archprobe.synthmodel import default_claims_path

    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        [
            "suite", "--out", str(tmp_path),
            "--datasheet", str(default_claims_path()),
        ],
    )
    assert result.exit_code == 0
    report = Report.load(tmp_path / "report.json")
    verdicts = {c["metric"]: c["verdict"] for c in report.comparison}
    assert verdicts == {
        "l1_latency": "mismatch",
        "l2_latency": "mismatch",
        "dram_latency": "undocumented",
        "peak_gflops": "match",
    }


def test_cli_report_reemission(tmp_path):
    runner = CliRunner()
    src = tmp_path / "src"
    result = runner.invoke(
        cli.main, ["bw", "--threads", "1,2", "--out", str(src)]
    )
    assert result.exit_code == 0
    dst = tmp_path / "dst"
    result = runner.invoke(
        cli.main,
        ["report", str(src / "report.json"), "--out", str(dst), "--format", "csv,markdown"],
    )
    assert result.exit_code == 0
    assert (dst / "report.md").exists()
    assert list(dst.glob("*.csv"))


def test_cli_compare_subcommand(tmp_path):
    from archprobe.synthmodel import default_claims_path

    runner = CliRunner()
    suite_dir = tmp_path / "suite"
    result = runner.invoke(cli.main, ["suite", "--out", str(suite_dir)])
    assert result.exit_code == 0
    result = runner.invoke(
        cli.main,
        ["compare", str(suite_dir / "report.json"), str(default_claims_path())],
    )
    assert result.exit_code == 0
    assert "l2_latency" in result.output
    assert "mismatch" in result.output


def test_cli_synthetic_backend_with_custom_model(tmp_path):
    model_file = tmp_path / "m.model"
    model_file.write_text(
        "l1_capacity = 16384 bytes\nl1_latency = 2 cycles\nfreq = 1.0 ghz\n"
    )
    runner = CliRunner()
    result = runner.invoke(
        cli.main,
        [
            "chase", "--size", "8192", "--stride", "64",
            "--backend", f"synthetic:{model_file}", "--out", str(tmp_path),
        ],
    )
    assert result.exit_code == 0
    report = Report.load(tmp_path / "report.json")
    assert report.results[0].data["ns_per_access"] == pytest.approx(2.0)


def test_records_carry_full_params(tmp_path):
    plan = SuitePlan(
        benchmarks=(("chase", {"size_bytes": 16 * 1024, "stride_bytes": 64}),),
        output_dir=tmp_path,
    )
    report, _ = run_suite(plan)
    assert report.results[0].params == {"size_bytes": 16 * 1024, "stride_bytes": 64}
    env = report.environment
    assert {"timestamp", "backend", "calibration", "topology_digest", "seed"} <= set(env)
