"""Machine-readable suite reports.

A report carries the environment (backend, calibration, topology digest,
seed), one tagged result record per benchmark with its full parameter
set, and optionally the inferred machine model plus the datasheet
comparison.  JSON output is UTF-8 with stable key order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .analysis import DatasheetClaim, MachineModel
from .errors import ReportError
from .topo import CpuTopology

SCHEMA_VERSION = "1.0"


@dataclass
class ResultRecord:
    kind: str
    params: dict[str, Any]
    data: dict[str, Any] = field(default_factory=dict)
    failed: bool = False
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.params,
            "data": self.data,
            "failed": self.failed,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ResultRecord":
        return cls(
            kind=d["kind"],
            params=d["params"],
            data=d.get("data", {}),
            failed=d.get("failed", False),
            error=d.get("error"),
        )


def topology_digest(topology: CpuTopology) -> str:
    text = ";".join(
        f"{c.core_id}:{','.join(map(str, c.hw_threads))}" for c in topology.cores
    )
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def model_to_dict(model: MachineModel) -> dict[str, Any]:
    return asdict(model)


def claims_to_dicts(claims: Iterable[DatasheetClaim]) -> list[dict[str, Any]]:
    return [
        {
            "metric": c.metric,
            "documented": c.documented,
            "measured": c.measured,
            "verdict": c.verdict.value,
        }
        for c in claims
    ]


@dataclass
class Report:
    environment: dict[str, Any]
    results: list[ResultRecord] = field(default_factory=list)
    model: dict[str, Any] | None = None
    comparison: list[dict[str, Any]] | None = None
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "environment": self.environment,
            "results": [r.to_dict() for r in self.results],
            "model": self.model,
            "comparison": self.comparison,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Report":
        if "schema_version" not in d:
            raise ReportError("missing schema_version")
        return cls(
            schema_version=d["schema_version"],
            environment=d["environment"],
            results=[ResultRecord.from_dict(r) for r in d["results"]],
            model=d.get("model"),
            comparison=d.get("comparison"),
        )

    @classmethod
    def from_json(cls, text: str) -> "Report":
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ReportError(f"cannot parse report: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "Report":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")
        return path


def _comparison_markdown(comparison: list[dict[str, Any]]) -> str:
    def fmt(v):
        return "N/A" if v is None else f"{v:g}"

    lines = [
        "| metric | documented | measured | verdict |",
        "| --- | --- | --- | --- |",
    ]
    for row in comparison:
        lines.append(
            f"| {row['metric']} | {fmt(row['documented'])} "
            f"| {fmt(row['measured'])} | {row['verdict']} |"
        )
    return "\n".join(lines)


def emit_report(
    report: Report, formats: set[str], out_dir: str | Path
) -> list[Path]:
    """Write one structured file per format; csv gets one file per record."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output dir {out}: {exc}") from exc

    unknown = formats - {"json", "csv", "markdown"}
    if unknown:
        raise ReportError(f"unknown report formats: {sorted(unknown)}")

    written: list[Path] = []
    if "json" in formats:
        written.append(report.save(out / "report.json"))

    if "csv" in formats:
        for i, record in enumerate(report.results):
            columns = record.data.get("columns")
            rows = record.data.get("rows")
            if columns is None or rows is None:
                continue
            path = out / f"record_{i:02d}_{record.kind}.csv"
            lines = [",".join(columns)]
            lines += [",".join(str(v) for v in row) for row in rows]
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)

    if "markdown" in formats:
        md = [f"# archprobe report (schema {report.schema_version})", ""]
        env = report.environment
        md.append(f"- backend: {env.get('backend')}")
        md.append(f"- timestamp: {env.get('timestamp')}")
        md.append(f"- records: {len(report.results)}")
        if report.comparison is not None:
            md += ["", "## Datasheet comparison", "", _comparison_markdown(report.comparison)]
        path = out / "report.md"
        path.write_text("\n".join(md) + "\n", encoding="utf-8")
        written.append(path)

    return written
