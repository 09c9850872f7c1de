"""Deterministic SVG figures from archprobe JSON reports.

Five figure kinds: latency-vs-stride families, bandwidth-vs-threads,
stanza-triad curve, coherency latency bars, and the datasheet comparison
table.  Output is deterministic for a fixed report: fixed style table,
fixed SVG hash salt, no embedded timestamps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402

SUPPORTED_SCHEMA = "1.0"

FIGURE_KINDS = (
    "stride_family",
    "bandwidth_vs_threads",
    "striad",
    "coherency_bars",
    "comparison_table",
)

# One fixed style table keeps renders byte-reproducible.
STYLE = {
    "colors": ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"],
    "markers": ["o", "s", "^", "v", "D", "x", "+", "*", "<", ">"],
    "figsize": (7.0, 4.5),
    "hashsalt": "plotkit",
}


class PlotkitError(Exception):
    """Base error for figure rendering."""


class SchemaError(PlotkitError):
    """Report schema version not supported."""


class MissingRecordError(PlotkitError):
    """The report lacks the record kind a figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    figure_kind: str
    source: Path
    output: Path
    log_x: bool = True

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise PlotkitError(f"unknown figure kind {self.figure_kind!r}")


def load_report(path: str | Path) -> dict[str, Any]:
    try:
        report = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise PlotkitError(f"cannot read report {path}: {exc}") from exc
    version = report.get("schema_version")
    if version != SUPPORTED_SCHEMA:
        raise SchemaError(
            f"report schema {version!r} not supported (expected {SUPPORTED_SCHEMA!r})"
        )
    if not report.get("results"):
        raise PlotkitError("report contains no result records")
    return report


def _records(report: dict[str, Any], kind: str) -> list[dict[str, Any]]:
    found = [
        r for r in report["results"] if r["kind"] == kind and not r.get("failed")
    ]
    if not found:
        raise MissingRecordError(f"report has no successful {kind!r} record")
    return found


def _style(i: int) -> dict[str, Any]:
    return {
        "color": STYLE["colors"][i % len(STYLE["colors"])],
        "marker": STYLE["markers"][i % len(STYLE["markers"])],
        "markersize": 4,
        "linewidth": 1.2,
    }


def _new_axes():
    fig, ax = plt.subplots(figsize=STYLE["figsize"])
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _pow2_log_axis(ax, values: list[float]) -> None:
    ax.set_xscale("log", base=2)
    ticks = sorted({2 ** round(math.log2(v)) for v in values if v > 0})
    ax.set_xticks(ticks)
    ax.set_xticklabels([str(t) for t in ticks], rotation=45, fontsize=7)
    ax.minorticks_off()


def stride_family_figure(report: dict[str, Any], log_x: bool = True):
    """Latency vs stride, one curve per working-set size."""
    record = _records(report, "chase_grid")[0]
    rows = record["data"]["rows"]  # [size_bytes, stride_bytes, latency_ns]
    sizes = sorted({r[0] for r in rows})
    fig, ax = _new_axes()
    for i, size in enumerate(sizes):
        points = sorted((r[1], r[2]) for r in rows if r[0] == size)
        ax.plot(
            [p[0] for p in points],
            [p[1] for p in points],
            label=f"{size // 1024} KiB",
            **_style(i),
        )
    if log_x:
        _pow2_log_axis(ax, sorted({r[1] for r in rows}))
    ax.set_xlabel("stride (bytes)")
    ax.set_ylabel("latency (ns)")
    ax.set_title("Pointer-chase latency by stride and working-set size")
    ax.legend(fontsize=6, ncol=2)
    return fig


def bandwidth_figure(report: dict[str, Any], log_x: bool = True):
    """Bandwidth vs thread count, one curve per kernel kind / sharing mode."""
    records = _records(report, "bw_curve")
    fig, ax = _new_axes()
    for i, record in enumerate(records):
        rows = record["data"]["rows"]  # [threads, placement, gbps]
        label = record["data"].get("kind", "bw")
        if record["data"].get("shared"):
            label += " (shared)"
        ax.plot([r[0] for r in rows], [r[2] for r in rows], label=label, **_style(i))
    if log_x:
        all_threads = [r[0] for rec in records for r in rec["data"]["rows"]]
        _pow2_log_axis(ax, sorted(set(all_threads)))
    ax.set_xlabel("threads")
    ax.set_ylabel("bandwidth (GB/s)")
    ax.set_title("Memory bandwidth vs thread count")
    ax.legend(fontsize=7)
    return fig


def striad_figure(report: dict[str, Any], log_x: bool = True):
    """Stanza-triad bandwidth vs stanza length."""
    record = _records(report, "striad_curve")[0]
    rows = record["data"]["rows"]  # [stanza_elems, gbps]
    fig, ax = _new_axes()
    ax.plot([r[0] for r in rows], [r[1] for r in rows], **_style(0))
    if log_x:
        _pow2_log_axis(ax, [r[0] for r in rows])
    ax.set_xlabel("stanza length (elements)")
    ax.set_ylabel("bandwidth (GB/s)")
    ax.set_title("Stanza-triad bandwidth vs stanza length")
    return fig


def coherency_figure(report: dict[str, Any], log_x: bool = False):
    """Remote line-transfer latency: grouped bars per reader offset and state."""
    record = _records(report, "coherency")[0]
    rows = record["data"]["rows"]  # [reader_offset, state, cycles]
    offsets = sorted({r[0] for r in rows}, key=lambda s: int(s.lstrip("D+")))
    states = sorted({r[1] for r in rows})
    lookup = {(r[0], r[1]): r[2] for r in rows}
    fig, ax = _new_axes()
    width = 0.8 / len(states)
    for i, state in enumerate(states):
        xs = [j + i * width for j in range(len(offsets))]
        ys = [lookup[(o, state)] for o in offsets]
        ax.bar(xs, ys, width=width, label=state, color=STYLE["colors"][i])
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(offsets))])
    ax.set_xticklabels(offsets)
    ax.set_xlabel("reader core offset")
    ax.set_ylabel("cycles per line")
    ax.set_title("Remote cache-line latency by coherency state")
    ax.legend(fontsize=7)
    return fig


def comparison_figure(report: dict[str, Any], log_x: bool = False):
    """Measured-vs-documented table with verdicts."""
    comparison = report.get("comparison")
    if not comparison:
        raise MissingRecordError("report carries no datasheet comparison")

    def fmt(v):
        return "N/A" if v is None else f"{v:g}"

    cells = [
        [c["metric"], fmt(c["documented"]), fmt(c["measured"]), c["verdict"]]
        for c in comparison
    ]
    fig, ax = plt.subplots(figsize=(6.0, 0.5 + 0.35 * len(cells)))
    ax.axis("off")
    table = ax.table(
        cellText=cells,
        colLabels=["metric", "documented", "measured", "verdict"],
        loc="center",
        cellLoc="center",
    )
    table.scale(1, 1.3)
    ax.set_title("Datasheet comparison")
    return fig


_BUILDERS = {
    "stride_family": stride_family_figure,
    "bandwidth_vs_threads": bandwidth_figure,
    "striad": striad_figure,
    "coherency_bars": coherency_figure,
    "comparison_table": comparison_figure,
}


def render_figures(specs: list[FigureSpec]) -> list[Path]:
    """Render every spec to SVG; returns the written paths.

    All reports are loaded and all figures built before anything is
    written, so an error (missing record, schema mismatch) writes no files.
    """
    plt.rcParams["svg.hashsalt"] = STYLE["hashsalt"]
    reports: dict[Path, dict[str, Any]] = {}
    built = []
    try:
        for spec in specs:
            source = Path(spec.source)
            if source not in reports:
                reports[source] = load_report(source)
            fig = _BUILDERS[spec.figure_kind](reports[source], log_x=spec.log_x)
            built.append((spec, fig))
        written = []
        for spec, fig in built:
            out = Path(spec.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, format="svg", metadata={"Date": None})
            written.append(out)
        return written
    finally:
        for _, fig in built:
            plt.close(fig)
