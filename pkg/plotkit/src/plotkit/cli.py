"""Command-line entry point: render figures from a report."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .figures import FIGURE_KINDS, FigureSpec, PlotkitError, render_figures


@click.command()
@click.argument("report", type=click.Path(exists=True))
@click.option(
    "--figures",
    default="all",
    show_default=True,
    help="'all' or a comma-separated subset of: " + ",".join(FIGURE_KINDS),
)
@click.option("--out", default="figures", show_default=True)
@click.option("--linear-x", is_flag=True, help="Use linear instead of log-2 x axes.")
def main(report, figures, out, linear_x):
    """Render publication-quality SVG figures from an archprobe JSON report."""
    kinds = list(FIGURE_KINDS) if figures == "all" else figures.split(",")
    unknown = [k for k in kinds if k not in FIGURE_KINDS]
    if unknown:
        click.echo(f"unknown figure kinds: {', '.join(unknown)}", err=True)
        sys.exit(2)
    out_dir = Path(out)
    specs = [
        FigureSpec(
            figure_kind=kind,
            source=Path(report),
            output=out_dir / f"{kind}.svg",
            log_x=not linear_x,
        )
        for kind in kinds
    ]
    try:
        written = render_figures(specs)
    except PlotkitError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for path in written:
        click.echo(str(path))


if __name__ == "__main__":
    main()
