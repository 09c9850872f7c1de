"""plotkit: deterministic SVG figures from archprobe JSON reports."""

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    MissingRecordError,
    PlotkitError,
    SchemaError,
    load_report,
    render_figures,
)

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "MissingRecordError",
    "PlotkitError",
    "SchemaError",
    "load_report",
    "render_figures",
]
