"""Figure rendering for episode traces and metric reports."""

from .io import (
    METRIC_NAMES,
    ReportFormatError,
    Trace,
    TraceFormatError,
    load_report_series,
    load_trace,
)
from .radar import render_radar
from .timeline import render_timeline

__version__ = "0.1.0"

__all__ = [
    "METRIC_NAMES",
    "ReportFormatError",
    "Trace",
    "TraceFormatError",
    "load_report_series",
    "load_trace",
    "render_radar",
    "render_timeline",
    "__version__",
]
