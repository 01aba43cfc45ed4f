"""Figure rendering for simulation trace CSVs (presentation only)."""

from .figspec import FigureSpec, render
from .loader import FigureError, TraceData, load_trace
from .plots import (
    FORMATS,
    PANEL_LABELS,
    YLIMITS,
    plot_estimates,
    plot_voltages,
    save_figure,
)

__version__ = "0.1.0"

__all__ = [
    "FORMATS",
    "FigureError",
    "FigureSpec",
    "PANEL_LABELS",
    "TraceData",
    "YLIMITS",
    "load_trace",
    "plot_estimates",
    "plot_voltages",
    "render",
    "save_figure",
]
