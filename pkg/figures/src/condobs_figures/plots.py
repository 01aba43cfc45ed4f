"""Multi-panel time-series figures from trace CSVs.

Everything here is presentation only: the numbers come verbatim from the
trace columns, truth overlays are drawn dashed, and the conductance blocks
get the fixed axis ranges used throughout (40..160 for Na, -0.1..1.1 for G).
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from matplotlib.figure import Figure

from .loader import FigureError, TraceData

YLIMITS = {"Na": (40.0, 160.0), "G": (-0.1, 1.1)}
PANEL_LABELS = ("non-distributed", "distributed (A)", "distributed (B)")
FORMATS = ("png", "svg")


def save_figure(fig: Figure, path, fmt: str | None = None):
    """Write the figure, inferring PNG/SVG from the suffix unless given."""
    if fmt is None:
        fmt = str(path).rsplit(".", 1)[-1].lower()
    if fmt not in FORMATS:
        raise FigureError(f"unsupported format {fmt!r}, expected one of {FORMATS}")
    fig.savefig(path, format=fmt, dpi=150)


def plot_voltages(trace: TraceData) -> Figure:
    """One stacked panel per membrane voltage column, mV over ms."""
    cols = trace.columns_matching("v")
    if not cols:
        raise FigureError("trace has no voltage columns (v.*)")
    fig = Figure(figsize=(7.0, 1.8 * len(cols) + 0.8))
    axes = fig.subplots(len(cols), 1, sharex=True, squeeze=False)[:, 0]
    for ax, col in zip(axes, cols):
        ax.plot(trace.t, trace.column(col), lw=0.8)
        ax.set_ylabel(f"{col} (mV)")
    axes[-1].set_xlabel("t (ms)")
    fig.tight_layout()
    return fig


def _truth_series(trace: TraceData, name: str, expr) -> np.ndarray:
    """Truth overlay values: a trace column by default, else an expression."""
    if expr is None:
        return trace.column(f"theta_true.{name}")
    kind = expr.get("kind")
    if kind == "constant":
        return np.full(trace.n_samples, float(expr["value"]))
    if kind == "logistic":
        z = (trace.t - float(expr["t0"])) / float(expr["tau_r"])
        return float(expr["base"]) + float(expr["amp"]) / (1.0 + np.exp(-z))
    raise FigureError(f"unknown truth expression kind {kind!r}")


def plot_estimates(traces: Sequence[TraceData], block: str,
                   truth: Sequence[dict] | None = None,
                   labels: Sequence[str] = PANEL_LABELS) -> Figure:
    """Three stacked panels of one parameter block with dashed truth overlays.

    `traces` holds the non-distributed run and the distributed runs with the
    two gain sets, in that order. `truth` optionally replaces the recorded
    theta_true columns with constant/logistic expressions, one per parameter.
    """
    traces = list(traces)
    if len(traces) != len(labels):
        raise FigureError(f"expected {len(labels)} traces, got {len(traces)}")
    names = [c.removeprefix("theta_hat.")
             for c in traces[0].columns_matching(f"theta_hat.{block}")]
    if not names:
        raise FigureError(f"no theta_hat.{block}.* columns in the first trace")
    for tr in traces[1:]:
        if [c.removeprefix("theta_hat.")
                for c in tr.columns_matching(f"theta_hat.{block}")] != names:
            raise FigureError("traces do not share the parameter columns")
    if truth is not None and len(truth) != len(names):
        raise FigureError(f"need one truth expression per parameter ({len(names)})")

    fig = Figure(figsize=(7.0, 6.4))
    axes = fig.subplots(len(traces), 1, sharex=True, squeeze=False)[:, 0]
    for ax, tr, label in zip(axes, traces, labels):
        for i, name in enumerate(names):
            ax.plot(tr.t, tr.column(f"theta_hat.{name}"), lw=0.8,
                    label=rf"$\hat\mu$ {name}")
            ax.plot(tr.t, _truth_series(tr, name, truth[i] if truth else None),
                    "k--", lw=1.0)
        if block in YLIMITS:
            ax.set_ylim(*YLIMITS[block])
        ax.set_ylabel(label)
    axes[0].legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("t (ms)")
    fig.tight_layout()
    return fig
