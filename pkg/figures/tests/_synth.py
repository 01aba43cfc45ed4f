"""Synthetic schema-conforming traces for the figure tests."""

import numpy as np

from condobs_figures.loader import TraceData

PARAMS = ("Na.1", "Na.2", "K.1", "K.2", "G.12", "G.21")


def synthetic_trace(n=60, t_end=1300.0, seed=0) -> TraceData:
    """A small trace with the simulator's column naming."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, t_end, n)
    cols, series = ["t"], [t]
    for c in ("v.1", "v.2", "vmeas.1", "vmeas.2"):
        cols.append(c)
        series.append(-60.0 + 80.0 * np.sin(t / 11.0) + rng.normal(0, 0.1, n))
    truth = {"Na.1": 120.0, "Na.2": 120.0, "K.1": 36.0, "K.2": 36.0}
    for p in PARAMS:
        cols.append(f"theta_hat.{p}")
        if p.startswith("G."):
            series.append(0.5 + 0.05 * rng.normal(size=n))
        else:
            series.append(truth[p] + rng.normal(0, 2.0, n))
    for p in PARAMS:
        cols.append(f"theta_true.{p}")
        if p.startswith("G."):
            sign = 1.0 if p == "G.21" else -1.0
            series.append(0.55 + sign * 0.4 / (1.0 + np.exp(-(t - 750.0) / 100.0)))
        else:
            series.append(np.full(n, truth[p]))
    return TraceData(columns=tuple(cols), data=np.column_stack(series))


def write_trace(trace: TraceData, path):
    header = ",".join(trace.columns)
    np.savetxt(path, trace.data, delimiter=",", header=header, comments="")
    return path
