"""Minimal reader for simulation trace CSVs.

This package renders figures only; it never imports the simulator. The
contract is the trace CSV itself: a header row of dotted column names
starting with "t", then one float row per recorded sample.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np


class FigureError(ValueError):
    """Raised for unusable traces, missing columns, or bad figure specs."""


@dataclass(frozen=True)
class TraceData:
    """Columns and a (n_samples, n_columns) float array."""

    columns: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise FigureError("data shape does not match the column list")
        if "t" not in self.columns:
            raise FigureError("trace has no time column")

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    def has_column(self, name: str) -> bool:
        return name in self.columns

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise FigureError(f"trace has no column {name!r}") from None

    def columns_matching(self, prefix: str) -> list[str]:
        dotted = prefix + "."
        return [c for c in self.columns if c.startswith(dotted)]


def load_trace(path) -> TraceData:
    """Read a trace CSV. An empty trace (header only) is an error."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header or not header.split(",")[0] == "t":
            raise FigureError(f"{path}: not a trace CSV (header must start with t)")
        columns = tuple(header.split(","))
        body = fh.read()
        if not body.strip():
            raise FigureError(f"{path}: trace has no samples")
        try:
            data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
        except ValueError as exc:
            raise FigureError(f"{path}: {exc}") from exc
    if data.shape[1] != len(columns):
        raise FigureError(f"{path}: row width does not match header")
    return TraceData(columns=columns, data=data)
