"""Time-indexed record of a simulation run, serializable to CSV.

Column names are dotted labels (e.g. ``theta_hat.Na.1``, ``psi.G.2.2``); the
first column is always ``t`` in ms on a uniform grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRACE_SCHEMA_VERSION = 1


class TraceError(ValueError):
    """Raised for missing columns or malformed trace files."""


@dataclass
class Trace:
    columns: list[str]
    data: np.ndarray  # (n_samples, n_columns)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise TraceError("data shape does not match column list")

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
            raise TraceError(f"trace has no column {name!r}") from None

    def columns_matching(self, prefix: str) -> list[str]:
        pre = prefix if prefix.endswith(".") else prefix + "."
        return [c for c in self.columns if c.startswith(pre)]

    def block(self, prefix: str) -> np.ndarray:
        """All columns under a dotted prefix, as (n_samples, k)."""
        names = self.columns_matching(prefix)
        if not names:
            raise TraceError(f"trace has no columns under {prefix!r}")
        idx = [self.columns.index(c) for c in names]
        return self.data[:, idx]

    def psi_blocks(self) -> dict[str, np.ndarray]:
        """Filter matrices Psi_j per type, shape (n_samples, n_rows, n_v).

        Reconstructed from ``psi.<type>.<row>.<col>`` columns; entries never
        recorded (off-diagonals of a diagonal-storage run) are zero.
        """
        entries: dict[str, list[tuple[int, int, int]]] = {}
        for c in self.columns:
            parts = c.split(".")
            if parts[0] != "psi" or len(parts) != 4:
                continue
            tid, r, col = parts[1], int(parts[2]), int(parts[3])
            entries.setdefault(tid, []).append((r, col, self.columns.index(c)))
        if not entries:
            raise TraceError("trace has no psi.<type>.<row>.<col> columns")
        out = {}
        for tid, items in entries.items():
            n_r = max(r for r, _, _ in items)
            n_c = max(c for _, c, _ in items)
            blk = np.zeros((self.n_samples, n_r, n_c))
            for r, c, idx in items:
                blk[:, r - 1, c - 1] = self.data[:, idx]
            out[tid] = blk
        return out

    def save_csv(self, path):
        header = ",".join(self.columns)
        np.savetxt(path, self.data, delimiter=",", header=header, comments="",
                   fmt="%.17g")

    @classmethod
    def load_csv(cls, path) -> "Trace":
        with open(path) as fh:
            header = fh.readline().strip()
        if not header.startswith("t,") and header != "t":
            raise TraceError(f"{path}: not a trace CSV (header must start with 't')")
        columns = header.split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(columns=columns, data=data)
