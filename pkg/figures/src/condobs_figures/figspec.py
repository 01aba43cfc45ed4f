"""Declarative figure descriptions loaded from JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .loader import FigureError, load_trace
from .plots import FORMATS, plot_estimates, plot_voltages, save_figure

_KINDS = ("voltages", "estimates")
_FIELDS = {"figure", "inputs", "block", "truth", "output", "format"}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw, from which CSVs, and where to write it."""

    figure: str
    inputs: tuple[str, ...]
    output: str
    block: str | None = None
    truth: tuple[dict, ...] | None = None
    format: str | None = None

    def __post_init__(self):
        if self.figure not in _KINDS:
            raise FigureError(f"figure must be one of {_KINDS}")
        if self.figure == "voltages" and len(self.inputs) != 1:
            raise FigureError("voltages takes exactly one input CSV")
        if self.figure == "estimates":
            if len(self.inputs) != 3:
                raise FigureError("estimates takes exactly three input CSVs")
            if not self.block:
                raise FigureError("estimates needs a parameter block")
        if self.format is not None and self.format not in FORMATS:
            raise FigureError(f"format must be one of {FORMATS}")

    @classmethod
    def from_dict(cls, d: dict) -> "FigureSpec":
        unknown = set(d) - _FIELDS
        if unknown:
            raise FigureError(f"unknown figure-spec field(s): {sorted(unknown)}")
        try:
            return cls(
                figure=d["figure"],
                inputs=tuple(str(p) for p in d["inputs"]),
                output=str(d["output"]),
                block=d.get("block"),
                truth=tuple(d["truth"]) if d.get("truth") is not None else None,
                format=d.get("format"))
        except KeyError as exc:
            raise FigureError(f"figure spec is missing {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "FigureSpec":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FigureError(f"{path}: {exc}") from exc
        if not isinstance(d, dict):
            raise FigureError(f"{path}: figure spec must be a JSON object")
        return cls.from_dict(d)


def render(spec: FigureSpec) -> Path:
    """Load the inputs, draw the figure, write the file, return its path."""
    traces = [load_trace(p) for p in spec.inputs]
    if spec.figure == "voltages":
        fig = plot_voltages(traces[0])
    else:
        fig = plot_estimates(traces, spec.block, truth=spec.truth)
    out = Path(spec.output)
    save_figure(fig, out, spec.format)
    return out
