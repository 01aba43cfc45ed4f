import json

import pytest

from condobs_figures import FigureError, FigureSpec, render


class TestValidation:
    def test_minimal_voltages(self, trace_csv, tmp_path):
        spec = FigureSpec("voltages", (str(trace_csv),),
                          str(tmp_path / "fig.png"))
        assert spec.block is None

    def test_unknown_kind(self):
        with pytest.raises(FigureError, match="figure must be"):
            FigureSpec("scatter", ("a.csv",), "fig.png")

    def test_input_counts(self):
        with pytest.raises(FigureError, match="exactly one"):
            FigureSpec("voltages", ("a.csv", "b.csv"), "fig.png")
        with pytest.raises(FigureError, match="exactly three"):
            FigureSpec("estimates", ("a.csv",), "fig.png", block="Na")

    def test_estimates_needs_block(self):
        with pytest.raises(FigureError, match="block"):
            FigureSpec("estimates", ("a.csv", "b.csv", "c.csv"), "fig.png")

    def test_bad_format(self):
        with pytest.raises(FigureError, match="format"):
            FigureSpec("voltages", ("a.csv",), "fig.gif", format="gif")

    def test_unknown_field(self):
        with pytest.raises(FigureError, match="unknown"):
            FigureSpec.from_dict({"figure": "voltages", "inputs": ["a.csv"],
                                  "output": "f.png", "dpi": 300})

    def test_missing_field(self):
        with pytest.raises(FigureError, match="missing"):
            FigureSpec.from_dict({"figure": "voltages", "inputs": ["a.csv"]})

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text("{not json")
        with pytest.raises(FigureError):
            FigureSpec.from_json(path)
        path.write_text("[1, 2]")
        with pytest.raises(FigureError, match="object"):
            FigureSpec.from_json(path)


class TestRender:
    def test_voltages_from_json(self, trace_csv, tmp_path):
        out = tmp_path / "fig1.png"
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps({
            "figure": "voltages", "inputs": [str(trace_csv)],
            "output": str(out)}))
        assert render(FigureSpec.from_json(spec_path)) == out
        assert out.stat().st_size > 0

    def test_estimates_with_truth_expressions(self, three_csvs, tmp_path):
        out = tmp_path / "fig2.svg"
        spec = FigureSpec.from_dict({
            "figure": "estimates", "inputs": [str(p) for p in three_csvs],
            "block": "Na", "output": str(out), "format": "svg",
            "truth": [{"kind": "constant", "value": 120.0}] * 2})
        render(spec)
        assert out.read_bytes().lstrip().startswith(b"<?xml")

    def test_missing_column_no_file(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,vhat.1\n0.0,1.0\n")
        out = tmp_path / "fig.png"
        with pytest.raises(FigureError):
            render(FigureSpec("voltages", (str(bad),), str(out)))
        assert not out.exists()
