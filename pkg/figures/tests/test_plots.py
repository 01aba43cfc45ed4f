import numpy as np
import pytest

from condobs_figures import (
    FigureError,
    PANEL_LABELS,
    TraceData,
    YLIMITS,
    plot_estimates,
    plot_voltages,
    save_figure,
)

from _synth import synthetic_trace


def dashed_lines(ax):
    return [ln for ln in ax.get_lines() if ln.get_linestyle() == "--"]


class TestVoltages:
    def test_two_stacked_panels(self, trace):
        fig = plot_voltages(trace)
        assert len(fig.axes) == 2
        assert fig.axes[0].get_ylabel() == "v.1 (mV)"
        assert fig.axes[1].get_ylabel() == "v.2 (mV)"
        assert fig.axes[1].get_xlabel() == "t (ms)"
        np.testing.assert_array_equal(fig.axes[0].get_lines()[0].get_ydata(),
                                      trace.column("v.1"))

    def test_single_sample_is_valid(self, tmp_path, trace):
        fig = plot_voltages(TraceData(trace.columns, trace.data[:1]))
        save_figure(fig, tmp_path / "one.png")
        assert (tmp_path / "one.png").stat().st_size > 0

    def test_missing_voltage_columns(self):
        tr = TraceData(columns=("t", "vhat.1"), data=np.zeros((4, 2)))
        with pytest.raises(FigureError, match="voltage"):
            plot_voltages(tr)


class TestSaveFigure:
    @pytest.mark.parametrize("ext", ["png", "svg"])
    def test_formats(self, tmp_path, trace, ext):
        path = tmp_path / f"fig.{ext}"
        save_figure(plot_voltages(trace), path)
        assert path.stat().st_size > 0

    def test_explicit_format_overrides_suffix(self, tmp_path, trace):
        path = tmp_path / "fig.out"
        save_figure(plot_voltages(trace), path, fmt="svg")
        assert path.read_bytes().lstrip().startswith(b"<?xml")

    def test_unsupported_format(self, tmp_path, trace):
        with pytest.raises(FigureError, match="format"):
            save_figure(plot_voltages(trace), tmp_path / "fig.pdf")
        assert not (tmp_path / "fig.pdf").exists()


class TestEstimates:
    @pytest.fixture
    def traces(self):
        return [synthetic_trace(seed=k) for k in range(3)]

    def test_three_panels_with_labels(self, traces):
        fig = plot_estimates(traces, "Na")
        assert len(fig.axes) == 3
        assert tuple(ax.get_ylabel() for ax in fig.axes) == PANEL_LABELS

    def test_na_axis_range(self, traces):
        fig = plot_estimates(traces, "Na")
        for ax in fig.axes:
            assert ax.get_ylim() == YLIMITS["Na"] == (40.0, 160.0)

    def test_g_axis_range(self, traces):
        fig = plot_estimates(traces, "G")
        for ax in fig.axes:
            assert ax.get_ylim() == YLIMITS["G"] == (-0.1, 1.1)

    def test_unranged_block_autoscale(self, traces):
        fig = plot_estimates(traces, "K")
        assert fig.axes[0].get_ylim() != YLIMITS["Na"]

    def test_dashed_truth_overlays(self, traces):
        fig = plot_estimates(traces, "G")
        for ax, tr in zip(fig.axes, traces):
            dashed = dashed_lines(ax)
            assert len(dashed) == 2  # one per parameter
            ys = {ln.get_ydata()[0]: ln for ln in dashed}
            for p in ("G.12", "G.21"):
                truth = tr.column(f"theta_true.{p}")
                np.testing.assert_array_equal(ys[truth[0]].get_ydata(), truth)

    def test_constant_truth_expression(self, traces):
        truth = [{"kind": "constant", "value": 120.0}] * 2
        fig = plot_estimates(traces, "Na", truth=truth)
        for ln in dashed_lines(fig.axes[0]):
            np.testing.assert_array_equal(ln.get_ydata(),
                                          np.full(traces[0].n_samples, 120.0))

    def test_logistic_truth_expression(self, traces):
        truth = [{"kind": "logistic", "base": 0.75, "amp": -0.4,
                  "t0": 750.0, "tau_r": 100.0},
                 {"kind": "logistic", "base": 0.25, "amp": 0.4,
                  "t0": 750.0, "tau_r": 100.0}]
        fig = plot_estimates(traces, "G", truth=truth)
        t = traces[0].t
        down, up = (ln.get_ydata() for ln in dashed_lines(fig.axes[0]))
        assert down[0] > down[-1] and up[0] < up[-1]
        mid = np.argmin(np.abs(t - 750.0))
        assert down[mid] == pytest.approx(0.55, abs=0.02)

    def test_bad_truth(self, traces):
        with pytest.raises(FigureError, match="kind"):
            plot_estimates(traces, "Na", truth=[{"kind": "spline"}] * 2)
        with pytest.raises(FigureError, match="per parameter"):
            plot_estimates(traces, "Na",
                           truth=[{"kind": "constant", "value": 1.0}])

    def test_wrong_trace_count(self, traces):
        with pytest.raises(FigureError, match="expected 3"):
            plot_estimates(traces[:2], "Na")

    def test_unknown_block(self, traces):
        with pytest.raises(FigureError, match="theta_hat.Ca"):
            plot_estimates(traces, "Ca")

    def test_mismatched_columns(self, traces):
        keep = [i for i, c in enumerate(traces[2].columns)
                if c != "theta_hat.Na.2"]
        traces[2] = TraceData(tuple(traces[2].columns[i] for i in keep),
                              traces[2].data[:, keep])
        with pytest.raises(FigureError, match="share"):
            plot_estimates(traces, "Na")

    def test_missing_truth_column(self, traces):
        keep = [i for i, c in enumerate(traces[0].columns)
                if c != "theta_true.Na.1"]
        traces[0] = TraceData(tuple(traces[0].columns[i] for i in keep),
                              traces[0].data[:, keep])
        with pytest.raises(FigureError, match="theta_true.Na.1"):
            plot_estimates(traces, "Na")
