import numpy as np
import pytest

from condobs.analysis import (
    AnalysisError,
    assumption_ii_check,
    compare_runs,
    error_metrics,
    pe_check,
    run_metrics,
)
from condobs.observer import GainSchedule
from condobs.trace import Trace


def _grid(t_end=10.0, n=2001):
    return np.linspace(0.0, t_end, n)


class TestPECheck:
    def test_zero_filter_fails(self):
        t = _grid()
        rep = pe_check((t, {"X": np.zeros((t.size, 1, 1))}), T=2.0)
        assert rep.types["X"].delta == 0.0
        assert not rep.passed

    def test_constant_scalar_integral(self):
        t = _grid()
        c, T = 1.7, 2.0
        psi = np.full((t.size, 1, 1), c)
        rep = pe_check((t, {"X": psi}), T=T)
        assert rep.types["X"].delta == pytest.approx(c * c * T, rel=1e-9)
        assert rep.types["X"].delta_bar == pytest.approx(c * c * T, rel=1e-9)
        assert rep.passed

    def test_sine_over_one_period(self):
        omega = 2.0 * np.pi / 4.0          # period 4 ms
        t = np.linspace(0.0, 20.0, 20001)
        psi = np.sin(omega * t).reshape(-1, 1, 1)
        rep = pe_check((t, {"X": psi}), T=4.0)
        # integral of sin^2 over one period is pi / omega
        assert rep.types["X"].delta == pytest.approx(np.pi / omega, rel=1e-4)

    def test_min_leq_max_and_nonnegative(self):
        rng = np.random.default_rng(0)
        t = _grid()
        psi = rng.standard_normal((t.size, 2, 2))
        rep = pe_check((t, {"X": psi}), T=2.0)
        tp = rep.types["X"]
        assert 0.0 <= tp.delta <= tp.delta_bar

    def test_window_must_fit(self):
        t = _grid(t_end=1.0)
        with pytest.raises(AnalysisError):
            pe_check((t, {"X": np.ones((t.size, 1, 1))}), T=5.0)


class TestAssumptionII:
    def test_two_block_hand_case(self):
        # psi_1 = psi_2 = 1, all gains gamma, both alphas alpha:
        # M = alpha I - gamma * ones(2,2), lambda_max = alpha
        t = _grid()
        gamma, alpha = 2.0, 0.15
        blocks = {"X": np.ones((t.size, 1, 1)), "Y": np.ones((t.size, 1, 1))}
        gains = GainSchedule(gamma, (gamma, gamma), (alpha, alpha))
        rep = assumption_ii_check((t, blocks), gains, T=2.0, beta=0.01,
                                  delta=(1.0, 1.0))
        assert rep.lhs == pytest.approx(alpha, rel=1e-9)
        np.testing.assert_allclose(rep.lambda_max_series, alpha, rtol=1e-9)

    def test_small_a_limit_is_nonpositive(self):
        rng = np.random.default_rng(1)
        t = _grid()
        blocks = {"X": rng.standard_normal((t.size, 2, 2)),
                  "Y": rng.standard_normal((t.size, 2, 2))}
        gains = GainSchedule(2.0, (2.0, 2.0), (0.15, 0.15))
        rep = assumption_ii_check((t, blocks), gains, T=2.0, beta=0.01,
                                  delta=(1.0, 1.0), alpha=(0.0, 0.0))
        assert rep.lhs <= 1e-10
        assert not rep.pe_failed

    def test_monotone_in_gamma0(self):
        rng = np.random.default_rng(2)
        t = _grid()
        smooth = np.cumsum(rng.standard_normal((t.size, 2, 2)), axis=0) * 0.01
        blocks = {"X": smooth}
        prev = np.inf
        for g0 in (0.5, 1.0, 2.0, 4.0, 8.0):
            gains = GainSchedule(g0, (g0,), (0.01,))
            rep = assumption_ii_check((t, blocks), gains, T=2.0, beta=0.005,
                                      delta=(1.0,))
            assert rep.lhs <= prev + 1e-12
            prev = rep.lhs

    def test_zero_excitation_flagged(self):
        t = _grid()
        gains = GainSchedule(2.0, (2.0,), (0.15,))
        rep = assumption_ii_check((t, {"X": np.zeros((t.size, 1, 1))}), gains,
                                  T=2.0, beta=0.01, delta=(1.0,))
        assert rep.pe_failed and not rep.passed

    def test_input_validation(self):
        t = _grid()
        blocks = {"X": np.ones((t.size, 1, 1))}
        gains = GainSchedule(2.0, (2.0,), (0.15,))
        with pytest.raises(AnalysisError):
            assumption_ii_check((t, blocks), gains, T=2.0, beta=0.0, delta=(1.0,))
        with pytest.raises(AnalysisError):
            assumption_ii_check((t, blocks), gains, T=2.0, beta=0.01, delta=(1.0, 1.0))
        with pytest.raises(AnalysisError):
            assumption_ii_check((t, blocks), GainSchedule(2.0, (2.0, 2.0), (0.1, 0.1)),
                                T=2.0, beta=0.01, delta=(1.0, 1.0))


def _estimate_trace(t, hat, true):
    cols = ["t", "theta_hat.K.1", "theta_true.K.1"]
    return Trace(columns=cols, data=np.column_stack([t, hat, true]))


class TestErrorMetrics:
    def test_exact_estimate(self):
        t = _grid()
        tr = _estimate_trace(t, np.full(t.size, 36.0), np.full(t.size, 36.0))
        em = error_metrics(tr)
        np.testing.assert_array_equal(em.rel_error["K.1"], 0.0)
        assert em.final_mean["K.1"] == 0.0
        assert em.rate["K.1"] is None

    def test_synthetic_exponential_rate(self):
        t = _grid(t_end=50.0, n=5001)
        lam = 0.23
        true = np.full(t.size, 2.0)
        hat = true + 0.8 * np.exp(-lam * t)
        em = error_metrics(_estimate_trace(t, hat, true), rate_window=(0.0, 50.0))
        assert em.rate["K.1"] == pytest.approx(-lam, rel=0.01)

    def test_floor_guards_zero_truth(self):
        t = _grid()
        em = error_metrics(_estimate_trace(t, np.full(t.size, 0.5), np.zeros(t.size)))
        assert np.all(np.isfinite(em.rel_error["K.1"]))
        assert em.final_mean["K.1"] == pytest.approx(0.5 / 1e-9, rel=1e-9)

    def test_final_window_mean(self):
        t = _grid(t_end=100.0, n=1001)
        hat = np.where(t < 90.0, 99.0, 1.02)
        em = error_metrics(_estimate_trace(t, hat, np.ones(t.size)),
                           final_window=10.0)
        assert em.final_mean["K.1"] == pytest.approx(0.02, rel=1e-2)

    def test_requires_estimates(self):
        t = _grid()
        with pytest.raises(AnalysisError):
            error_metrics(Trace(columns=["t", "v.1"],
                                data=np.column_stack([t, t])))


class TestCompareRuns:
    def test_identical_traces(self):
        t = _grid()
        tr = _estimate_trace(t, 30 + np.sin(t), np.full(t.size, 30.0))
        rep = compare_runs(tr, tr)
        assert rep.a.to_dict() == rep.b.to_dict()

    def test_constant_trace_metrics(self):
        t = _grid()
        m = run_metrics(_estimate_trace(t, np.full(t.size, 5.0), np.full(t.size, 5.0)))
        assert m.transient_peak["K.1"] == 0.0
        assert m.oscillation_score["K.1"] == 0
        assert m.settling_time["K.1"] == t[0]

    def test_oscillation_count(self):
        t = np.linspace(0.0, 40.0, 4001)
        x = np.sin(2 * np.pi * t / 20.0)          # two full periods
        m = run_metrics(_estimate_trace(t, x, np.zeros(t.size)), osc_skip=0.0)
        assert m.oscillation_score["K.1"] == 4    # slope flips twice per period

    def test_transient_peak_and_settling(self):
        t = _grid(t_end=100.0, n=1001)
        x = 10.0 * np.exp(-t / 5.0)
        m = run_metrics(_estimate_trace(t, x, np.zeros(t.size)), settle_tol=0.1)
        assert m.transient_peak["K.1"] == pytest.approx(10.0 - x[-1], rel=1e-9)
        expect = 5.0 * np.log(10.0 / 0.1)
        assert m.settling_time["K.1"] == pytest.approx(expect, abs=0.2)

    def test_grid_mismatch(self):
        ta, tb = _grid(), _grid(t_end=20.0)
        tr_a = _estimate_trace(ta, ta, ta)
        tr_b = _estimate_trace(tb, tb, tb)
        with pytest.raises(AnalysisError):
            compare_runs(tr_a, tr_b)
