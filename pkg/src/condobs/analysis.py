"""Excitation diagnostics and estimation-quality metrics over recorded traces.

All checks work on the decimated recording grid; windowed integrals use the
trapezoidal rule. Inputs are either a Trace or the per-type filter blocks it
contains (``psi_blocks``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .observer import GainSchedule
from .trace import Trace

_EIG_SLACK = 1e-10  # Gram integrals are PSD up to roundoff


class AnalysisError(ValueError):
    """Raised for windows longer than the trace or mismatched inputs."""


# --------------------------------------------------------------------------
# Persistent excitation (windowed Gram integrals of each filter block)

@dataclass(frozen=True)
class TypePE:
    """Excitation summary for one current type."""

    delta: float       # worst-case lambda_min of the windowed Gram integral
    delta_bar: float   # best-case lambda_max
    passed: bool

    def to_dict(self) -> dict:
        return {"delta": self.delta, "delta_bar": self.delta_bar, "passed": self.passed}


@dataclass(frozen=True)
class PEReport:
    window: float
    threshold: float
    types: dict[str, TypePE]

    @property
    def passed(self) -> bool:
        return all(tp.passed for tp in self.types.values())

    def to_dict(self) -> dict:
        return {
            "window_ms": self.window,
            "threshold": self.threshold,
            "passed": self.passed,
            "types": {tid: tp.to_dict() for tid, tp in self.types.items()},
        }


def _as_psi_blocks(trace) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    if isinstance(trace, Trace):
        return trace.t, trace.psi_blocks()
    t, blocks = trace
    return np.asarray(t, dtype=float), {k: np.asarray(b, dtype=float) for k, b in blocks.items()}


def _window_samples(t: np.ndarray, T: float) -> int:
    if t.size < 2:
        raise AnalysisError("trace too short for windowed analysis")
    dt_rec = t[1] - t[0]
    k = int(round(T / dt_rec))
    if k < 1 or k > t.size - 1:
        raise AnalysisError(f"window {T} ms does not fit the {t[-1] - t[0]} ms trace")
    return k


def _checked_eigvalsh(mats: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvalsh(0.5 * (mats + np.swapaxes(mats, -1, -2)))
    if np.any(eig < -_EIG_SLACK * max(1.0, float(np.abs(eig).max()))):
        raise AnalysisError("Gram integral lost positive semidefiniteness")
    return np.clip(eig, 0.0, None)


def pe_check(trace, T: float, threshold: float = 1e-12) -> PEReport:
    """Windowed persistent-excitation check of each filter block.

    For every window start on the recorded grid, integrates Psi_j Psi_j^T
    over [t, t+T] by trapezoid and takes eigenvalue extrema; delta_j is the
    worst-case smallest eigenvalue over all starts.
    """
    t, blocks = _as_psi_blocks(trace)
    k = _window_samples(t, T)
    types = {}
    for tid, psi in blocks.items():
        gram = psi @ np.swapaxes(psi, 1, 2)            # (S, n_j, n_j)
        cum = cumulative_trapezoid(gram, t, axis=0, initial=0.0)
        win = cum[k:] - cum[:-k]                       # integral over each window
        eig = _checked_eigvalsh(win)
        delta = float(eig[:, 0].min())
        delta_bar = float(eig[:, -1].max())
        types[tid] = TypePE(delta, delta_bar, delta > threshold)
    return PEReport(window=T, threshold=threshold, types=types)


# --------------------------------------------------------------------------
# Assumption-II style gain condition

@dataclass(frozen=True)
class AssumptionIIReport:
    window: float
    beta: float
    lhs: float                 # worst sliding-window average of lambda_max
    rhs: float                 # (alpha_min - beta) * min_j delta_j alpha_j e^{-2 alpha_j T}
    pe_failed: bool
    lambda_max_series: np.ndarray = field(repr=False)
    window_averages: np.ndarray = field(repr=False)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return (not self.pe_failed) and self.lhs <= self.rhs

    def to_dict(self) -> dict:
        return {
            "window_ms": self.window,
            "beta": self.beta,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pe_failed": self.pe_failed,
            "passed": self.passed,
            "lambda_max_series": self.lambda_max_series.tolist(),
            "window_averages": self.window_averages.tolist(),
        }


def assumption_ii_check(trace, gains: GainSchedule, T: float, beta: float,
                        delta, alpha=None) -> AssumptionIIReport:
    """Numeric check of the gain condition on the stacked filter trace.

    Builds, per sample, M = A D + gamma0 Psi Psi^T - Gamma Psi Psi^T
    - Psi Psi^T Gamma with A, Gamma, D block-diagonal over current types,
    then compares the worst sliding-window average of lambda_max(M) to
    (alpha_min - beta) * min_j delta_j alpha_j e^{-2 alpha_j T}.

    ``alpha`` optionally overrides the schedule's forgetting rates; zeros are
    allowed there to probe the small-A limit.
    """
    if beta <= 0:
        raise AnalysisError("beta must be positive")
    t, blocks = _as_psi_blocks(trace)
    m = len(blocks)
    if len(gains.gamma) != m:
        raise AnalysisError("gain schedule does not match the trace's type blocks")
    alpha = tuple(gains.alpha) if alpha is None else tuple(float(a) for a in alpha)
    if len(alpha) != m or any(a < 0 for a in alpha):
        raise AnalysisError("need one nonnegative alpha per type block")
    delta = tuple(float(d) for d in delta)
    if len(delta) != m or any(d <= 0 for d in delta):
        raise AnalysisError("need one positive delta per type block")

    sizes = [b.shape[1] for b in blocks.values()]
    n_th = sum(sizes)
    S = t.size
    psi = np.concatenate(list(blocks.values()), axis=1)     # (S, n_th, n_v)
    gram_full = psi @ np.swapaxes(psi, 1, 2)                # Psi Psi^T
    D = np.zeros((S, n_th, n_th))
    a_diag = np.zeros(n_th)
    g_diag = np.zeros(n_th)
    off = 0
    for j, b in enumerate(blocks.values()):
        n_j = b.shape[1]
        D[:, off:off + n_j, off:off + n_j] = b @ np.swapaxes(b, 1, 2)
        a_diag[off:off + n_j] = alpha[j]
        g_diag[off:off + n_j] = gains.gamma[j]
        off += n_j

    M = (a_diag[:, None] * D + gains.gamma0 * gram_full
         - g_diag[:, None] * gram_full - gram_full * g_diag[None, :])
    lam = np.linalg.eigvalsh(0.5 * (M + np.swapaxes(M, 1, 2)))[:, -1]

    k = _window_samples(t, T)
    cum = cumulative_trapezoid(lam, t, initial=0.0)
    avg = (cum[k:] - cum[:-k]) / (t[k:] - t[:-k])
    lhs = float(avg.max())
    alpha_min = min(alpha)
    rhs = (alpha_min - beta) * min(
        d * a * np.exp(-2.0 * a * T) for d, a in zip(delta, alpha))
    pe_failed = bool(np.max(np.abs(psi)) == 0.0)
    return AssumptionIIReport(window=T, beta=beta, lhs=lhs, rhs=float(rhs),
                              pe_failed=pe_failed, lambda_max_series=lam,
                              window_averages=avg)


# --------------------------------------------------------------------------
# Estimation-quality metrics

@dataclass(frozen=True)
class ErrorMetrics:
    params: list[str]
    t: np.ndarray = field(repr=False)
    rel_error: dict[str, np.ndarray] = field(repr=False)
    final_mean: dict[str, float]
    rate: dict[str, float | None]

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "final_mean": self.final_mean,
            "rate": self.rate,
        }


def error_metrics(trace: Trace, final_window: float | None = None,
                  rate_window: tuple[float, float] | None = None,
                  eps_floor: float = 1e-9) -> ErrorMetrics:
    """Relative estimation errors plus a log-envelope convergence-rate fit.

    The rate fit regresses log of the nonincreasing upper envelope of each
    error series against time over ``rate_window``; a flat-zero error has no
    rate and reports None.
    """
    t = trace.t
    names = [c.removeprefix("theta_hat.") for c in trace.columns_matching("theta_hat")]
    if not names:
        raise AnalysisError("trace has no theta_hat columns")
    t_end = t[-1]
    if final_window is None:
        final_window = 0.1 * (t_end - t[0])
    if rate_window is None:
        rate_window = (t[0], t_end)
    rel, fin, rate = {}, {}, {}
    fin_mask = t >= t_end - final_window
    rw_mask = (t >= rate_window[0]) & (t <= rate_window[1])
    for name in names:
        err = np.abs(trace.column(f"theta_hat.{name}") - trace.column(f"theta_true.{name}"))
        scale = np.maximum(np.abs(trace.column(f"theta_true.{name}")), eps_floor)
        e = err / scale
        rel[name] = e
        fin[name] = float(e[fin_mask].mean())
        ew = e[rw_mask]
        env = np.maximum.accumulate(ew[::-1])[::-1]     # nonincreasing upper envelope
        ok = env > 0
        if ok.sum() < 2 or np.ptp(np.log(env[ok])) == 0.0:
            rate[name] = None
        else:
            rate[name] = float(np.polyfit(t[rw_mask][ok], np.log(env[ok]), 1)[0])
    return ErrorMetrics(params=names, t=t, rel_error=rel, final_mean=fin, rate=rate)


@dataclass(frozen=True)
class RunMetrics:
    transient_peak: dict[str, float]
    oscillation_score: dict[str, int]
    settling_time: dict[str, float | None]

    def to_dict(self) -> dict:
        return {
            "transient_peak": self.transient_peak,
            "oscillation_score": self.oscillation_score,
            "settling_time": self.settling_time,
        }


@dataclass(frozen=True)
class CompareReport:
    a: RunMetrics
    b: RunMetrics

    def to_dict(self) -> dict:
        return {"a": self.a.to_dict(), "b": self.b.to_dict()}


def run_metrics(trace: Trace, settle_tol: float = 0.05,
                osc_skip: float = 10.0) -> RunMetrics:
    """Transient peak, oscillation score, and settling time per estimate.

    Oscillation score counts sign changes of the finite-difference slope
    after ``osc_skip`` ms; settling time is the first instant after which
    the deviation from the final value stays below ``settle_tol``.
    """
    t = trace.t
    peaks, oscs, settles = {}, {}, {}
    for c in trace.columns_matching("theta_hat"):
        name = c.removeprefix("theta_hat.")
        x = trace.column(c)
        dev = np.abs(x - x[-1])
        peaks[name] = float(dev.max())
        dx = np.diff(x)[t[1:] >= osc_skip]
        s = np.sign(dx)
        s = s[s != 0]
        oscs[name] = int(np.count_nonzero(s[1:] != s[:-1]))
        above = np.nonzero(dev >= settle_tol)[0]
        if above.size == 0:
            settles[name] = float(t[0])
        elif above[-1] + 1 >= t.size:
            settles[name] = None
        else:
            settles[name] = float(t[above[-1] + 1])
    return RunMetrics(peaks, oscs, settles)


def compare_runs(trace_a: Trace, trace_b: Trace, settle_tol: float = 0.05,
                 osc_skip: float = 10.0) -> CompareReport:
    """Side-by-side run metrics for two traces on the same recording grid."""
    if trace_a.t.shape != trace_b.t.shape or not np.allclose(trace_a.t, trace_b.t):
        raise AnalysisError("traces are not on the same time grid")
    return CompareReport(run_metrics(trace_a, settle_tol, osc_skip),
                         run_metrics(trace_b, settle_tol, osc_skip))
