"""Fixed-step integration of the coupled plant + observer, with measurement noise.

The plant always evolves on its clean trajectory; measurement noise corrupts
only what the observer sees. Noise is white Gaussian per channel, freshly
sampled every integration step, with standard deviation set from the target
SNR against the rms of the noiseless voltage trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _lowered as low
from .model import NetworkModel, SystemState, ModelError
from .observer import (
    GainSchedule,
    FULL_GAIN_DEFAULT,
    init_observer,
)
from .trace import Trace

_CHUNK_STEPS = 250_000


class EngineError(ValueError):
    """Raised for inconsistent simulation configuration."""


class NumericalError(RuntimeError):
    """Raised when the integration produces non-finite state."""

    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t:.6g} ms")
        self.t = t


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    dt: float = 1e-4
    record_stride: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < self.dt:
            raise EngineError("need dt > 0 and t_end >= dt")
        if self.record_stride < 1:
            raise EngineError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class NoiseConfig:
    enabled: bool = False
    snr_db: float = 40.0
    reference: tuple[float, ...] | None = None  # per-channel rms of clean v

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise EngineError("snr_db must be finite")


@dataclass(frozen=True)
class Multisine:
    """Constant offset plus a sum of sines per channel; periods in ms."""

    offset: tuple[float, ...]
    terms: tuple[tuple[tuple[float, float], ...], ...] = ()  # per channel: (amp, period)

    def __post_init__(self):
        if self.terms and len(self.terms) != len(self.offset):
            raise EngineError("terms must have one entry per channel")
        for ch in self.terms:
            for _amp, period in ch:
                if period <= 0:
                    raise EngineError("sine periods must be positive")

    @property
    def n_channels(self) -> int:
        return len(self.offset)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = [np.broadcast_to(np.asarray(o, dtype=float), t.shape).copy()
               for o in self.offset]
        for i, ch in enumerate(self.terms or ((),) * len(self.offset)):
            for amp, period in ch:
                out[i] += amp * np.sin(2.0 * np.pi * t / period)
        return np.stack(out, axis=-1) if t.ndim else np.array([float(o) for o in out])


def input_preset(name: str, n_channels: int = 2) -> Multisine:
    """Named input drives; "hh2" is the two-channel multisine pair."""
    if name == "hh2":
        return Multisine(
            offset=(2.0, 1.0),
            terms=(
                ((1.0, 10.0), (1.0, 7.0), (1.0, 4.0)),
                ((2.0, 9.0), (1.0, 5.0)),
            ),
        )
    if name == "zero":
        return Multisine(offset=(0.0,) * n_channels)
    raise EngineError(f"unknown input preset {name!r}")


def euler_step(f, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One forward-Euler step x + dt*f(t, x); rejects non-finite derivatives."""
    if dt <= 0:
        raise EngineError("dt must be positive")
    dx = np.asarray(f(t, x), dtype=float)
    if not np.all(np.isfinite(dx)):
        raise NumericalError(t)
    return x + dt * dx


def make_measurement(v: np.ndarray, noise: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """Corrupt a clean voltage sample with white Gaussian measurement noise."""
    if not noise.enabled:
        return np.asarray(v, dtype=float).copy()
    if noise.reference is None:
        raise EngineError("noise reference rms is required to scale the noise")
    std = noise_std(noise)
    return np.asarray(v, dtype=float) + std * rng.standard_normal(np.shape(v))


def noise_std(noise: NoiseConfig) -> np.ndarray:
    """Per-channel noise standard deviation for the configured SNR."""
    ref = np.asarray(noise.reference, dtype=float)
    return ref * 10.0 ** (-noise.snr_db / 20.0)


def _lower_inputs(inputs: Multisine, n_v: int):
    if inputs.n_channels != n_v:
        raise EngineError("input spec channel count does not match the model")
    u0 = np.asarray(inputs.offset, dtype=float)
    term_off = np.zeros(n_v + 1, dtype=np.int64)
    amps, pers = [], []
    terms = inputs.terms or ((),) * n_v
    for i, ch in enumerate(terms):
        for amp, period in ch:
            amps.append(amp)
            pers.append(period)
        term_off[i + 1] = len(amps)
    return u0, term_off, np.asarray(amps, dtype=float), np.asarray(pers, dtype=float)


def clean_voltage_rms(model: NetworkModel, integrator: IntegratorConfig,
                      inputs: Multisine, x0: SystemState) -> np.ndarray:
    """Per-channel rms of the noiseless voltage over the full horizon."""
    lm = low.lower_model(model)
    u_args = _lower_inputs(inputs, model.n_v)
    v = x0.v.astype(float).copy()
    w = x0.w.astype(float).copy()
    n = integrator.n_steps
    sumsq = np.zeros(model.n_v)
    rec_v = np.zeros((n // n + 1, model.n_v))
    rec_w = np.zeros((n // n + 1, model.n_w))
    status, t_fail = low.integrate_none(lm, *u_args, v, w, 0.0, integrator.dt,
                                        n, 0, n, rec_v, rec_w, sumsq)
    if status != 0 or not np.all(np.isfinite(v)):
        raise NumericalError(t_fail)
    return np.sqrt(sumsq / n)


def _default_x0(model: NetworkModel) -> SystemState:
    v0 = np.asarray(model.e_leak, dtype=float).copy()
    from .model import gating_derivative  # gate equilibria via zero-derivative fixed point
    w0 = np.zeros(model.n_w)
    # one long relaxation step toward steady state is enough for a default
    for _ in range(200):
        w0 = np.clip(w0 + 0.5 * gating_derivative(model, v0, w0), 0.0, 1.0)
    return SystemState(v0, w0)


def run_experiment(model: NetworkModel, observer_mode: str, gains,
                   integrator: IntegratorConfig, noise: NoiseConfig,
                   inputs: Multisine, x0: SystemState | None = None,
                   observer_init: dict | None = None, P0=None,
                   freeze_theta_at: float | None = None) -> Trace:
    """Integrate plant and observer on one grid and return the decimated trace.

    ``observer_mode`` is one of none/full/distributed/distributed-scalar.
    ``gains`` is a (gamma, alpha) pair for the full observer, a GainSchedule
    for the distributed flavors, ignored for mode "none".
    """
    if observer_mode not in ("none", "full", "distributed", "distributed-scalar"):
        raise EngineError(f"unknown observer mode {observer_mode!r}")
    if freeze_theta_at is not None:
        model = model.frozen(freeze_theta_at)
    if x0 is None:
        x0 = _default_x0(model)
    if x0.v.shape != (model.n_v,) or x0.w.shape != (model.n_w,):
        raise EngineError("initial state does not match the model")
    lm = low.lower_model(model)
    u_args = _lower_inputs(inputs, model.n_v)
    n_steps = integrator.n_steps
    stride = integrator.record_stride
    n_samples = n_steps // stride + 1
    dt = integrator.dt
    n_v, n_w, n_th = model.n_v, model.n_w, model.n_theta

    if noise.enabled:
        if noise.reference is None:
            ref = clean_voltage_rms(model, integrator, inputs, x0)
            noise = NoiseConfig(True, noise.snr_db, tuple(ref))
        std = noise_std(noise)
    else:
        std = np.zeros(n_v)
    rng = np.random.default_rng(integrator.rng_seed)

    v = x0.v.astype(float).copy()
    w = x0.w.astype(float).copy()
    rec_v = np.zeros((n_samples, n_v))
    rec_w = np.zeros((n_samples, n_w))
    sumsq = np.zeros(n_v)

    if observer_mode == "none":
        step0 = 0
        while step0 < n_steps:
            n_chunk = min(_CHUNK_STEPS, n_steps - step0)
            status, t_fail = low.integrate_none(
                lm, *u_args, v, w, step0 * dt, dt, n_chunk, step0, stride,
                rec_v, rec_w, sumsq)
            if status != 0:
                raise NumericalError(t_fail)
            step0 += n_chunk
        if n_steps % stride == 0:
            if not np.all(np.isfinite(v)):
                raise NumericalError(n_steps * dt)
            rec_v[-1] = v
            rec_w[-1] = w
        return _assemble_trace(model, integrator, observer_mode, rec_v, rec_w,
                               None, None, None, None, None, None, None)

    # observer initial conditions
    oi = dict(observer_init or {})
    v0_hat = np.asarray(oi.get("v0", x0.v), dtype=float)
    w0_hat = np.asarray(oi.get("w0", x0.w), dtype=float)
    theta0 = np.asarray(oi.get("theta0", np.zeros(n_th)), dtype=float)
    mode = "distributed" if observer_mode == "distributed" else observer_mode
    obs = init_observer(model, mode, theta0, w0_hat, v0_hat, P0)

    rec_vmeas = np.zeros((n_samples, n_v))
    rec_vhat = np.zeros((n_samples, n_v))
    rec_what = np.zeros((n_samples, n_w))
    rec_th = np.zeros((n_samples, n_th))
    use_noise = bool(noise.enabled)
    th_off = np.asarray(model.theta_offsets(), dtype=np.int64)

    if observer_mode == "full":
        if gains is None:
            gains = FULL_GAIN_DEFAULT
        gamma, alpha = float(gains[0]), float(gains[1])
        if not gamma > alpha > 0:
            raise EngineError("full observer needs gamma > alpha > 0")
        Psi = obs.Psi
        P = obs.P
        rec_psi = np.zeros((n_samples, n_th * n_v))
        rec_P = np.zeros((n_samples, n_th * n_th))
        vhat, what, th_hat = obs.v_hat, obs.w_hat, obs.theta_hat
        step0 = 0
        while step0 < n_steps:
            n_chunk = min(_CHUNK_STEPS, n_steps - step0)
            noise_chunk = (std * rng.standard_normal((n_chunk, n_v))
                           if use_noise else np.zeros((1, n_v)))
            status, t_fail = low.integrate_full(
                lm, *u_args, v, w, vhat, what, th_hat, Psi, P, gamma, alpha,
                step0 * dt, dt, n_chunk, step0, stride, noise_chunk, use_noise,
                rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th, rec_psi, rec_P)
            if status != 0:
                raise NumericalError(t_fail)
            step0 += n_chunk
        if n_steps % stride == 0:
            _record_final(rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th,
                          v, w, vhat, what, th_hat, std, rng, use_noise, n_steps * dt)
            rec_psi[-1] = Psi.ravel()
            rec_P[-1] = P.ravel()
        return _assemble_trace(model, integrator, observer_mode, rec_v, rec_w,
                               rec_vmeas, rec_vhat, rec_what, rec_th, rec_psi,
                               rec_P, None)

    if not isinstance(gains, GainSchedule):
        raise EngineError("distributed observers need a GainSchedule")
    if len(gains.gamma) != model.m_types:
        raise EngineError("gain schedule does not match model current types")
    gamma = np.asarray(gains.gamma, dtype=float)
    alpha = np.asarray(gains.alpha, dtype=float)

    if observer_mode == "distributed":
        sizes = [th_off[j + 1] - th_off[j] for j in range(model.m_types)]
        psi_off = np.zeros(model.m_types + 1, dtype=np.int64)
        p_off = np.zeros(model.m_types + 1, dtype=np.int64)
        for j, nb in enumerate(sizes):
            psi_off[j + 1] = psi_off[j] + nb * n_v
            p_off[j + 1] = p_off[j] + nb * nb
        psi_flat = np.concatenate([b.ravel() for b in obs.Psi])
        p_flat = np.concatenate([b.ravel() for b in obs.P])
        rec_psi = np.zeros((n_samples, psi_flat.size))
        rec_P = np.zeros((n_samples, p_flat.size))
        vhat, what, th_hat = obs.v_hat, obs.w_hat, obs.theta_hat
        step0 = 0
        while step0 < n_steps:
            n_chunk = min(_CHUNK_STEPS, n_steps - step0)
            noise_chunk = (std * rng.standard_normal((n_chunk, n_v))
                           if use_noise else np.zeros((1, n_v)))
            status, t_fail = low.integrate_dist(
                lm, *u_args, v, w, vhat, what, th_hat, psi_flat, p_flat,
                psi_off, p_off, float(gains.gamma0), gamma, alpha,
                step0 * dt, dt, n_chunk, step0, stride, noise_chunk, use_noise,
                rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th, rec_psi, rec_P)
            if status != 0:
                raise NumericalError(t_fail)
            step0 += n_chunk
        if n_steps % stride == 0:
            _record_final(rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th,
                          v, w, vhat, what, th_hat, std, rng, use_noise, n_steps * dt)
            rec_psi[-1] = psi_flat
            rec_P[-1] = p_flat
        return _assemble_trace(model, integrator, observer_mode, rec_v, rec_w,
                               rec_vmeas, rec_vhat, rec_what, rec_th, rec_psi,
                               rec_P, None)

    if observer_mode == "distributed-scalar":
        col_of = _scalar_columns(model)
        psi = obs.psi
        pdiag = obs.p
        rec_psi = np.zeros((n_samples, n_th))
        rec_P = np.zeros((n_samples, n_th))
        vhat, what, th_hat = obs.v_hat, obs.w_hat, obs.theta_hat
        step0 = 0
        while step0 < n_steps:
            n_chunk = min(_CHUNK_STEPS, n_steps - step0)
            noise_chunk = (std * rng.standard_normal((n_chunk, n_v))
                           if use_noise else np.zeros((1, n_v)))
            status, t_fail = low.integrate_scalar(
                lm, *u_args, v, w, vhat, what, th_hat, psi, pdiag, col_of,
                float(gains.gamma0), gamma, alpha,
                step0 * dt, dt, n_chunk, step0, stride, noise_chunk, use_noise,
                rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th, rec_psi, rec_P)
            if status != 0:
                raise NumericalError(t_fail)
            step0 += n_chunk
        if n_steps % stride == 0:
            _record_final(rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th,
                          v, w, vhat, what, th_hat, std, rng, use_noise, n_steps * dt)
            rec_psi[-1] = psi
            rec_P[-1] = pdiag
        return _assemble_trace(model, integrator, observer_mode, rec_v, rec_w,
                               rec_vmeas, rec_vhat, rec_what, rec_th, rec_psi,
                               rec_P, col_of)

    raise EngineError(f"unknown observer mode {observer_mode!r}")


def _scalar_columns(model: NetworkModel) -> np.ndarray:
    """Map each parameter index to its regressor column (requires diagonal Phi)."""
    if not model.phi_is_diagonal:
        raise EngineError("scalar path requires diagonal regressor blocks")
    cols = []
    for ct in model.current_types:
        if ct.kind == "intrinsic":
            cols.extend(range(model.n_v))
        else:
            cols.extend(post for post, _pre in model.edges(ct.id))
    return np.asarray(cols, dtype=np.int64)


def _record_final(rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th,
                  v, w, vhat, what, th_hat, std, rng, use_noise, t_end):
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(th_hat))):
        raise NumericalError(t_end)
    rec_v[-1] = v
    rec_w[-1] = w
    rec_vmeas[-1] = v + (std * rng.standard_normal(v.shape) if use_noise else 0.0)
    rec_vhat[-1] = vhat
    rec_what[-1] = what
    rec_th[-1] = th_hat


def _assemble_trace(model, integrator, observer_mode, rec_v, rec_w,
                    rec_vmeas, rec_vhat, rec_what, rec_th, rec_psi, rec_P,
                    col_of) -> Trace:
    n_samples = rec_v.shape[0]
    times = np.arange(n_samples) * integrator.record_stride * integrator.dt
    w_labels = model.w_labels()
    th_labels = model.theta_labels()
    th_true = np.column_stack([
        s.at(times)
        for ct in model.current_types
        for s in model.theta_true[ct.id]
    ])

    cols = ["t"]
    data = [times]

    def add(names, arr):
        cols.extend(names)
        data.append(arr)

    add([f"v.{i + 1}" for i in range(model.n_v)], rec_v)
    if observer_mode != "none":
        add([f"vmeas.{i + 1}" for i in range(model.n_v)], rec_vmeas)
        add([f"vhat.{i + 1}" for i in range(model.n_v)], rec_vhat)
    add([f"w.{lbl}" for lbl in w_labels], rec_w)
    if observer_mode != "none":
        add([f"what.{lbl}" for lbl in w_labels], rec_what)
        add([f"theta_hat.{lbl}" for lbl in th_labels], rec_th)
    add([f"theta_true.{lbl}" for lbl in th_labels], th_true)

    if observer_mode == "full":
        n_th, n_v = model.n_theta, model.n_v
        th_off = model.theta_offsets()
        psi_names = []
        for j, ct in enumerate(model.current_types):
            for pp in range(th_off[j + 1] - th_off[j]):
                psi_names.extend(f"psi.{ct.id}.{pp + 1}.{i + 1}" for i in range(n_v))
        add(psi_names, rec_psi)
        add([f"P.{p + 1}.{q + 1}" for p in range(n_th) for q in range(n_th)], rec_P)
        Pmat = rec_P.reshape(n_samples, n_th, n_th)
        mineig = np.linalg.eigvalsh(0.5 * (Pmat + Pmat.transpose(0, 2, 1)))[:, 0]
        add(["mineig_P"], mineig[:, None])
    elif observer_mode == "distributed":
        th_off = model.theta_offsets()
        psi_names, p_names = [], []
        mineigs = []
        p_pos = 0
        for j, ct in enumerate(model.current_types):
            nb = th_off[j + 1] - th_off[j]
            psi_names.extend(f"psi.{ct.id}.{pp + 1}.{i + 1}"
                             for pp in range(nb) for i in range(model.n_v))
            p_names.extend(f"P.{ct.id}.{pp + 1}.{qq + 1}"
                           for pp in range(nb) for qq in range(nb))
            blk = rec_P[:, p_pos:p_pos + nb * nb].reshape(n_samples, nb, nb)
            mineigs.append(np.linalg.eigvalsh(0.5 * (blk + blk.transpose(0, 2, 1)))[:, 0])
            p_pos += nb * nb
        add(psi_names, rec_psi)
        add(p_names, rec_P)
        add([f"mineig_P.{ct.id}" for ct in model.current_types],
            np.column_stack(mineigs))
    elif observer_mode == "distributed-scalar":
        th_off = model.theta_offsets()
        psi_names, p_names = [], []
        mineigs = []
        for j, ct in enumerate(model.current_types):
            nb = th_off[j + 1] - th_off[j]
            for pp in range(nb):
                col = col_of[th_off[j] + pp]
                psi_names.append(f"psi.{ct.id}.{pp + 1}.{col + 1}")
                p_names.append(f"P.{ct.id}.{pp + 1}.{pp + 1}")
            mineigs.append(rec_P[:, th_off[j]:th_off[j + 1]].min(axis=1))
        add(psi_names, rec_psi)
        add(p_names, rec_P)
        add([f"mineig_P.{ct.id}" for ct in model.current_types],
            np.column_stack(mineigs))

    if observer_mode != "none":
        psi_norm = np.sqrt((rec_psi ** 2).sum(axis=1))
        innov = np.sqrt(((rec_vmeas - rec_vhat) ** 2).sum(axis=1))
        add(["psi_norm"], psi_norm[:, None])
        add(["innov_norm"], innov[:, None])

    return Trace(columns=cols, data=np.column_stack(data))
