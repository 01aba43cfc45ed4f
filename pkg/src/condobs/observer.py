"""Adaptive observers: full RLS-style design and its block-distributed variant.

Both observers are driven by the *measured* voltage everywhere the plant
voltage appears (regressor, drift, gating dynamics, and the innovation), and
share the filter/covariance pair

    Psi_dot = -gamma Psi + Phi(v_meas, w_hat, u)
    P_dot   = alpha P - alpha P Psi Psi^T P,   P(0) > 0.

The distributed variant keeps one (Psi_j, P_j) pair per current type; when
every Phi_j is diagonal those pairs stay diagonal and the scalar fast path
applies, one filter/covariance scalar per parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    ModelError,
    NetworkModel,
    assemble_a,
    assemble_phi,
    assemble_phi_all,
    gating_derivative,
)


class ObserverError(ValueError):
    """Raised for invalid gains or degenerate covariance input."""


@dataclass(frozen=True)
class GainSchedule:
    """Output-injection gain plus per-type learning gains and forgetting rates."""

    gamma0: float
    gamma: tuple[float, ...]
    alpha: tuple[float, ...]

    def __post_init__(self):
        if self.gamma0 <= 0 or any(g <= 0 for g in self.gamma) or any(a <= 0 for a in self.alpha):
            raise ObserverError("all gains must be strictly positive")
        if len(self.gamma) != len(self.alpha):
            raise ObserverError("gamma and alpha need one entry per current type")


def gain_preset(name: str, m_types: int = 3) -> GainSchedule:
    """Named gain sets: the aggressive set A and the synapse-softened set B."""
    if name == "A":
        return GainSchedule(2.0, (2.0,) * m_types, (0.15,) * m_types)
    if name == "B":
        if m_types != 3:
            raise ObserverError("gain set B is defined for the three-type network")
        return GainSchedule(2.0, (2.0, 2.0, 0.8), (0.15, 0.15, 0.03))
    raise ObserverError(f"unknown gain preset {name!r}")


FULL_GAIN_DEFAULT = (2.0, 0.15)  # (gamma, alpha) for the non-distributed observer


@dataclass
class FullObserverState:
    v_hat: np.ndarray
    w_hat: np.ndarray
    theta_hat: np.ndarray
    Psi: np.ndarray  # (n_theta, n_v)
    P: np.ndarray    # (n_theta, n_theta), symmetric positive definite

    def copy(self) -> "FullObserverState":
        return FullObserverState(self.v_hat.copy(), self.w_hat.copy(),
                                 self.theta_hat.copy(), self.Psi.copy(), self.P.copy())


@dataclass
class DistributedObserverState:
    v_hat: np.ndarray
    w_hat: np.ndarray
    theta_hat: np.ndarray
    Psi: list[np.ndarray]  # per type, (n_theta_j, n_v)
    P: list[np.ndarray]    # per type, (n_theta_j, n_theta_j)

    def copy(self) -> "DistributedObserverState":
        return DistributedObserverState(
            self.v_hat.copy(), self.w_hat.copy(), self.theta_hat.copy(),
            [m.copy() for m in self.Psi], [m.copy() for m in self.P])


@dataclass
class ScalarObserverState:
    """Diagonal storage for the fully distributed fast path."""

    v_hat: np.ndarray
    w_hat: np.ndarray
    theta_hat: np.ndarray
    psi: np.ndarray  # (n_theta,) diagonal of the stacked filter
    p: np.ndarray    # (n_theta,) diagonal covariance entries

    def copy(self) -> "ScalarObserverState":
        return ScalarObserverState(self.v_hat.copy(), self.w_hat.copy(),
                                   self.theta_hat.copy(), self.psi.copy(), self.p.copy())


def _check_pd(P: np.ndarray, label: str = "P"):
    try:
        np.linalg.cholesky(0.5 * (P + P.T))
    except np.linalg.LinAlgError:
        raise ObserverError(f"{label} is not positive definite") from None


def full_observer_derivative(model: NetworkModel, obs: FullObserverState,
                             v_meas: np.ndarray, u: np.ndarray,
                             gamma: float, alpha: float) -> FullObserverState:
    """Time derivative of the full (non-distributed) adaptive observer."""
    if not gamma > alpha > 0:
        raise ObserverError("need gamma > alpha > 0")
    _check_pd(obs.P)
    phi = assemble_phi_all(model, v_meas, obs.w_hat)
    r = v_meas - obs.v_hat
    y = obs.Psi @ r
    z = obs.P @ y
    dv = phi.T @ obs.theta_hat + assemble_a(model, v_meas, u) + gamma * (r + obs.Psi.T @ z)
    dw = gating_derivative(model, v_meas, obs.w_hat)
    dtheta = gamma * z
    dPsi = -gamma * obs.Psi + phi
    G = obs.Psi @ obs.Psi.T
    dP = alpha * obs.P - alpha * (obs.P @ G @ obs.P)
    return FullObserverState(dv, dw, dtheta, dPsi, dP)


def distributed_observer_derivative(model: NetworkModel, obs: DistributedObserverState,
                                    v_meas: np.ndarray, u: np.ndarray,
                                    gains: GainSchedule) -> DistributedObserverState:
    """Time derivative of the block-distributed adaptive observer."""
    if len(gains.gamma) != model.m_types:
        raise ObserverError("gain schedule does not match model current types")
    th_off = model.theta_offsets()
    r = v_meas - obs.v_hat
    inj = gains.gamma0 * r
    dtheta = np.empty_like(obs.theta_hat)
    dPsi, dP = [], []
    phi_T_theta = np.zeros(model.n_v)
    for j in range(model.m_types):
        _check_pd(obs.P[j], f"P_{model.current_types[j].id}")
        phi_j = assemble_phi(model, j, v_meas, model.w_block(obs.w_hat, j))
        th_j = obs.theta_hat[th_off[j]:th_off[j + 1]]
        phi_T_theta += phi_j.T @ th_j
        y = obs.Psi[j] @ r
        z = obs.P[j] @ y
        dtheta[th_off[j]:th_off[j + 1]] = gains.gamma[j] * z
        inj = inj + gains.gamma[j] * (obs.Psi[j].T @ z)
        dPsi.append(-gains.gamma[j] * obs.Psi[j] + phi_j)
        G = obs.Psi[j] @ obs.Psi[j].T
        dP.append(gains.alpha[j] * obs.P[j] - gains.alpha[j] * (obs.P[j] @ G @ obs.P[j]))
    dv = phi_T_theta + assemble_a(model, v_meas, u) + inj
    dw = gating_derivative(model, v_meas, obs.w_hat)
    return DistributedObserverState(dv, dw, dtheta, dPsi, dP)


def scalar_distributed_derivative(model: NetworkModel, obs: ScalarObserverState,
                                  v_meas: np.ndarray, u: np.ndarray,
                                  gains: GainSchedule) -> ScalarObserverState:
    """Fast path of the distributed observer for diagonal regressor blocks.

    Numerically identical to distributed_observer_derivative restricted to
    the diagonals of each (Psi_j, P_j).
    """
    if not model.phi_is_diagonal:
        raise ObserverError("scalar path requires diagonal regressor blocks")
    th_off = model.theta_offsets()
    r = v_meas - obs.v_hat
    inj = gains.gamma0 * r
    dtheta = np.empty_like(obs.theta_hat)
    dpsi = np.empty_like(obs.psi)
    dp = np.empty_like(obs.p)
    phi_T_theta = np.zeros(model.n_v)
    for j in range(model.m_types):
        sl = slice(th_off[j], th_off[j + 1])
        phi_j = assemble_phi(model, j, v_meas, model.w_block(obs.w_hat, j))
        phi_d = np.diag(phi_j)
        phi_T_theta += phi_d * obs.theta_hat[sl]
        y = obs.psi[sl] * r
        z = obs.p[sl] * y
        dtheta[sl] = gains.gamma[j] * z
        inj = inj + gains.gamma[j] * (obs.psi[sl] * z)
        dpsi[sl] = -gains.gamma[j] * obs.psi[sl] + phi_d
        dp[sl] = gains.alpha[j] * obs.p[sl] - gains.alpha[j] * (obs.p[sl] * obs.psi[sl] ** 2 * obs.p[sl])
    dv = phi_T_theta + assemble_a(model, v_meas, u) + inj
    dw = gating_derivative(model, v_meas, obs.w_hat)
    return ScalarObserverState(dv, dw, dtheta, dpsi, dp)


def init_observer(model: NetworkModel, mode: str, theta0: np.ndarray,
                  w0: np.ndarray, v0: np.ndarray, P0=None):
    """Build a zero-filter observer state of the requested flavor.

    ``P0`` defaults to identity; it may be a full matrix (mode "full"), a list
    of per-type blocks (mode "distributed"), or a vector/scalar of diagonal
    entries (any mode).
    """
    v0 = np.asarray(v0, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if v0.shape != (model.n_v,) or w0.shape != (model.n_w,) or theta0.shape != (model.n_theta,):
        raise ObserverError("initial state dimensions do not match the model")
    n_th = model.n_theta
    if mode == "full":
        P = np.eye(n_th) if P0 is None else _as_matrix(P0, n_th)
        _check_pd(P, "P0")
        return FullObserverState(v0.copy(), w0.copy(), theta0.copy(),
                                 np.zeros((n_th, model.n_v)), P)
    th_off = model.theta_offsets()
    sizes = [th_off[j + 1] - th_off[j] for j in range(model.m_types)]
    if mode == "distributed":
        if P0 is None:
            blocks = [np.eye(n) for n in sizes]
        elif isinstance(P0, (list, tuple)):
            blocks = [np.asarray(b, dtype=float) for b in P0]
        else:
            diag = _as_diag(P0, n_th)
            blocks = [np.diag(diag[th_off[j]:th_off[j + 1]]) for j in range(model.m_types)]
        for b, n in zip(blocks, sizes):
            if b.shape != (n, n):
                raise ObserverError("P0 block has wrong shape")
            _check_pd(b, "P0")
        return DistributedObserverState(
            v0.copy(), w0.copy(), theta0.copy(),
            [np.zeros((n, model.n_v)) for n in sizes], blocks)
    if mode == "distributed-scalar":
        if not model.phi_is_diagonal:
            raise ObserverError("scalar path requires diagonal regressor blocks")
        diag = np.ones(n_th) if P0 is None else _as_diag(P0, n_th)
        if np.any(diag <= 0):
            raise ObserverError("P0 is not positive definite")
        return ScalarObserverState(v0.copy(), w0.copy(), theta0.copy(),
                                   np.zeros(n_th), diag.astype(float))
    raise ObserverError(f"unknown observer mode {mode!r}")


def _as_matrix(P0, n: int) -> np.ndarray:
    P0 = np.asarray(P0, dtype=float)
    if P0.ndim == 0:
        return float(P0) * np.eye(n)
    if P0.ndim == 1:
        return np.diag(P0)
    if P0.shape != (n, n):
        raise ObserverError("P0 has wrong shape")
    return P0.copy()


def _as_diag(P0, n: int) -> np.ndarray:
    P0 = np.asarray(P0, dtype=float)
    if P0.ndim == 0:
        return np.full(n, float(P0))
    if P0.shape == (n,):
        return P0.astype(float)
    raise ObserverError("P0 must be a scalar or a diagonal vector here")


def state_counts(model: NetworkModel) -> dict:
    """Covariance state counts for each observer flavor."""
    sizes = [model.n_theta_block(ct.id) for ct in model.current_types]
    return {
        "full": model.n_theta ** 2,
        "distributed": sum(n * n for n in sizes),
        "distributed-scalar": sum(sizes),
    }
