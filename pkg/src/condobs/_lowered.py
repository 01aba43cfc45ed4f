"""Flat-array model representation and compiled integration kernels.

The public API works on dataclasses; the time-stepping loop runs millions of
Euler steps, so the model is lowered to plain numpy arrays and the per-step
work is jitted. Tests pin the kernels against the numpy reference derivatives
in model.py / observer.py.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .kinetics import RateFn, GateKinetics
from .model import NetworkModel, Constant, LogisticRamp

_FORM_CODE = {"linoid": 0, "exponential": 1, "sigmoid": 2}


class LoweredModel(NamedTuple):
    c: np.ndarray
    mu_leak: np.ndarray
    e_leak: np.ndarray
    kind: np.ndarray      # i8[m], 0 intrinsic / 1 synaptic
    E: np.ndarray         # f8[m]
    p_exp: np.ndarray     # i8[m]
    q_exp: np.ndarray     # i8[m], 0 means no h gate
    kin_m: np.ndarray     # f8[m, 9]
    kin_h: np.ndarray     # f8[m, 9]
    syn: np.ndarray       # f8[m, 4]: a_syn, b_syn, rho, kappa
    w_off: np.ndarray     # i8[m+1]
    th_off: np.ndarray    # i8[m+1]
    edge_off: np.ndarray  # i8[m+1]
    edge_post: np.ndarray
    edge_pre: np.ndarray
    sched: np.ndarray     # f8[n_theta, 5]: kind, base, amp, t0, tau


def _encode_gate(g: GateKinetics | None) -> np.ndarray:
    row = np.zeros(9)
    if g is None:
        return row
    if g.is_parametric:
        row[0] = 0.0
        row[1:7] = [g.sigma.rho, g.sigma.kappa,
                    g.tau.tau_min, g.tau.tau_max, g.tau.zeta, g.tau.chi]
    else:
        row[0] = 1.0
        row[1] = _FORM_CODE[g.alpha.form]
        row[2:5] = [g.alpha.a, g.alpha.v0, g.alpha.k]
        row[5] = _FORM_CODE[g.beta.form]
        row[6:9] = [g.beta.a, g.beta.v0, g.beta.k]
    return row


def _encode_schedule(s) -> np.ndarray:
    if isinstance(s, Constant):
        return np.array([0.0, s.value, 0.0, 0.0, 1.0])
    if isinstance(s, LogisticRamp):
        return np.array([1.0, s.base, s.amp, s.t0, s.tau_r])
    raise TypeError(f"cannot lower schedule {s!r}")


def lower_model(model: NetworkModel) -> LoweredModel:
    m = model.m_types
    kind = np.zeros(m, dtype=np.int64)
    E = np.zeros(m)
    p_exp = np.zeros(m, dtype=np.int64)
    q_exp = np.zeros(m, dtype=np.int64)
    kin_m = np.zeros((m, 9))
    kin_h = np.zeros((m, 9))
    syn = np.zeros((m, 4))
    edge_off = np.zeros(m + 1, dtype=np.int64)
    posts, pres = [], []
    sched_rows = []
    for j, ct in enumerate(model.current_types):
        E[j] = ct.nernst
        if ct.kind == "intrinsic":
            p_exp[j] = ct.m.exponent
            q_exp[j] = ct.h.exponent if ct.h is not None else 0
            kin_m[j] = _encode_gate(ct.m)
            kin_h[j] = _encode_gate(ct.h)
        else:
            kind[j] = 1
            syn[j] = [ct.syn.a_syn, ct.syn.b_syn,
                      ct.syn.presyn_sigmoid.rho, ct.syn.presyn_sigmoid.kappa]
            for post, pre in model.edges(ct.id):
                posts.append(post)
                pres.append(pre)
        edge_off[j + 1] = len(posts)
        sched_rows.extend(_encode_schedule(s) for s in model.theta_true[ct.id])
    return LoweredModel(
        c=np.asarray(model.c, dtype=float),
        mu_leak=np.asarray(model.mu_leak, dtype=float),
        e_leak=np.asarray(model.e_leak, dtype=float),
        kind=kind, E=E, p_exp=p_exp, q_exp=q_exp,
        kin_m=kin_m, kin_h=kin_h, syn=syn,
        w_off=np.asarray(model.w_offsets(), dtype=np.int64),
        th_off=np.asarray(model.theta_offsets(), dtype=np.int64),
        edge_off=edge_off,
        edge_post=np.asarray(posts, dtype=np.int64),
        edge_pre=np.asarray(pres, dtype=np.int64),
        sched=np.asarray(sched_rows, dtype=float).reshape(model.n_theta, 5),
    )


# --------------------------------------------------------------------------
# scalar helpers

@njit(cache=True)
def _cexp(x):
    if x > 500.0:
        x = 500.0
    elif x < -500.0:
        x = -500.0
    return math.exp(x)


@njit(cache=True)
def _rate(form, a, v0, k, v):
    y = (v - v0) / k
    if form == 0:  # linoid, removable singularity at y = 0
        if abs(y) < 1e-7:
            return a * k * (1.0 + 0.5 * y)
        return a * k * y / (1.0 - _cexp(-y))
    if form == 1:
        return a * _cexp(-y)
    return a / (1.0 + _cexp(-y))


@njit(cache=True)
def _sigmoid(v, rho, kappa):
    return 1.0 / (1.0 + _cexp(-(v - rho) / kappa))


@njit(cache=True)
def _gate_deriv(kin, x, v):
    if kin[0] == 0.0:  # tau/sigma parametric
        sig = _sigmoid(v, kin[1], kin[2])
        z = (v - kin[5]) / kin[6]
        tau = kin[3] + (kin[4] - kin[3]) * _cexp(-z * z)
        return (sig - x) / tau
    a = _rate(int(kin[1]), kin[2], kin[3], kin[4], v)
    b = _rate(int(kin[5]), kin[6], kin[7], kin[8], v)
    return a * (1.0 - x) - b * x


@njit(cache=True)
def _ipow(x, p):
    out = 1.0
    for _ in range(p):
        out *= x
    return out


@njit(cache=True)
def _phi_gdot(lm, v_drive, w, phi, dw):
    """Fill the stacked regressor (rows zeroed first) and gating derivatives,
    both evaluated at the driving voltage."""
    n_v = lm.c.shape[0]
    m = lm.kind.shape[0]
    phi[:, :] = 0.0
    for j in range(m):
        wo = lm.w_off[j]
        to = lm.th_off[j]
        if lm.kind[j] == 0:
            g = 2 if lm.q_exp[j] > 0 else 1
            for i in range(n_v):
                mm = w[wo + i * g]
                dw[wo + i * g] = _gate_deriv(lm.kin_m[j], mm, v_drive[i])
                gate = _ipow(mm, lm.p_exp[j])
                if lm.q_exp[j] > 0:
                    hh = w[wo + i * g + 1]
                    dw[wo + i * g + 1] = _gate_deriv(lm.kin_h[j], hh, v_drive[i])
                    gate *= _ipow(hh, lm.q_exp[j])
                phi[to + i, i] = -gate * (v_drive[i] - lm.E[j]) / lm.c[i]
        else:
            for e in range(lm.edge_off[j], lm.edge_off[j + 1]):
                le = e - lm.edge_off[j]
                s = w[wo + le]
                post = lm.edge_post[e]
                pre = lm.edge_pre[e]
                sig = _sigmoid(v_drive[pre], lm.syn[j, 2], lm.syn[j, 3])
                dw[wo + le] = lm.syn[j, 0] * sig * (1.0 - s) - lm.syn[j, 1] * s
                phi[to + le, post] = -s * (v_drive[post] - lm.E[j]) / lm.c[post]


@njit(cache=True)
def _a_vec(lm, v, u, out):
    for i in range(lm.c.shape[0]):
        out[i] = (-lm.mu_leak[i] * (v[i] - lm.e_leak[i]) + u[i]) / lm.c[i]


@njit(cache=True)
def _theta_eval(sched, t, out):
    for k in range(sched.shape[0]):
        if sched[k, 0] == 0.0:
            out[k] = sched[k, 1]
        else:
            out[k] = sched[k, 1] + sched[k, 2] / (1.0 + _cexp(-(t - sched[k, 3]) / sched[k, 4]))


@njit(cache=True)
def _u_eval(u0, term_off, term_amp, term_per, t, out):
    for i in range(u0.shape[0]):
        acc = u0[i]
        for k in range(term_off[i], term_off[i + 1]):
            acc += term_amp[k] * math.sin(2.0 * math.pi * t / term_per[k])
        out[i] = acc


@njit(cache=True)
def _finite(x):
    for i in range(x.shape[0]):
        if not math.isfinite(x[i]):
            return False
    return True


# --------------------------------------------------------------------------
# integrators; state arrays are updated in place, chunk by chunk

@njit(cache=True)
def integrate_none(lm, u0, term_off, term_amp, term_per,
                   v, w, t0, dt, n_steps, step0, stride,
                   rec_v, rec_w, sumsq):
    n_v = v.shape[0]
    n_th = lm.sched.shape[0]
    phi = np.zeros((n_th, n_v))
    dw = np.zeros(w.shape[0])
    a = np.zeros(n_v)
    u = np.zeros(n_v)
    th = np.zeros(n_th)
    dv = np.zeros(n_v)
    for k in range(n_steps):
        g = step0 + k
        t = t0 + k * dt
        if g % stride == 0:
            row = g // stride
            if not _finite(v):
                return 1, t
            rec_v[row] = v
            rec_w[row] = w
        _phi_gdot(lm, v, w, phi, dw)
        _u_eval(u0, term_off, term_amp, term_per, t, u)
        _a_vec(lm, v, u, a)
        _theta_eval(lm.sched, t, th)
        for i in range(n_v):
            acc = a[i]
            for p in range(n_th):
                acc += phi[p, i] * th[p]
            dv[i] = acc
            sumsq[i] += v[i] * v[i]
        for i in range(n_v):
            v[i] += dt * dv[i]
        for i in range(w.shape[0]):
            w[i] += dt * dw[i]
    return 0, t0 + n_steps * dt


@njit(cache=True)
def integrate_full(lm, u0, term_off, term_amp, term_per,
                   v, w, vhat, what, th_hat, Psi, P,
                   gamma, alpha,
                   t0, dt, n_steps, step0, stride,
                   noise, use_noise,
                   rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th,
                   rec_psi, rec_P):
    n_v = v.shape[0]
    n_th = th_hat.shape[0]
    n_w = w.shape[0]
    phi = np.zeros((n_th, n_v))
    phi_o = np.zeros((n_th, n_v))
    dw = np.zeros(n_w)
    dwhat = np.zeros(n_w)
    a = np.zeros(n_v)
    u = np.zeros(n_v)
    th = np.zeros(n_th)
    dv = np.zeros(n_v)
    dvhat = np.zeros(n_v)
    vmeas = np.zeros(n_v)
    r = np.zeros(n_v)
    y = np.zeros(n_th)
    z = np.zeros(n_th)
    G = np.zeros((n_th, n_th))
    T = np.zeros((n_th, n_th))
    dPsi = np.zeros((n_th, n_v))
    dP = np.zeros((n_th, n_th))
    dth = np.zeros(n_th)
    for k in range(n_steps):
        g = step0 + k
        t = t0 + k * dt
        for i in range(n_v):
            vmeas[i] = v[i] + (noise[k, i] if use_noise else 0.0)
        if g % stride == 0:
            row = g // stride
            if not (_finite(v) and _finite(th_hat)):
                return 1, t
            rec_v[row] = v
            rec_w[row] = w
            rec_vmeas[row] = vmeas
            rec_vhat[row] = vhat
            rec_what[row] = what
            rec_th[row] = th_hat
            for p in range(n_th):
                for i in range(n_v):
                    rec_psi[row, p * n_v + i] = Psi[p, i]
            for p in range(n_th):
                for q in range(n_th):
                    rec_P[row, p * n_th + q] = P[p, q]
        # true system
        _u_eval(u0, term_off, term_amp, term_per, t, u)
        _phi_gdot(lm, v, w, phi, dw)
        _a_vec(lm, v, u, a)
        _theta_eval(lm.sched, t, th)
        for i in range(n_v):
            acc = a[i]
            for p in range(n_th):
                acc += phi[p, i] * th[p]
            dv[i] = acc
        # observer, driven by the measured voltage
        _phi_gdot(lm, vmeas, what, phi_o, dwhat)
        _a_vec(lm, vmeas, u, a)
        for i in range(n_v):
            r[i] = vmeas[i] - vhat[i]
        for p in range(n_th):
            acc = 0.0
            for i in range(n_v):
                acc += Psi[p, i] * r[i]
            y[p] = acc
        for p in range(n_th):
            acc = 0.0
            for q in range(n_th):
                acc += P[p, q] * y[q]
            z[p] = acc
        for i in range(n_v):
            acc = r[i]
            for p in range(n_th):
                acc += Psi[p, i] * z[p]
            dvhat[i] = a[i] + gamma * acc
            for p in range(n_th):
                dvhat[i] += phi_o[p, i] * th_hat[p]
        for p in range(n_th):
            dth[p] = gamma * z[p]
            for i in range(n_v):
                dPsi[p, i] = -gamma * Psi[p, i] + phi_o[p, i]
        for p in range(n_th):
            for q in range(n_th):
                acc = 0.0
                for i in range(n_v):
                    acc += Psi[p, i] * Psi[q, i]
                G[p, q] = acc
        for p in range(n_th):
            for q in range(n_th):
                acc = 0.0
                for s in range(n_th):
                    acc += P[p, s] * G[s, q]
                T[p, q] = acc
        for p in range(n_th):
            for q in range(n_th):
                acc = 0.0
                for s in range(n_th):
                    acc += T[p, s] * P[s, q]
                dP[p, q] = alpha * P[p, q] - alpha * acc
        # Euler update
        for i in range(n_v):
            v[i] += dt * dv[i]
            vhat[i] += dt * dvhat[i]
        for i in range(n_w):
            w[i] += dt * dw[i]
            what[i] += dt * dwhat[i]
        for p in range(n_th):
            th_hat[p] += dt * dth[p]
            for i in range(n_v):
                Psi[p, i] += dt * dPsi[p, i]
            for q in range(n_th):
                P[p, q] += dt * dP[p, q]
    return 0, t0 + n_steps * dt


@njit(cache=True)
def integrate_dist(lm, u0, term_off, term_amp, term_per,
                   v, w, vhat, what, th_hat, psi_flat, p_flat,
                   psi_off, p_off, gamma0, gamma, alpha,
                   t0, dt, n_steps, step0, stride,
                   noise, use_noise,
                   rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th,
                   rec_psi, rec_P):
    n_v = v.shape[0]
    n_th = th_hat.shape[0]
    n_w = w.shape[0]
    m = lm.kind.shape[0]
    nb_max = 0
    for j in range(m):
        nb = lm.th_off[j + 1] - lm.th_off[j]
        if nb > nb_max:
            nb_max = nb
    phi = np.zeros((n_th, n_v))
    phi_o = np.zeros((n_th, n_v))
    dw = np.zeros(n_w)
    dwhat = np.zeros(n_w)
    a = np.zeros(n_v)
    u = np.zeros(n_v)
    th = np.zeros(n_th)
    dv = np.zeros(n_v)
    dvhat = np.zeros(n_v)
    vmeas = np.zeros(n_v)
    r = np.zeros(n_v)
    y = np.zeros(nb_max)
    z = np.zeros(nb_max)
    G = np.zeros((nb_max, nb_max))
    T = np.zeros((nb_max, nb_max))
    dth = np.zeros(n_th)
    dpsi = np.zeros(psi_flat.shape[0])
    dp = np.zeros(p_flat.shape[0])
    for k in range(n_steps):
        g = step0 + k
        t = t0 + k * dt
        for i in range(n_v):
            vmeas[i] = v[i] + (noise[k, i] if use_noise else 0.0)
        if g % stride == 0:
            row = g // stride
            if not (_finite(v) and _finite(th_hat)):
                return 1, t
            rec_v[row] = v
            rec_w[row] = w
            rec_vmeas[row] = vmeas
            rec_vhat[row] = vhat
            rec_what[row] = what
            rec_th[row] = th_hat
            rec_psi[row] = psi_flat
            rec_P[row] = p_flat
        # true system
        _u_eval(u0, term_off, term_amp, term_per, t, u)
        _phi_gdot(lm, v, w, phi, dw)
        _a_vec(lm, v, u, a)
        _theta_eval(lm.sched, t, th)
        for i in range(n_v):
            acc = a[i]
            for p in range(n_th):
                acc += phi[p, i] * th[p]
            dv[i] = acc
        # observer
        _phi_gdot(lm, vmeas, what, phi_o, dwhat)
        _a_vec(lm, vmeas, u, a)
        for i in range(n_v):
            r[i] = vmeas[i] - vhat[i]
            dvhat[i] = a[i] + gamma0 * r[i]
            for p in range(n_th):
                dvhat[i] += phi_o[p, i] * th_hat[p]
        for j in range(m):
            to = lm.th_off[j]
            nb = lm.th_off[j + 1] - to
            po = psi_off[j]
            qo = p_off[j]
            gj = gamma[j]
            aj = alpha[j]
            for pp in range(nb):
                acc = 0.0
                for i in range(n_v):
                    acc += psi_flat[po + pp * n_v + i] * r[i]
                y[pp] = acc
            for pp in range(nb):
                acc = 0.0
                for qq in range(nb):
                    acc += p_flat[qo + pp * nb + qq] * y[qq]
                z[pp] = acc
            for pp in range(nb):
                dth[to + pp] = gj * z[pp]
            for i in range(n_v):
                acc = 0.0
                for pp in range(nb):
                    acc += psi_flat[po + pp * n_v + i] * z[pp]
                dvhat[i] += gj * acc
            for pp in range(nb):
                for i in range(n_v):
                    idx = po + pp * n_v + i
                    dpsi[idx] = -gj * psi_flat[idx] + phi_o[to + pp, i]
            for pp in range(nb):
                for qq in range(nb):
                    acc = 0.0
                    for i in range(n_v):
                        acc += psi_flat[po + pp * n_v + i] * psi_flat[po + qq * n_v + i]
                    G[pp, qq] = acc
            for pp in range(nb):
                for qq in range(nb):
                    acc = 0.0
                    for ss in range(nb):
                        acc += p_flat[qo + pp * nb + ss] * G[ss, qq]
                    T[pp, qq] = acc
            for pp in range(nb):
                for qq in range(nb):
                    acc = 0.0
                    for ss in range(nb):
                        acc += T[pp, ss] * p_flat[qo + ss * nb + qq]
                    dp[qo + pp * nb + qq] = aj * p_flat[qo + pp * nb + qq] - aj * acc
        # Euler update
        for i in range(n_v):
            v[i] += dt * dv[i]
            vhat[i] += dt * dvhat[i]
        for i in range(n_w):
            w[i] += dt * dw[i]
            what[i] += dt * dwhat[i]
        for p in range(n_th):
            th_hat[p] += dt * dth[p]
        for i in range(psi_flat.shape[0]):
            psi_flat[i] += dt * dpsi[i]
        for i in range(p_flat.shape[0]):
            p_flat[i] += dt * dp[i]
    return 0, t0 + n_steps * dt


@njit(cache=True)
def integrate_scalar(lm, u0, term_off, term_amp, term_per,
                     v, w, vhat, what, th_hat, psi, pdiag,
                     col_of, gamma0, gamma, alpha,
                     t0, dt, n_steps, step0, stride,
                     noise, use_noise,
                     rec_v, rec_w, rec_vmeas, rec_vhat, rec_what, rec_th,
                     rec_psi, rec_P):
    n_v = v.shape[0]
    n_th = th_hat.shape[0]
    n_w = w.shape[0]
    m = lm.kind.shape[0]
    phi = np.zeros((n_th, n_v))
    phi_o = np.zeros((n_th, n_v))
    dw = np.zeros(n_w)
    dwhat = np.zeros(n_w)
    a = np.zeros(n_v)
    u = np.zeros(n_v)
    th = np.zeros(n_th)
    dv = np.zeros(n_v)
    dvhat = np.zeros(n_v)
    vmeas = np.zeros(n_v)
    r = np.zeros(n_v)
    dth = np.zeros(n_th)
    dpsi = np.zeros(n_th)
    dp = np.zeros(n_th)
    for k in range(n_steps):
        g = step0 + k
        t = t0 + k * dt
        for i in range(n_v):
            vmeas[i] = v[i] + (noise[k, i] if use_noise else 0.0)
        if g % stride == 0:
            row = g // stride
            if not (_finite(v) and _finite(th_hat)):
                return 1, t
            rec_v[row] = v
            rec_w[row] = w
            rec_vmeas[row] = vmeas
            rec_vhat[row] = vhat
            rec_what[row] = what
            rec_th[row] = th_hat
            rec_psi[row] = psi
            rec_P[row] = pdiag
        # true system
        _u_eval(u0, term_off, term_amp, term_per, t, u)
        _phi_gdot(lm, v, w, phi, dw)
        _a_vec(lm, v, u, a)
        _theta_eval(lm.sched, t, th)
        for i in range(n_v):
            acc = a[i]
            for p in range(n_th):
                acc += phi[p, i] * th[p]
            dv[i] = acc
        # observer (all blocks diagonal)
        _phi_gdot(lm, vmeas, what, phi_o, dwhat)
        _a_vec(lm, vmeas, u, a)
        for i in range(n_v):
            r[i] = vmeas[i] - vhat[i]
            dvhat[i] = a[i] + gamma0 * r[i]
            for p in range(n_th):
                dvhat[i] += phi_o[p, i] * th_hat[p]
        for j in range(m):
            to = lm.th_off[j]
            nb = lm.th_off[j + 1] - to
            gj = gamma[j]
            aj = alpha[j]
            for pp in range(nb):
                idx = to + pp
                i = col_of[idx]
                yk = psi[idx] * r[i]
                zk = pdiag[idx] * yk
                dth[idx] = gj * zk
                dvhat[i] += gj * (psi[idx] * zk)
                dpsi[idx] = -gj * psi[idx] + phi_o[idx, i]
                dp[idx] = aj * pdiag[idx] - aj * (pdiag[idx] * (psi[idx] * psi[idx]) * pdiag[idx])
        # Euler update
        for i in range(n_v):
            v[i] += dt * dv[i]
            vhat[i] += dt * dvhat[i]
        for i in range(n_w):
            w[i] += dt * dw[i]
            what[i] += dt * dwhat[i]
        for p in range(n_th):
            th_hat[p] += dt * dth[p]
            psi[p] += dt * dpsi[p]
            pdiag[p] += dt * dp[p]
    return 0, t0 + n_steps * dt
