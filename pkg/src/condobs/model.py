"""Networked conductance-based system: currents, regressors, drift, presets.

The voltage dynamics are linear in the maximal conductances:

    v_dot = sum_j Phi_j(v, w_j)^T theta_j + a(v, u)

with one regressor block Phi_j per current type and first-order gating
dynamics w_j_dot = g_j(v, w_j). Capacitances divide the whole right side, so
the c = 1 case reproduces the usual current-balance equation verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinetics import (
    EXP_CLAMP,
    GateKinetics,
    SigmoidParams,
    SynapseKinetics,
    gate_derivative,
    sigmoid,
    synapse_derivative,
    HH_NA_M,
    HH_NA_H,
    HH_K_N,
)


class ModelError(ValueError):
    """Raised for inconsistent network descriptions or state dimensions."""


# --------------------------------------------------------------------------
# Parameter schedules (true conductances may drift slowly in time)

@dataclass(frozen=True)
class Constant:
    value: float

    def at(self, t):
        return self.value + 0.0 * np.asarray(t)

    def frozen_at(self, t):
        return self


@dataclass(frozen=True)
class LogisticRamp:
    """base + amp * (1 + exp(-(t - t0)/tau_r))^-1, t in ms."""

    base: float
    amp: float
    t0: float
    tau_r: float

    def at(self, t):
        z = np.clip(-(np.asarray(t) - self.t0) / self.tau_r, -EXP_CLAMP, EXP_CLAMP)
        return self.base + self.amp / (1.0 + np.exp(z))

    def frozen_at(self, t):
        return Constant(float(self.at(t)))


Schedule = Constant | LogisticRamp


# --------------------------------------------------------------------------
# Current types and the assembled network

@dataclass(frozen=True)
class CurrentType:
    """One membrane current type: label, reversal potential, kinetics.

    Intrinsic types carry an activation gate ``m`` (exponent p >= 1) and an
    optional inactivation gate ``h`` (exponent q >= 1; omitted means q = 0).
    Synaptic types carry SynapseKinetics, one gating state per directed edge.
    """

    id: str
    kind: str  # "intrinsic" | "synaptic"
    nernst: float
    m: GateKinetics | None = None
    h: GateKinetics | None = None
    syn: SynapseKinetics | None = None

    def __post_init__(self):
        if self.kind == "intrinsic":
            if self.m is None or self.syn is not None:
                raise ModelError(f"intrinsic type {self.id!r} needs m-kinetics only")
            if self.m.exponent < 1:
                raise ModelError(f"type {self.id!r}: activation exponent p must be >= 1")
            if self.h is not None and self.h.exponent < 1:
                raise ModelError(f"type {self.id!r}: inactivation exponent q must be >= 1")
        elif self.kind == "synaptic":
            if self.syn is None or self.m is not None or self.h is not None:
                raise ModelError(f"synaptic type {self.id!r} needs SynapseKinetics only")
        else:
            raise ModelError(f"unknown current kind {self.kind!r}")

    @property
    def gates_per_neuron(self) -> int:
        return 2 if self.h is not None else 1


@dataclass(frozen=True)
class NetworkModel:
    """Immutable description of a conductance-based network.

    ``synapse_edges`` maps synaptic type ids to directed (post, pre) pairs;
    edge order fixes both the gating layout and the theta layout of that
    block. ``theta_true`` holds one Schedule per conductance, in block order.
    """

    n_v: int
    c: tuple[float, ...]
    mu_leak: tuple[float, ...]
    e_leak: tuple[float, ...]
    current_types: tuple[CurrentType, ...]
    synapse_edges: dict[str, tuple[tuple[int, int], ...]] = field(default_factory=dict)
    theta_true: dict[str, tuple[Schedule, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.c) != self.n_v or len(self.mu_leak) != self.n_v or len(self.e_leak) != self.n_v:
            raise ModelError("c, mu_leak, e_leak must have one entry per neuron")
        if any(ci <= 0 for ci in self.c):
            raise ModelError("capacitances must be positive")
        ids = [ct.id for ct in self.current_types]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate current type ids")
        for ct in self.current_types:
            if ct.kind == "synaptic":
                edges = self.synapse_edges.get(ct.id)
                if not edges:
                    raise ModelError(f"synaptic type {ct.id!r} has no edges")
                for post, pre in edges:
                    if post == pre:
                        raise ModelError(f"self-loop edge on type {ct.id!r}")
                    if not (0 <= post < self.n_v and 0 <= pre < self.n_v):
                        raise ModelError(f"edge out of range on type {ct.id!r}")
            if ct.id not in self.theta_true or len(self.theta_true[ct.id]) != self.n_theta_block(ct.id):
                raise ModelError(f"theta_true for type {ct.id!r} has wrong length")

    # -- layout ------------------------------------------------------------

    @property
    def m_types(self) -> int:
        return len(self.current_types)

    def type_index(self, type_id: str) -> int:
        for j, ct in enumerate(self.current_types):
            if ct.id == type_id:
                return j
        raise ModelError(f"unknown current type {type_id!r}")

    def edges(self, type_id: str) -> tuple[tuple[int, int], ...]:
        return self.synapse_edges[type_id]

    def n_w_block(self, type_id: str) -> int:
        ct = self.current_types[self.type_index(type_id)]
        if ct.kind == "intrinsic":
            return self.n_v * ct.gates_per_neuron
        return len(self.edges(type_id))

    def n_theta_block(self, type_id: str) -> int:
        ct = self.current_types[self.type_index(type_id)]
        if ct.kind == "intrinsic":
            return self.n_v
        return len(self.edges(type_id))

    @property
    def n_w(self) -> int:
        return sum(self.n_w_block(ct.id) for ct in self.current_types)

    @property
    def n_theta(self) -> int:
        return sum(self.n_theta_block(ct.id) for ct in self.current_types)

    def w_offsets(self) -> list[int]:
        off, out = 0, []
        for ct in self.current_types:
            out.append(off)
            off += self.n_w_block(ct.id)
        out.append(off)
        return out

    def theta_offsets(self) -> list[int]:
        off, out = 0, []
        for ct in self.current_types:
            out.append(off)
            off += self.n_theta_block(ct.id)
        out.append(off)
        return out

    def w_block(self, w: np.ndarray, j: int) -> np.ndarray:
        off = self.w_offsets()
        return w[off[j]:off[j + 1]]

    def theta_block(self, theta: np.ndarray, j: int) -> np.ndarray:
        off = self.theta_offsets()
        return theta[off[j]:off[j + 1]]

    def nernst(self, type_id: str) -> float:
        return self.current_types[self.type_index(type_id)].nernst

    def theta_at(self, t) -> np.ndarray:
        """True conductance vector at time t (ms), in block order."""
        vals = []
        for ct in self.current_types:
            vals.extend(s.at(t) for s in self.theta_true[ct.id])
        return np.asarray(vals, dtype=float)

    def frozen(self, t: float) -> "NetworkModel":
        """Copy of the model with every theta schedule pinned at its value at t."""
        frozen = {
            tid: tuple(s.frozen_at(t) for s in scheds)
            for tid, scheds in self.theta_true.items()
        }
        return NetworkModel(
            n_v=self.n_v, c=self.c, mu_leak=self.mu_leak, e_leak=self.e_leak,
            current_types=self.current_types, synapse_edges=self.synapse_edges,
            theta_true=frozen,
        )

    @property
    def phi_is_diagonal(self) -> bool:
        """True when every regressor block is diagonal (one parameter per neuron,
        synaptic edge e posting onto neuron e)."""
        for ct in self.current_types:
            if ct.kind == "synaptic":
                edges = self.edges(ct.id)
                if len(edges) != self.n_v:
                    return False
                if any(post != e for e, (post, _) in enumerate(edges)):
                    return False
        return True

    # -- column labels for traces ------------------------------------------

    def w_labels(self) -> list[str]:
        out = []
        for ct in self.current_types:
            if ct.kind == "intrinsic":
                for i in range(self.n_v):
                    out.append(f"{ct.id}.m{i + 1}")
                    if ct.h is not None:
                        out.append(f"{ct.id}.h{i + 1}")
            else:
                for post, pre in self.edges(ct.id):
                    out.append(f"{ct.id}.s{post + 1}{pre + 1}")
        return out

    def theta_labels(self) -> list[str]:
        out = []
        for ct in self.current_types:
            if ct.kind == "intrinsic":
                out.extend(f"{ct.id}.{i + 1}" for i in range(self.n_v))
            else:
                out.extend(f"{ct.id}.{post + 1}{pre + 1}" for post, pre in self.edges(ct.id))
        return out


@dataclass
class SystemState:
    """Membrane voltages and the flat gating vector, blocks in model order."""

    v: np.ndarray
    w: np.ndarray

    def copy(self) -> "SystemState":
        return SystemState(self.v.copy(), self.w.copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.w])


# --------------------------------------------------------------------------
# Regressor, drift, and full derivative

def assemble_phi(model: NetworkModel, j: int, v: np.ndarray, w_j: np.ndarray) -> np.ndarray:
    """Regressor block Phi_j, shape (n_theta_j, n_v).

    Intrinsic: diagonal, entry i is -(m_i^p h_i^q)(v_i - E)/c_i. Synaptic:
    row e carries -s_e (v_post - E)/c_post in column post. The 1/c_i factor
    generalizes the unit-capacitance current-balance form.
    """
    ct = model.current_types[j]
    v = np.asarray(v, dtype=float)
    if v.shape != (model.n_v,):
        raise ModelError("voltage vector has wrong length")
    if len(w_j) != model.n_w_block(ct.id):
        raise ModelError(f"gating block for {ct.id!r} has wrong length")
    c = np.asarray(model.c)
    phi = np.zeros((model.n_theta_block(ct.id), model.n_v))
    if ct.kind == "intrinsic":
        g = ct.gates_per_neuron
        for i in range(model.n_v):
            gate = w_j[i * g] ** ct.m.exponent
            if ct.h is not None:
                gate *= w_j[i * g + 1] ** ct.h.exponent
            phi[i, i] = -gate * (v[i] - ct.nernst) / c[i]
    else:
        for e, (post, _pre) in enumerate(model.edges(ct.id)):
            phi[e, post] = -w_j[e] * (v[post] - ct.nernst) / c[post]
    return phi


def assemble_phi_all(model: NetworkModel, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Stacked regressor, shape (n_theta, n_v), blocks in model order."""
    return np.vstack([
        assemble_phi(model, j, v, model.w_block(w, j))
        for j in range(model.m_types)
    ])


def assemble_a(model: NetworkModel, v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Known drift: (-mu_leak,i (v_i - E_leak,i) + u_i)/c_i."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if v.shape != (model.n_v,) or u.shape != (model.n_v,):
        raise ModelError("v and u must have one entry per neuron")
    mu = np.asarray(model.mu_leak)
    return (-mu * (v - np.asarray(model.e_leak)) + u) / np.asarray(model.c)


def gating_derivative(model: NetworkModel, v_drive: np.ndarray, w: np.ndarray) -> np.ndarray:
    """g(v_drive, w): stacked gating derivatives driven by the given voltages."""
    v_drive = np.asarray(v_drive, dtype=float)
    dw = np.empty_like(np.asarray(w, dtype=float))
    off = model.w_offsets()
    for j, ct in enumerate(model.current_types):
        blk = np.asarray(w[off[j]:off[j + 1]], dtype=float)
        if ct.kind == "intrinsic":
            g = ct.gates_per_neuron
            for i in range(model.n_v):
                dw[off[j] + i * g] = gate_derivative(blk[i * g], v_drive[i], ct.m)
                if ct.h is not None:
                    dw[off[j] + i * g + 1] = gate_derivative(blk[i * g + 1], v_drive[i], ct.h)
        else:
            for e, (_post, pre) in enumerate(model.edges(ct.id)):
                dw[off[j] + e] = synapse_derivative(blk[e], v_drive[pre], ct.syn)
    return dw


def system_derivative(model: NetworkModel, state: SystemState, u: np.ndarray, t: float) -> SystemState:
    """Time derivative of the true system at time t (theta from its schedules)."""
    theta = model.theta_at(t)
    phi = assemble_phi_all(model, state.v, state.w)
    dv = phi.T @ theta + assemble_a(model, state.v, u)
    dw = gating_derivative(model, state.v, state.w)
    return SystemState(dv, dw)


# --------------------------------------------------------------------------
# Presets

GABA_SIGMOID = SigmoidParams(rho=-45.0, kappa=2.0)


def hh_two_neuron_preset() -> NetworkModel:
    """Two squid-axon neurons coupled bidirectionally by an inhibitory synapse.

    Sodium and potassium intrinsic currents with canonical 1952 kinetics,
    GABA-type synapse with slowly crossing conductance ramps centered at
    t = 750 ms.
    """
    na = CurrentType(id="Na", kind="intrinsic", nernst=55.0, m=HH_NA_M, h=HH_NA_H)
    k = CurrentType(id="K", kind="intrinsic", nernst=-77.0, m=HH_K_N)
    gaba = CurrentType(
        id="G", kind="synaptic", nernst=-80.0,
        syn=SynapseKinetics(a_syn=2.0, b_syn=0.1, presyn_sigmoid=GABA_SIGMOID),
    )
    return NetworkModel(
        n_v=2,
        c=(1.0, 1.0),
        mu_leak=(0.3, 0.3),
        e_leak=(-54.4, -54.4),
        current_types=(na, k, gaba),
        synapse_edges={"G": ((0, 1), (1, 0))},
        theta_true={
            "Na": (Constant(120.0), Constant(120.0)),
            "K": (Constant(36.0), Constant(36.0)),
            "G": (
                LogisticRamp(base=0.75, amp=-0.4, t0=750.0, tau_r=100.0),
                LogisticRamp(base=0.25, amp=0.4, t0=750.0, tau_r=100.0),
            ),
        },
    )


def hh2_initial_state() -> SystemState:
    """True-system initial conditions for the two-neuron preset."""
    v0 = np.array([0.0, -60.0])
    w0 = np.concatenate([
        np.array([0.0, 0.5, 0.0, 0.5]),   # Na: m1 h1 m2 h2
        np.array([0.0, 0.5]),             # K: n1 n2
        np.array([0.0, 0.5]),             # G: s12 s21
    ])
    return SystemState(v0, w0)


def hh2_observer_init() -> dict:
    """Observer initial conditions for the two-neuron preset."""
    return {
        "v0": np.array([0.0, -60.0]),
        "w0": np.concatenate([
            np.array([0.5, 0.0, 0.5, 0.0]),
            np.array([0.5, 0.0]),
            np.array([0.5, 0.0]),
        ]),
        "theta0": np.array([78.0, 78.0, 78.0, 78.0, 0.0, 0.0]),
    }


def single_type_preset() -> NetworkModel:
    """One neuron with a single potassium-style current; m = 1 reduction tests."""
    k = CurrentType(id="K", kind="intrinsic", nernst=-77.0, m=HH_K_N)
    return NetworkModel(
        n_v=1,
        c=(1.0,),
        mu_leak=(0.3,),
        e_leak=(-54.4,),
        current_types=(k,),
        theta_true={"K": (Constant(36.0),)},
    )


MODEL_PRESETS = {
    "hh2": hh_two_neuron_preset,
    "single-k": single_type_preset,
}


def model_preset(name: str) -> NetworkModel:
    try:
        return MODEL_PRESETS[name]()
    except KeyError:
        raise ModelError(f"unknown model preset {name!r}") from None
