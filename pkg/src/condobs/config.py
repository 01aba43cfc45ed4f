"""JSON experiment configuration: load, validate, and build runnable objects.

Configs are plain JSON. Units: times in ms, voltages in mV, currents in
uA/cm^2, conductances in mS/cm^2, snr in dB. Unknown fields anywhere in the
document are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .engine import IntegratorConfig, Multisine, NoiseConfig, input_preset
from .kinetics import (
    BellTauParams,
    GateKinetics,
    RateFn,
    SigmoidParams,
    SynapseKinetics,
)
from .model import (
    Constant,
    CurrentType,
    LogisticRamp,
    NetworkModel,
    SystemState,
    hh2_initial_state,
    hh2_observer_init,
    model_preset,
)
from .observer import GainSchedule, gain_preset, FULL_GAIN_DEFAULT


class ConfigError(ValueError):
    """Raised for malformed, unknown, or inconsistent configuration fields."""


def _check_keys(d: dict, allowed: set[str], ctx: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in {ctx}: {sorted(unknown)}")


# --------------------------------------------------------------------------
# Inline network-model schema

def _schedule_to_json(s) -> dict:
    if isinstance(s, Constant):
        return {"kind": "constant", "value": s.value}
    if isinstance(s, LogisticRamp):
        return {"kind": "logistic", "base": s.base, "amp": s.amp,
                "t0": s.t0, "tau_r": s.tau_r}
    raise ConfigError(f"unserializable schedule {type(s).__name__}")


def _schedule_from_json(d: dict):
    kind = d.get("kind")
    if kind == "constant":
        _check_keys(d, {"kind", "value"}, "schedule")
        return Constant(float(d["value"]))
    if kind == "logistic":
        _check_keys(d, {"kind", "base", "amp", "t0", "tau_r"}, "schedule")
        return LogisticRamp(float(d["base"]), float(d["amp"]),
                            float(d["t0"]), float(d["tau_r"]))
    raise ConfigError(f"unknown schedule kind {kind!r}")


def _gate_to_json(g: GateKinetics) -> dict:
    if g.is_parametric:
        return {
            "exponent": g.exponent,
            "sigma": {"rho": g.sigma.rho, "kappa": g.sigma.kappa},
            "tau": {"tau_min": g.tau.tau_min, "tau_max": g.tau.tau_max,
                    "zeta": g.tau.zeta, "chi": g.tau.chi},
        }
    def rate(r: RateFn) -> dict:
        return {"form": r.form, "a": r.a, "v0": r.v0, "k": r.k}
    return {"exponent": g.exponent, "alpha": rate(g.alpha), "beta": rate(g.beta)}


def _gate_from_json(d: dict) -> GateKinetics:
    _check_keys(d, {"exponent", "sigma", "tau", "alpha", "beta"}, "gate kinetics")
    exp = int(d["exponent"])
    if "sigma" in d or "tau" in d:
        sg, tu = d["sigma"], d["tau"]
        _check_keys(sg, {"rho", "kappa"}, "sigma")
        _check_keys(tu, {"tau_min", "tau_max", "zeta", "chi"}, "tau")
        return GateKinetics.parametric(
            SigmoidParams(float(sg["rho"]), float(sg["kappa"])),
            BellTauParams(float(tu["tau_min"]), float(tu["tau_max"]),
                          float(tu["zeta"]), float(tu["chi"])),
            exponent=exp)
    def rate(r: dict) -> RateFn:
        _check_keys(r, {"form", "a", "v0", "k"}, "rate function")
        return RateFn(str(r["form"]), float(r["a"]), float(r["v0"]), float(r["k"]))
    return GateKinetics.canonical(rate(d["alpha"]), rate(d["beta"]), exponent=exp)


def model_to_json(model: NetworkModel) -> dict:
    types = []
    for ct in model.current_types:
        entry = {"id": ct.id, "kind": ct.kind, "nernst": ct.nernst}
        if ct.kind == "intrinsic":
            entry["m"] = _gate_to_json(ct.m)
            if ct.h is not None:
                entry["h"] = _gate_to_json(ct.h)
        else:
            entry["syn"] = {
                "a_syn": ct.syn.a_syn, "b_syn": ct.syn.b_syn,
                "rho": ct.syn.presyn_sigmoid.rho,
                "kappa": ct.syn.presyn_sigmoid.kappa,
            }
            entry["edges"] = [list(e) for e in model.edges(ct.id)]
        types.append(entry)
    return {
        "n_v": model.n_v,
        "c": list(model.c),
        "mu_leak": list(model.mu_leak),
        "e_leak": list(model.e_leak),
        "current_types": types,
        "theta_true": {tid: [_schedule_to_json(s) for s in scheds]
                       for tid, scheds in model.theta_true.items()},
    }


def model_from_json(d: dict) -> NetworkModel:
    _check_keys(d, {"n_v", "c", "mu_leak", "e_leak", "current_types", "theta_true"},
                "model")
    types, edges = [], {}
    for entry in d["current_types"]:
        _check_keys(entry, {"id", "kind", "nernst", "m", "h", "syn", "edges"},
                    "current type")
        kind = entry["kind"]
        if kind == "intrinsic":
            types.append(CurrentType(
                id=entry["id"], kind=kind, nernst=float(entry["nernst"]),
                m=_gate_from_json(entry["m"]),
                h=_gate_from_json(entry["h"]) if "h" in entry else None))
        else:
            syn = entry.get("syn", {})
            _check_keys(syn, {"a_syn", "b_syn", "rho", "kappa"}, "synapse kinetics")
            types.append(CurrentType(
                id=entry["id"], kind=kind, nernst=float(entry["nernst"]),
                syn=SynapseKinetics(
                    float(syn["a_syn"]), float(syn["b_syn"]),
                    SigmoidParams(float(syn["rho"]), float(syn["kappa"])))))
            edges[entry["id"]] = tuple((int(p), int(q)) for p, q in entry["edges"])
    try:
        return NetworkModel(
            n_v=int(d["n_v"]),
            c=tuple(float(x) for x in d["c"]),
            mu_leak=tuple(float(x) for x in d["mu_leak"]),
            e_leak=tuple(float(x) for x in d["e_leak"]),
            current_types=tuple(types),
            synapse_edges=edges,
            theta_true={tid: tuple(_schedule_from_json(s) for s in scheds)
                        for tid, scheds in d["theta_true"].items()},
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------------------
# Experiment configuration

_OBSERVER_MODES = ("none", "full", "distributed", "distributed-scalar")


@dataclass
class ExperimentConfig:
    """One experiment: model, observer flavor, gains, integration, noise, inputs."""

    model: str | dict = "hh2"
    observer: str = "distributed-scalar"
    gains: dict = field(default_factory=lambda: {"preset": "A"})
    integrator: dict = field(default_factory=lambda: {
        "t_end": 1300.0, "dt": 1e-4, "record_stride": 100, "rng_seed": 0})
    noise: dict = field(default_factory=lambda: {"enabled": False, "snr_db": 40.0})
    inputs: str | dict = "hh2"
    initial: dict = field(default_factory=dict)
    freeze_theta_at: float | None = None
    analysis: dict = field(default_factory=lambda: {"pe_window": 100.0, "beta": 0.01})
    output: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.observer not in _OBSERVER_MODES:
            raise ConfigError(f"observer must be one of {_OBSERVER_MODES}")
        _check_keys(self.gains, {"preset", "gamma0", "gamma", "alpha"}, "gains")
        _check_keys(self.integrator,
                    {"t_end", "dt", "record_stride", "rng_seed"}, "integrator")
        if "t_end" not in self.integrator:
            raise ConfigError("integrator.t_end is required")
        _check_keys(self.noise, {"enabled", "snr_db", "reference"}, "noise")
        if isinstance(self.inputs, dict):
            _check_keys(self.inputs, {"offset", "terms"}, "inputs")
        _check_keys(self.initial, {"v", "w", "vhat", "what", "theta0", "P0"},
                    "initial")
        _check_keys(self.analysis, {"pe_window", "beta", "delta"}, "analysis")
        _check_keys(self.output, {"trace_csv", "summary_json", "report_json"},
                    "output")

    # -- serialization -----------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _check_keys(d, {
            "model", "observer", "gains", "integrator", "noise", "inputs",
            "initial", "freeze_theta_at", "analysis", "output"}, "config")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(d)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    # -- builders ----------------------------------------------------------

    def build_model(self) -> NetworkModel:
        if isinstance(self.model, str):
            try:
                return model_preset(self.model)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return model_from_json(self.model)

    def build_gains(self, model: NetworkModel):
        g = self.gains
        try:
            if self.observer == "none":
                return None
            if self.observer == "full":
                return (float(g.get("gamma", FULL_GAIN_DEFAULT[0])),
                        float(g.get("alpha", FULL_GAIN_DEFAULT[1])))
            if "preset" in g:
                return gain_preset(g["preset"], model.m_types)
            return GainSchedule(float(g["gamma0"]),
                               tuple(float(x) for x in g["gamma"]),
                               tuple(float(x) for x in g["alpha"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad gains: {exc}") from exc

    def build_integrator(self) -> IntegratorConfig:
        d = self.integrator
        try:
            return IntegratorConfig(
                t_end=float(d["t_end"]), dt=float(d.get("dt", 1e-4)),
                record_stride=int(d.get("record_stride", 100)),
                rng_seed=int(d.get("rng_seed", 0)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_noise(self) -> NoiseConfig:
        d = self.noise
        ref = d.get("reference")
        try:
            return NoiseConfig(bool(d.get("enabled", False)),
                               float(d.get("snr_db", 40.0)),
                               tuple(ref) if ref is not None else None)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_inputs(self, model: NetworkModel) -> Multisine:
        if isinstance(self.inputs, str):
            try:
                return input_preset(self.inputs, model.n_v)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        d = self.inputs
        try:
            return Multisine(
                offset=tuple(float(x) for x in d["offset"]),
                terms=tuple(tuple((float(a), float(p)) for a, p in ch)
                            for ch in d.get("terms", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad inputs: {exc}") from exc

    def build_initial(self, model: NetworkModel):
        """(x0, observer_init, P0) with the hh2 paper defaults when applicable."""
        d = self.initial
        x0 = obs = None
        if self.model == "hh2":
            x0 = hh2_initial_state()
            obs = hh2_observer_init()
        if "v" in d or "w" in d:
            if not ("v" in d and "w" in d):
                raise ConfigError("initial.v and initial.w go together")
            x0 = SystemState(np.asarray(d["v"], dtype=float),
                             np.asarray(d["w"], dtype=float))
        obs = dict(obs or {})
        if "vhat" in d:
            obs["v0"] = np.asarray(d["vhat"], dtype=float)
        if "what" in d:
            obs["w0"] = np.asarray(d["what"], dtype=float)
        if "theta0" in d:
            obs["theta0"] = np.asarray(d["theta0"], dtype=float)
        P0 = d.get("P0")
        if isinstance(P0, list):
            P0 = np.asarray(P0, dtype=float)
        return x0, (obs or None), P0

    def analysis_options(self) -> dict:
        return {
            "pe_window": float(self.analysis.get("pe_window", 100.0)),
            "beta": float(self.analysis.get("beta", 0.01)),
            "delta": self.analysis.get("delta"),
        }
