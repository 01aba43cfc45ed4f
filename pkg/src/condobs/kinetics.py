"""Scalar nonlinearities and gating-variable kinetics for conductance models.

All voltages are in mV, times in ms, rates in 1/ms. Every function here is a
pure function of its arguments and accepts scalars or numpy arrays for the
voltage argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Arguments of exp() are clamped to +/- this bound so that saturating inputs
# produce 0/1 limits instead of inf/nan.
EXP_CLAMP = 500.0


class KineticsError(ValueError):
    """Raised for malformed kinetics (e.g. nonpositive time constant)."""


def _exp(x):
    return np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP))


@dataclass(frozen=True)
class SigmoidParams:
    """Half-activation voltage and slope of a Boltzmann sigmoid.

    The sign of ``kappa`` selects activation (positive) vs inactivation
    (negative).
    """

    rho: float
    kappa: float

    def __post_init__(self):
        if self.kappa == 0:
            raise KineticsError("sigmoid slope kappa must be nonzero")


@dataclass(frozen=True)
class BellTauParams:
    """Bell-shaped voltage-dependent time constant: floor, peak, center, width."""

    tau_min: float
    tau_max: float
    zeta: float
    chi: float

    def __post_init__(self):
        if not 0 < self.tau_min <= self.tau_max:
            raise KineticsError("need 0 < tau_min <= tau_max")
        if self.chi <= 0:
            raise KineticsError("width chi must be positive")


def sigmoid(v, p: SigmoidParams):
    """Boltzmann sigmoid (1 + exp(-(v - rho)/kappa))^-1, strictly in (0,1)."""
    return 1.0 / (1.0 + _exp(-(v - p.rho) / p.kappa))


def bell_tau(v, p: BellTauParams):
    """Bell-shaped time constant; output always in [tau_min, tau_max]."""
    z = (v - p.zeta) / p.chi
    return p.tau_min + (p.tau_max - p.tau_min) * _exp(-z * z)


# Rate-function forms for canonical (alpha/beta) kinetics. The three shapes
# cover the classic squid-axon rate constants; the linoid form has a removable
# singularity at v = v0 handled by a series branch.
_LINOID_EPS = 1e-7


@dataclass(frozen=True)
class RateFn:
    """Analytic voltage-dependent rate constant alpha(v) or beta(v).

    form "linoid":       a * (v - v0) / (1 - exp(-(v - v0)/k))
    form "exponential":  a * exp(-(v - v0)/k)
    form "sigmoid":      a / (1 + exp(-(v - v0)/k))
    """

    form: str
    a: float
    v0: float
    k: float

    def __post_init__(self):
        if self.form not in ("linoid", "exponential", "sigmoid"):
            raise KineticsError(f"unknown rate form {self.form!r}")
        if self.k == 0:
            raise KineticsError("rate slope k must be nonzero")

    def __call__(self, v):
        y = (v - self.v0) / self.k
        if self.form == "linoid":
            # a*(v-v0)/(1-exp(-y)) == a*k*y/(1-exp(-y)) -> a*k at y=0
            safe = np.where(np.abs(y) < _LINOID_EPS, 1.0, y)
            out = np.where(
                np.abs(y) < _LINOID_EPS,
                self.a * self.k * (1.0 + 0.5 * y),
                self.a * self.k * safe / (1.0 - _exp(-safe)),
            )
            return out if np.ndim(v) else float(out)
        if self.form == "exponential":
            return self.a * _exp(-y)
        return self.a / (1.0 + _exp(-y))


@dataclass(frozen=True)
class GateKinetics:
    """Kinetics of one intrinsic gating variable plus its exponent in the current law.

    Exactly one variant is populated: the tau/sigma parametric form
    (``sigma`` + ``tau``) or the canonical rate-function pair
    (``alpha`` + ``beta``). The two forms agree under tau = 1/(alpha+beta),
    sigma = alpha/(alpha+beta).
    """

    exponent: int
    sigma: SigmoidParams | None = None
    tau: BellTauParams | None = None
    alpha: RateFn | None = None
    beta: RateFn | None = None

    def __post_init__(self):
        if self.exponent < 0:
            raise KineticsError("gate exponent must be >= 0")
        parametric = self.sigma is not None and self.tau is not None
        canonical = self.alpha is not None and self.beta is not None
        if parametric == canonical:
            raise KineticsError(
                "specify exactly one of (sigma, tau) or (alpha, beta)"
            )

    @classmethod
    def parametric(cls, sigma: SigmoidParams, tau: BellTauParams, exponent: int):
        return cls(exponent=exponent, sigma=sigma, tau=tau)

    @classmethod
    def canonical(cls, alpha: RateFn, beta: RateFn, exponent: int):
        return cls(exponent=exponent, alpha=alpha, beta=beta)

    @property
    def is_parametric(self) -> bool:
        return self.sigma is not None

    def steady_state(self, v):
        """Equilibrium gate value sigma(v) (or alpha/(alpha+beta))."""
        if self.is_parametric:
            return sigmoid(v, self.sigma)
        a, b = self.alpha(v), self.beta(v)
        return a / (a + b)

    def time_constant(self, v):
        """Relaxation time constant tau(v) (or 1/(alpha+beta))."""
        if self.is_parametric:
            return bell_tau(v, self.tau)
        return 1.0 / (self.alpha(v) + self.beta(v))


def gate_derivative(x, v, k: GateKinetics):
    """Rate of change of an intrinsic gating variable at value ``x``, voltage ``v``.

    Parametric form: (sigma(v) - x)/tau(v). Canonical form:
    alpha(v)(1 - x) - beta(v) x. Raises KineticsError when the effective time
    constant is nonpositive.
    """
    if k.is_parametric:
        tau = bell_tau(v, k.tau)
        if np.any(tau <= 0):
            raise KineticsError("nonpositive time constant")
        return (sigmoid(v, k.sigma) - x) / tau
    a, b = k.alpha(v), k.beta(v)
    if np.any(a + b <= 0):
        raise KineticsError("alpha(v) + beta(v) must be positive")
    return a * (1.0 - x) - b * x


@dataclass(frozen=True)
class SynapseKinetics:
    """First-order transmitter binding kinetics driven by the presynaptic voltage."""

    a_syn: float
    b_syn: float
    presyn_sigmoid: SigmoidParams

    def __post_init__(self):
        if self.a_syn <= 0 or self.b_syn <= 0:
            raise KineticsError("binding rates a_syn, b_syn must be positive")


def synapse_derivative(s, v_pre, k: SynapseKinetics):
    """a_syn * sigma(v_pre) * (1 - s) - b_syn * s."""
    return k.a_syn * sigmoid(v_pre, k.presyn_sigmoid) * (1.0 - s) - k.b_syn * s


# Canonical squid-axon rate constants (modern -65 mV resting convention),
# used by the default sodium/potassium presets.
HH_ALPHA_M = RateFn("linoid", 0.1, -40.0, 10.0)
HH_BETA_M = RateFn("exponential", 4.0, -65.0, 18.0)
HH_ALPHA_H = RateFn("exponential", 0.07, -65.0, 20.0)
HH_BETA_H = RateFn("sigmoid", 1.0, -35.0, 10.0)
HH_ALPHA_N = RateFn("linoid", 0.01, -55.0, 10.0)
HH_BETA_N = RateFn("exponential", 0.125, -65.0, 80.0)

HH_NA_M = GateKinetics.canonical(HH_ALPHA_M, HH_BETA_M, exponent=3)
HH_NA_H = GateKinetics.canonical(HH_ALPHA_H, HH_BETA_H, exponent=1)
HH_K_N = GateKinetics.canonical(HH_ALPHA_N, HH_BETA_N, exponent=4)
