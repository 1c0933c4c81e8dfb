"""Pulse model: envelope shapes, chirped carrier, scaled time variables.

The field is F(t) = F0 m(t) cos(omega(t) t) with the instantaneous frequency
entering through the product phase omega(t) * t.  The chirp law keeps the
carrier at base frequency plus a coefficient times the running average of
m(t)^2, so a closed form of the envelope integrals is enough to evaluate it
anywhere without quadrature.

Scaled time tau is the pulse area clock: tau(t) = (F0 mu_ab / 2) int_0^t m.
A resonant two level system driven in rotating wave terms performs sin^2(tau)
population oscillation, which pins the calibration used across the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

SIN2 = "sin2"
CONSTANT = "constant"

_SHAPES = (SIN2, CONSTANT)


@dataclass(frozen=True)
class Envelope:
    """Normalized envelope m(t) on [0, duration], max value 1."""

    shape: str
    duration: float

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown envelope shape {self.shape!r}, expected one of {_SHAPES}")
        if not self.duration > 0.0:
            raise ValueError("envelope duration must be positive")


@dataclass(frozen=True)
class ChirpProfile:
    """Carrier law omega(t) = base + coefficient * (1/t) int_0^t m^2."""

    base: float
    coefficient: float
    envelope_ref: Envelope

    def __post_init__(self):
        if not self.base > 0.0:
            raise ValueError("carrier base frequency must be positive")


@dataclass(frozen=True)
class PulseSpec:
    """Full drive description: amplitude, envelope, carrier.

    A bare float carrier means a fixed frequency.  Zero amplitude is allowed
    (a switched off drive is a valid, if dull, simulation input); design
    routines that must divide by the Rabi rate reject it at their own door.
    """

    amplitude: float
    envelope: Envelope
    carrier: Union[ChirpProfile, float]

    def __post_init__(self):
        if not self.amplitude >= 0.0:
            raise ValueError("field amplitude must be nonnegative")
        if isinstance(self.carrier, ChirpProfile):
            if self.carrier.envelope_ref != self.envelope:
                raise ValueError("chirp profile references a different envelope")
        elif not float(self.carrier) > 0.0:
            raise ValueError("fixed carrier frequency must be positive")


@dataclass(frozen=True)
class ScaledClock:
    """Samples of the area clock: tau, lab time t, and x = (F0 mu_ab / 2) t."""

    tau: np.ndarray
    t: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class ScaledDetunings:
    """Slow and fast scaled detunings of one transition.

    f = s (2 / F0 mu_ab)(omega(t) - omega_ij) drives the resonant term,
    g = s (2 / F0 mu_ab)(omega(t) + omega_ij) the counter rotating one;
    g - f is constant in time for a fixed transition.
    """

    f_ij: np.ndarray
    g_ij: np.ndarray


def _check_domain(env: Envelope, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > env.duration):
        raise ValueError(f"time outside the pulse window [0, {env.duration}]")
    return t


def envelope_value(env: Envelope, t):
    """m(t); raises outside [0, duration]."""
    t = _check_domain(env, t)
    if env.shape == CONSTANT:
        return np.ones_like(t) if t.ndim else 1.0
    s = np.sin(np.pi * t / env.duration)
    out = s * s
    return out if t.ndim else float(out)


def envelope_integral(env: Envelope, t):
    """int_0^t m(u) du in closed form."""
    t = _check_domain(env, t)
    if env.shape == CONSTANT:
        out = t
    else:
        w = np.pi / env.duration
        # cancellation near t = 0 can leave a tiny negative residue
        out = np.maximum(t / 2.0 - np.sin(2.0 * w * t) / (4.0 * w), 0.0)
    return out if t.ndim else float(out)


def envelope_sq_integral(env: Envelope, t):
    """int_0^t m(u)^2 du in closed form."""
    t = _check_domain(env, t)
    if env.shape == CONSTANT:
        out = t
    else:
        w = np.pi / env.duration
        out = np.maximum(
            3.0 * t / 8.0 - np.sin(2.0 * w * t) / (4.0 * w)
            + np.sin(4.0 * w * t) / (32.0 * w), 0.0)
    return out if t.ndim else float(out)


def carrier_frequency(spec: PulseSpec, t):
    """Instantaneous carrier omega(t).

    For a chirped carrier this is base + coefficient * avg(m^2) with the
    average taken over [0, t].  The t -> 0 limit is base for the sin^2
    envelope (m(0) = 0) and base + coefficient for the flat envelope.
    """
    t = _check_domain(spec.envelope, t)
    if not isinstance(spec.carrier, ChirpProfile):
        out = np.full_like(t, float(spec.carrier))
        return out if t.ndim else float(spec.carrier)
    chirp = spec.carrier
    t_arr = np.atleast_1d(t)
    out = np.empty_like(t_arr)
    pos = t_arr > 0.0
    if np.any(pos):
        avg = envelope_sq_integral(spec.envelope, t_arr[pos]) / t_arr[pos]
        out[pos] = chirp.base + chirp.coefficient * avg
    lim = 1.0 if spec.envelope.shape == CONSTANT else 0.0
    out[~pos] = chirp.base + chirp.coefficient * lim
    return out if t.ndim else float(out[0])


def field_value(spec: PulseSpec, t):
    """F(t) = F0 m(t) cos(omega(t) t), product phase convention."""
    t = _check_domain(spec.envelope, t)
    m = envelope_value(spec.envelope, t)
    w = carrier_frequency(spec, t)
    out = spec.amplitude * np.asarray(m) * np.cos(np.asarray(w) * t)
    return out if t.ndim else float(out)


def tau_of_t(spec: PulseSpec, moment: float, t):
    """Area clock tau(t) = (F0 mu_ab / 2) int_0^t m."""
    pref = spec.amplitude * moment / 2.0
    return pref * envelope_integral(spec.envelope, t)


def t_of_tau(spec: PulseSpec, moment: float, tau: float) -> float:
    """Invert the area clock by bisection to 1e-12 relative width.

    tau is monotone in t on (0, T) since m > 0 there; values beyond tau(T)
    are outside the pulse and rejected.
    """
    T = spec.envelope.duration
    tau_tot = tau_of_t(spec, moment, T)
    if tau < 0.0 or tau > tau_tot * (1.0 + 1e-12):
        raise ValueError(f"tau = {tau} outside [0, {tau_tot}]")
    if tau_tot == 0.0:
        return 0.0
    lo, hi = 0.0, T
    while hi - lo > 1e-12 * T:
        mid = 0.5 * (lo + hi)
        if tau_of_t(spec, moment, mid) < tau:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scaled_clock(spec: PulseSpec, moment: float, t) -> ScaledClock:
    """Bundle tau(t), t, and x(t) = (F0 mu_ab / 2) t on a sample grid."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pref = spec.amplitude * moment / 2.0
    tau = pref * envelope_integral(spec.envelope, t)
    return ScaledClock(tau=np.asarray(tau), t=t, x=pref * t)


def scaled_detunings(spec: PulseSpec, moment: float, omega_ij: float,
                     sign_ij: int, t) -> ScaledDetunings:
    """Scaled detunings of transition (omega_ij, s_ij) along the pulse."""
    if spec.amplitude <= 0.0 or moment == 0.0:
        raise ValueError("scaled detunings need a nonzero Rabi rate")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w = np.atleast_1d(np.asarray(carrier_frequency(spec, t)))
    scale = sign_ij * 2.0 / (spec.amplitude * moment)
    return ScaledDetunings(f_ij=scale * (w - omega_ij), g_ij=scale * (w + omega_ij))
