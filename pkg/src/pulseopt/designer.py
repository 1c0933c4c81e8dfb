"""Analytic drive design for two level transfer inside a larger manifold.

A resonant pi pulse between a dipole coupled pair (alpha, beta) degrades when
either partner is weakly coupled to further levels: the drive dresses those
transitions, the pair frequency walks away from the bare resonance, and the
effective coupling shrinks.  Both effects are governed by the small parameter

    sigma = F0 mu_p / (2 (omega_ab - omega_p))

of each perturbing transition, through eps(t) = (sigma m(t) / (1 - Delta))^2
with m the envelope and Delta the slow detuning of the perturber transition.
To first order in eps the cure is analytic:

* carrier chirp: omega(t) = omega_ab + c (1/t) int_0^t m^2, where c collects
  a term per perturber attached to the beta level; the running average of
  m^2 tracks the drive induced level shift without any feedback loop;
* duration correction: the pi condition is restated for the effective
  coupling, int_0^T (F0 mu_ab / 2) m / sqrt(prod_p (1 + eps_p)) dt
  = n_half pi / 2, and solved for T by a fixed point iteration seeded with
  the bare pi duration.

The slow detuning entering eps is evaluated under the designed chirp by
default, which matters at large sigma; ``bare_detuning`` selects the
uncorrected Delta = 0 variant for comparison.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import pi, sqrt
from typing import Optional, Sequence

import numpy as np

from ._quad import adaptive_simpson
from .levels import (
    LevelSystem,
    PerturberSpec,
    TargetPair,
    transition,
    validate_pair,
    validate_perturber,
)
from .pulse import CONSTANT, SIN2, ChirpProfile, Envelope, PulseSpec

_QUAD_RTOL = 1e-10


class DesignError(RuntimeError):
    """Raised when the duration fixed point fails to converge.

    Carries the iterate history for post mortem inspection.
    """

    def __init__(self, message: str, iterates: Sequence[float] = ()):
        super().__init__(message)
        self.iterates = tuple(iterates)


@dataclass(frozen=True)
class PerturberAnalysis:
    """Derived quantities for one perturbing level.

    offset is omega_p - omega_ab, the repulsion scale that sigma and the slow
    detuning are measured against; chirp_term is this perturber's additive
    contribution to the carrier chirp coefficient (zero on the alpha side).
    """

    level: int
    attached_to: int
    beta_side: bool
    sigma: float
    sigma_sq: float
    offset: float
    chirp_term: float


@dataclass(frozen=True)
class DesignOptions:
    """Switches for the design variants.

    unoptimized    : bare pi pulse, fixed carrier, no corrections
    frequency_only : chirped carrier at the uncorrected pi duration
    manual_duration: override the duration, keep the chirp
    bare_detuning  : evaluate eps with Delta = 0 instead of the chirped value
    tol, max_iter  : fixed point controls for the duration solve
    """

    unoptimized: bool = False
    frequency_only: bool = False
    manual_duration: Optional[float] = None
    bare_detuning: bool = False
    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        if self.unoptimized and self.frequency_only:
            raise ValueError("unoptimized and frequency_only are mutually exclusive")
        if self.manual_duration is not None and not self.manual_duration > 0.0:
            raise ValueError("manual duration must be positive")
        if not self.tol > 0.0:
            raise ValueError("fixed point tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class DesignReport:
    """Everything the design decided, plus first order bookkeeping.

    second_order_advisory is max_t |eps d(eps)/d(tau)| = max 0.5 |d(eps^2)/d tau|,
    the size of the first neglected order; it is informational and never
    gates a design.  extrapolated flags multi perturber inputs, where the
    additive chirp and multiplicative eps combination rests on first order
    reasoning.
    """

    t_pi: float
    t_opt: float
    t_used: float
    chirp_coefficient: float
    fixed_carrier: bool
    sigma_sq_per_perturber: tuple
    fixed_point_iterations: int
    residual: float
    second_order_advisory: float
    extrapolated: bool


def sigma(system: LevelSystem, pair: TargetPair, pert: PerturberSpec,
          amplitude: float) -> float:
    """Perturbation parameter of one perturbing transition.

    sigma = F0 mu_p / (2 (omega_ab - omega_p)); the sign carries which side
    of the pair resonance the perturber transition sits on.
    """
    t_pair = transition(system, pair.beta, pair.alpha, pair)
    t_pert = transition(system, pert.attached_to, pert.level, pair)
    offset = t_pair.omega - t_pert.omega
    if offset == 0.0:
        raise ValueError(
            "perturber transition is degenerate with the target transition"
        )
    return amplitude * t_pert.moment / (2.0 * offset)


def delta(chirp_coefficient: float, mean_env_sq, offset: float):
    """Slow detuning Delta of a perturber transition under the chirp.

    mean_env_sq is the running average (1/t) int_0^t m^2; offset is
    omega_p - omega_ab.  With no chirp the result is identically zero.
    """
    return chirp_coefficient * np.asarray(mean_env_sq) / offset


def epsilon(sigma_value: float, envelope_m, delta_value):
    """Level repulsion parameter eps = (sigma m / (1 - Delta))^2."""
    m = np.asarray(envelope_m, dtype=float)
    return (sigma_value * m / (1.0 - np.asarray(delta_value))) ** 2


def perturber_analysis(system: LevelSystem, pair: TargetPair,
                       perturbers: Sequence[PerturberSpec],
                       amplitude: float) -> tuple:
    """Per perturber sigma, offset, and chirp contribution."""
    t_pair = transition(system, pair.beta, pair.alpha, pair)
    out = []
    for pert in perturbers:
        validate_perturber(system, pair, pert)
        s = sigma(system, pair, pert, amplitude)
        t_pert = transition(system, pert.attached_to, pert.level, pair)
        beta_side = pert.attached_to == pair.beta
        term = 0.0
        if beta_side:
            t_ba = transition(system, pair.beta, pair.alpha, pair)
            t_bp = transition(system, pert.attached_to, pert.level, pair)
            term = (
                t_ba.sign * t_bp.sign
                * (t_bp.omega - t_ba.omega)
                * (2.0 * t_bp.omega / (t_ba.omega + t_bp.omega))
                * s * s
            )
        out.append(PerturberAnalysis(
            level=pert.level,
            attached_to=pert.attached_to,
            beta_side=beta_side,
            sigma=s,
            sigma_sq=s * s,
            offset=t_pert.omega - t_pair.omega,
            chirp_term=term,
        ))
    return tuple(out)


def chirp_design(system: LevelSystem, pair: TargetPair,
                 perturbers: Sequence[PerturberSpec],
                 amplitude: float) -> float:
    """Carrier chirp coefficient, additive over beta attached perturbers.

    Perturbers on the alpha side shift both levels of their own transition
    but not the pair frequency to this order, so they contribute nothing
    here; with no beta attached perturber the carrier should stay fixed and
    a warning says so.
    """
    analyses = perturber_analysis(system, pair, perturbers, amplitude)
    if not any(a.beta_side for a in analyses):
        warnings.warn(
            "no perturber attached to the beta level: carrier left unchirped",
            stacklevel=2,
        )
        return 0.0
    return float(sum(a.chirp_term for a in analyses))


def pi_pulse_duration(amplitude: float, moment: float, n_half: int,
                      shape: str = SIN2) -> float:
    """Duration T with pulse area (F0 mu / 2) int_0^T m = n_half pi / 2."""
    if amplitude <= 0.0:
        raise ValueError("pi pulse duration requires a positive amplitude")
    if moment == 0.0:
        raise ValueError("pi pulse duration requires a coupled pair")
    if n_half < 1:
        raise ValueError("n_half must be a positive integer")
    rabi = amplitude * abs(moment)
    if shape == SIN2:
        return 2.0 * n_half * pi / rabi
    if shape == CONSTANT:
        return n_half * pi / rabi
    raise ValueError(f"unknown envelope shape {shape!r}")


def _unit_env(shape: str, u: float) -> float:
    if shape == CONSTANT:
        return 1.0
    s = np.sin(pi * u)
    return float(s * s)


def _unit_mean_sq(shape: str, u: float) -> float:
    # running average of m^2 in the fractional variable; duration invariant
    if shape == CONSTANT:
        return 1.0
    if u <= 0.0:
        return 0.0
    q = 3.0 * u / 8.0 - np.sin(2.0 * pi * u) / (4.0 * pi) + np.sin(4.0 * pi * u) / (32.0 * pi)
    return float(q / u)


def _eps_product(analyses, chirp_coefficient: float, bare: bool, shape: str, u: float) -> float:
    m = _unit_env(shape, u)
    mean = _unit_mean_sq(shape, u)
    prod = 1.0
    for a in analyses:
        d = 0.0 if bare else chirp_coefficient * mean / a.offset
        e = (a.sigma * m / (1.0 - d)) ** 2
        prod *= 1.0 + e
    return prod


def optimized_duration(system: LevelSystem, pair: TargetPair,
                       perturbers: Sequence[PerturberSpec], amplitude: float,
                       n_half: int, shape: str = SIN2, *,
                       bare_detuning: bool = False, tol: float = 1e-10,
                       max_iter: int = 50) -> tuple:
    """Solve the corrected pi condition for the duration.

    Returns (t_opt, iterations, residual) with residual the relative change
    of the accepted iterate.  The area integral is evaluated in the
    fractional time variable, where it is invariant under duration rescaling
    for the self similar envelope shapes supported here; the iteration still
    verifies convergence numerically and reports its history on failure.
    """
    t_pi = pi_pulse_duration(amplitude, system.moments[pair.alpha, pair.beta],
                             n_half, shape)
    analyses = perturber_analysis(system, pair, perturbers, amplitude)
    if not analyses or all(a.sigma == 0.0 for a in analyses):
        return t_pi, 0, 0.0
    coeff = float(sum(a.chirp_term for a in analyses))
    pref = amplitude * abs(system.moments[pair.alpha, pair.beta]) / 2.0
    target = n_half * pi / 2.0

    def integrand(u: float) -> float:
        return _unit_env(shape, u) / sqrt(
            _eps_product(analyses, coeff, bare_detuning, shape, u))

    t_cur = t_pi
    history = [t_cur]
    for k in range(1, max_iter + 1):
        area = pref * t_cur * adaptive_simpson(integrand, 0.0, 1.0, rtol=_QUAD_RTOL)
        t_new = t_cur * target / area
        history.append(t_new)
        if abs(t_new - t_cur) <= tol * t_new:
            return t_new, k, abs(t_new - t_cur) / t_new
        t_cur = t_new
    raise DesignError(
        f"duration fixed point did not converge in {max_iter} iterations",
        iterates=history,
    )


def _second_order_advisory(analyses, chirp_coefficient: float, bare: bool,
                           pref: float, shape: str, duration: float) -> float:
    """max 0.5 |d(eps^2)/d tau| along the pulse, eps the combined product - 1.

    d(eps)/d tau is analytic: the envelope factor from d tau = pref m dt
    cancels one power of m, so the expression stays finite at the pulse
    edges, which are excluded only to avoid the 0/0 in the running average.
    """
    if not analyses or shape == CONSTANT:
        return 0.0
    u = np.linspace(0.0, 1.0, 4001)[1:-1]
    t = u * duration
    om = pi / duration
    m = np.sin(om * t) ** 2
    dm_dt = om * np.sin(2.0 * om * t)
    q = 3.0 * t / 8.0 - np.sin(2.0 * om * t) / (4.0 * om) + np.sin(4.0 * om * t) / (32.0 * om)
    g = q / t
    dg_dt = (m * m - g) / t
    prod = np.ones_like(u)
    eps_terms = []
    deps_terms = []
    for a in analyses:
        d = np.zeros_like(u) if bare else chirp_coefficient * g / a.offset
        dd_dt = np.zeros_like(u) if bare else chirp_coefficient * dg_dt / a.offset
        one_minus = 1.0 - d
        e = (a.sigma * m / one_minus) ** 2
        de_dtau = (2.0 * a.sigma_sq / pref) * (
            dm_dt / one_minus**2 + m * dd_dt / one_minus**3)
        eps_terms.append(e)
        deps_terms.append(de_dtau)
        prod *= 1.0 + e
    eps_tot = prod - 1.0
    deps_tot = np.zeros_like(u)
    for e, de in zip(eps_terms, deps_terms):
        deps_tot += de * prod / (1.0 + e)
    return float(np.max(np.abs(eps_tot * deps_tot)))


def design_pulse(system: LevelSystem, pair: TargetPair,
                 perturbers: Sequence[PerturberSpec], amplitude: float,
                 n_half: int, shape: str = SIN2,
                 options: Optional[DesignOptions] = None) -> tuple:
    """Produce the drive for one transfer job.

    Returns (PulseSpec, DesignReport).  The carrier base is always the pair
    frequency omega_ab; the chirp is dropped for the unoptimized variant and
    when no beta attached perturber exists.  Zero amplitude is accepted only
    together with a manual duration (a switched off drive has no pi time).
    """
    if options is None:
        options = DesignOptions()
    validate_pair(system, pair)
    t_pair = transition(system, pair.beta, pair.alpha, pair)
    omega_ab = t_pair.omega
    mu_ab = system.moments[pair.alpha, pair.beta]

    if amplitude == 0.0:
        if options.manual_duration is None:
            raise ValueError("zero amplitude requires a manual duration")
        envelope = Envelope(shape, options.manual_duration)
        spec = PulseSpec(amplitude=0.0, envelope=envelope, carrier=float(omega_ab))
        report = DesignReport(
            t_pi=float("inf"), t_opt=float("inf"),
            t_used=options.manual_duration,
            chirp_coefficient=0.0, fixed_carrier=True,
            sigma_sq_per_perturber=tuple(
                (system.labels[p.level], 0.0) for p in perturbers),
            fixed_point_iterations=0, residual=0.0,
            second_order_advisory=0.0, extrapolated=len(perturbers) > 1,
        )
        return spec, report

    analyses = perturber_analysis(system, pair, perturbers, amplitude)
    t_pi = pi_pulse_duration(amplitude, mu_ab, n_half, shape)
    has_beta_side = any(a.beta_side for a in analyses)
    coeff = chirp_design(system, pair, perturbers, amplitude) if has_beta_side else 0.0
    if perturbers and not has_beta_side:
        warnings.warn(
            "no perturber attached to the beta level: carrier left unchirped",
            stacklevel=2,
        )
    t_opt, iterations, residual = optimized_duration(
        system, pair, perturbers, amplitude, n_half, shape,
        bare_detuning=options.bare_detuning,
        tol=options.tol, max_iter=options.max_iter,
    )
    if options.manual_duration is not None:
        t_used = options.manual_duration
    elif options.unoptimized or options.frequency_only:
        t_used = t_pi
    else:
        t_used = t_opt

    envelope = Envelope(shape, t_used)
    fixed = options.unoptimized or not has_beta_side
    if fixed:
        carrier = float(omega_ab)
    else:
        carrier = ChirpProfile(base=omega_ab, coefficient=coeff, envelope_ref=envelope)
    spec = PulseSpec(amplitude=amplitude, envelope=envelope, carrier=carrier)
    advisory = _second_order_advisory(
        analyses, coeff, options.bare_detuning,
        amplitude * abs(mu_ab) / 2.0, shape, t_opt)
    report = DesignReport(
        t_pi=float(t_pi),
        t_opt=float(t_opt),
        t_used=float(t_used),
        chirp_coefficient=0.0 if fixed else float(coeff),
        fixed_carrier=fixed,
        sigma_sq_per_perturber=tuple(
            (system.labels[a.level], float(a.sigma_sq)) for a in analyses),
        fixed_point_iterations=iterations,
        residual=float(residual),
        second_order_advisory=float(advisory),
        extrapolated=len(perturbers) > 1,
    )
    return spec, report
