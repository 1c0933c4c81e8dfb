"""Direct integration of the driven N level system, plus the reduced model.

The interaction picture equation i dc/dt = V(t) c is integrated with both
exponentials of every coupling element kept, so no rotating wave step is ever
taken; accuracy is controlled only by the local error tolerance and a hard
step cap at a fraction of the fastest phase period.  The compiled kernel in
``_kernels`` does the heavy lifting.

The reduced model is the two level picture that remains after the perturbing
levels are folded into the pair dynamics: amplitudes evolve in the pulse area
variable tau with a shrunken coupling 1/(1 + eps) and a damping like term
from d(eps)/d tau.  It is not unitary (population parked in the perturbers is
simply absent), which is the point: comparing it against the full propagation
bounds what the folded description misses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from ._rk import OK, STEP_LIMIT, STEP_UNDERFLOW, integrate_dopri5
from .designer import perturber_analysis
from .levels import LevelSystem, PerturberSpec, TargetPair
from .pulse import (
    SIN2,
    ChirpProfile,
    PulseSpec,
    carrier_frequency,
    envelope_value,
    t_of_tau,
    tau_of_t,
)

NORM_ALARM_THRESHOLD = 1e-6


class IntegrationError(RuntimeError):
    """Numerical failure inside the propagator (step underflow or budget)."""


@dataclass(frozen=True)
class StateVector:
    """Complex amplitude vector over the system levels."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).copy()
        if amps.ndim != 1:
            raise ValueError("state amplitudes must be a one dimensional vector")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        amps = np.zeros(n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of one propagation run.

    norm_alarm is raised (never an exception) when the norm drifts by more
    than 1e-6, which for a unitary problem means the tolerances were too
    loose; the reduced model sets it False unconditionally since its norm is
    not conserved by construction.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    populations: np.ndarray
    norm_drift: float
    norm_alarm: bool
    carrier_samples: np.ndarray
    envelope_samples: np.ndarray
    labels: tuple

    def __post_init__(self):
        for name in ("times", "amplitudes", "populations",
                     "carrier_samples", "envelope_samples"):
            arr = getattr(self, name)
            arr.flags.writeable = False


@dataclass(frozen=True)
class ReducedModelCoeffs:
    """Reduced model ingredients sampled on a tau grid.

    zeta = 1/(1 + eps_beta_p) is the coupling reduction, xi = -d/d tau of
    ln sqrt(1 + eps_beta_p) the induced damping like rate, and
    kappa = sqrt((1 + eps_alpha_q)(1 + eps_beta_p)) >= 1 the combined area
    stretch that the duration correction compensates.
    """

    tau: np.ndarray
    zeta_of_tau: np.ndarray
    xi_of_tau: np.ndarray
    kappa_of_tau: np.ndarray
    eps_alpha_q: np.ndarray
    eps_beta_p: np.ndarray


def _carrier_params(spec: PulseSpec) -> tuple:
    if isinstance(spec.carrier, ChirpProfile):
        return spec.carrier.base, spec.carrier.coefficient
    return float(spec.carrier), 0.0


def interaction_matrix(system: LevelSystem, spec: PulseSpec, t: float) -> np.ndarray:
    """Interaction picture coupling matrix V(t), exactly hermitian.

    V_ij = (F0 mu_ij / 2) m(t) (exp(i s_ij (w - w_ij) t) + exp(-i s_ij (w + w_ij) t))
    on the upper triangle, mirrored by complex conjugation.
    """
    m = envelope_value(spec.envelope, t)
    w = carrier_frequency(spec, t)
    n = system.n
    v = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(i + 1, n):
            mu = system.moments[i, j]
            if mu == 0.0:
                continue
            de = system.energies[i] - system.energies[j]
            s = 1.0 if de > 0 else -1.0
            wij = abs(de)
            pref = spec.amplitude * mu / 2.0
            vij = pref * m * (np.exp(1j * s * (w - wij) * t)
                              + np.exp(-1j * s * (w + wij) * t))
            v[i, j] = vij
            v[j, i] = np.conj(vij)
    return v


def integrate(system: LevelSystem, spec: PulseSpec, initial_state: StateVector,
              *, sampling: int = 2000, rtol: float = 1e-10,
              atol: Optional[float] = None, reverse: bool = False) -> Trajectory:
    """Propagate the full system across the pulse and sample the solution.

    sampling is the number of equally spaced sample times on [0, duration];
    samples come from dense output and do not constrain the internal steps.
    atol defaults to rtol / 100.  With ``reverse`` the time mirrored problem
    is integrated (the field evaluated at duration - t with the conjugate
    generator), so feeding a forward endpoint back in recovers the initial
    state; the field samples stored on the trajectory are the forward ones.

    Raises IntegrationError on step underflow or an exhausted step budget.
    A norm drift above 1e-6 only raises the norm_alarm flag.
    """
    amps0 = np.asarray(initial_state.amplitudes, dtype=np.complex128)
    if amps0.shape != (system.n,):
        raise ValueError(
            f"initial state has {amps0.size} amplitudes for {system.n} levels")
    if not isinstance(sampling, (int, np.integer)) or sampling < 2:
        raise ValueError("sampling must be an integer >= 2")
    if atol is None:
        atol = rtol / 100.0
    base, coeff = _carrier_params(spec)
    duration = spec.envelope.duration
    env_kind = _kernels.ENV_SIN2 if spec.envelope.shape == SIN2 else _kernels.ENV_CONST
    pref = spec.amplitude * system.moments / 2.0
    de = system.energies[:, None] - system.energies[None, :]
    omega = np.abs(de)
    sign = np.sign(de)
    # cap the step at 1/40 of the fastest phase period in the exponents
    w_fast = base + abs(coeff) + (omega.max() if system.n > 1 else 0.0)
    h_max = 2.0 * np.pi / w_fast / 40.0
    t_grid = np.linspace(0.0, duration, int(sampling))
    out, status, _, _ = _kernels.propagate(
        pref, omega, sign, env_kind, duration, base, coeff,
        amps0, t_grid, rtol, atol, h_max, reverse)
    if status == STEP_UNDERFLOW:
        raise IntegrationError("step size underflow: the problem is harder than the tolerances allow")
    if status == STEP_LIMIT:
        raise IntegrationError("internal step budget exhausted")
    populations = np.abs(out) ** 2
    norm0 = populations[0].sum()
    norm_drift = float(np.max(np.abs(populations.sum(axis=1) - norm0)))
    return Trajectory(
        times=t_grid,
        amplitudes=out,
        populations=populations,
        norm_drift=norm_drift,
        norm_alarm=norm_drift > NORM_ALARM_THRESHOLD,
        carrier_samples=np.asarray(carrier_frequency(spec, t_grid)),
        envelope_samples=np.asarray(envelope_value(spec.envelope, t_grid)),
        labels=system.labels,
    )


def _side_eps_factory(system: LevelSystem, pair: TargetPair,
                      perturbers: Sequence[PerturberSpec], spec: PulseSpec,
                      attached_level: int) -> Callable:
    """Closure tau -> (eps, d eps / d tau) for one target level's perturbers.

    The slow detuning entering eps follows the actual carrier of the pulse:
    a fixed carrier means Delta = 0.  d(eps)/d tau is analytic; the envelope
    factor from d tau = pref m dt cancels one power of m, so the expression
    is finite at the pulse edges.
    """
    side = [p for p in perturbers if p.attached_to == attached_level]
    if not side:
        return lambda tau: (0.0, 0.0)
    analyses = perturber_analysis(system, pair, side, spec.amplitude)
    _, coeff = _carrier_params(spec)
    duration = spec.envelope.duration
    mu_ab = system.moments[pair.alpha, pair.beta]
    pref = spec.amplitude * abs(mu_ab) / 2.0
    om = np.pi / duration
    const_env = spec.envelope.shape != SIN2

    def at_tau(tau: float) -> tuple:
        t = t_of_tau(spec, mu_ab, tau)
        if const_env:
            m, dm_dt, g, dg_dt = 1.0, 0.0, 1.0, 0.0
        else:
            m = float(np.sin(om * t) ** 2)
            dm_dt = float(om * np.sin(2.0 * om * t))
            if t <= 0.0:
                g, dg_dt = 0.0, 0.0
            else:
                q = (3.0 * t / 8.0 - np.sin(2.0 * om * t) / (4.0 * om)
                     + np.sin(4.0 * om * t) / (32.0 * om))
                g = float(q / t)
                dg_dt = (m * m - g) / t
        prod = 1.0
        dsum = 0.0
        for a in analyses:
            d = coeff * g / a.offset
            dd_dt = coeff * dg_dt / a.offset
            one_minus = 1.0 - d
            e = (a.sigma * m / one_minus) ** 2
            de_dtau = (2.0 * a.sigma_sq / pref) * (
                dm_dt / one_minus**2 + m * dd_dt / one_minus**3)
            dsum += de_dtau / (1.0 + e)
            prod *= 1.0 + e
        # combined eps over the side: prod - 1; chain rule keeps it additive
        return prod - 1.0, dsum * prod

    return at_tau


def reduced_coefficients(system: LevelSystem, pair: TargetPair,
                         perturbers: Sequence[PerturberSpec], spec: PulseSpec,
                         tau_grid) -> ReducedModelCoeffs:
    """Sample zeta, xi, kappa and the side eps values on a tau grid."""
    tau_grid = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    alpha_side = _side_eps_factory(system, pair, perturbers, spec, pair.alpha)
    beta_side = _side_eps_factory(system, pair, perturbers, spec, pair.beta)
    e_a = np.empty_like(tau_grid)
    e_b = np.empty_like(tau_grid)
    xi = np.empty_like(tau_grid)
    for k, tau in enumerate(tau_grid):
        ea, _ = alpha_side(tau)
        eb, deb = beta_side(tau)
        e_a[k] = ea
        e_b[k] = eb
        xi[k] = -deb / (2.0 * (1.0 + eb))
    return ReducedModelCoeffs(
        tau=tau_grid,
        zeta_of_tau=1.0 / (1.0 + e_b),
        xi_of_tau=xi,
        kappa_of_tau=np.sqrt((1.0 + e_a) * (1.0 + e_b)),
        eps_alpha_q=e_a,
        eps_beta_p=e_b,
    )


def integrate_reduced(system: LevelSystem, pair: TargetPair,
                      perturbers: Sequence[PerturberSpec], spec: PulseSpec,
                      *, sampling: int = 2001, rtol: float = 1e-10,
                      atol: Optional[float] = None) -> Trajectory:
    """Integrate the folded two level model across the pulse.

    The state starts in the alpha level.  Evolution runs in tau with the
    same Dormand-Prince scheme as the full propagation; the generator is not
    hermitian (the perturber population is folded away, not tracked), so no
    norm alarm is ever raised and norm_drift records the total leakage plus
    integration error instead.
    """
    if spec.amplitude <= 0.0:
        raise ValueError("the reduced model needs a driven pair")
    if atol is None:
        atol = rtol / 100.0
    mu_ab = system.moments[pair.alpha, pair.beta]
    duration = spec.envelope.duration
    tau_tot = tau_of_t(spec, mu_ab, duration)
    tau_grid = np.linspace(0.0, tau_tot, int(sampling))
    alpha_side = _side_eps_factory(system, pair, perturbers, spec, pair.alpha)
    beta_side = _side_eps_factory(system, pair, perturbers, spec, pair.beta)

    def rhs(tau: float, y: np.ndarray) -> np.ndarray:
        e_a, de_a = alpha_side(tau)
        e_b, de_b = beta_side(tau)
        l_a = de_a / (2.0 * (1.0 + e_a))
        l_b = de_b / (2.0 * (1.0 + e_b))
        return np.array([
            -l_a * y[0] - 1j * y[1] / (1.0 + e_a),
            -1j * y[0] / (1.0 + e_b) - l_b * y[1],
        ])

    y0 = np.array([1.0 + 0.0j, 0.0 + 0.0j])
    out, status = integrate_dopri5(rhs, y0, tau_grid, rtol, atol, tau_tot / 16.0)
    if status != OK:
        raise IntegrationError("reduced model integration failed")
    times = np.array([t_of_tau(spec, mu_ab, tau) for tau in tau_grid])
    populations = np.abs(out) ** 2
    norm_drift = float(np.max(np.abs(populations.sum(axis=1) - 1.0)))
    return Trajectory(
        times=times,
        amplitudes=out,
        populations=populations,
        norm_drift=norm_drift,
        norm_alarm=False,
        carrier_samples=np.asarray(carrier_frequency(spec, times)),
        envelope_samples=np.asarray(envelope_value(spec.envelope, times)),
        labels=(system.labels[pair.alpha], system.labels[pair.beta]),
    )


def predicted_perturber_population(trajectory: Trajectory, epsilon_of_t: Callable,
                                   beta_label: str) -> np.ndarray:
    """First order leak estimate eps(t) * Pi_beta(t) along a trajectory.

    epsilon_of_t maps an array of times to the combined eps; beta_label
    names the destination level whose population feeds the perturbers.
    """
    beta_idx = trajectory.labels.index(beta_label)
    eps = np.asarray(epsilon_of_t(trajectory.times), dtype=float)
    return eps * trajectory.populations[:, beta_idx]
