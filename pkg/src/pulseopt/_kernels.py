"""Compiled propagation core for the interaction picture Schrodinger equation.

The full oscillatory problem is stiff in the bookkeeping sense only: the right
hand side is cheap but must be evaluated at a fraction of the fastest phase
period, so step counts reach millions.  This module carries a numba port of
the Dormand-Prince driver from ``_rk`` with the interaction matrix inlined.
Both share the tableau and controller constants imported below; numba freezes
these globals at first compile, so they are deliberately module level
constants and never rebound (see the note in ``_rk``).

Rotating wave style approximations are never applied: both exponentials of
each coupling element are kept, so the counter rotating term is present in
every run.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._rk import (
    ACCEPT_EXP,
    ACCEPT_EXP_PREV,
    FAC_MAX,
    FAC_MIN,
    OK,
    REJECT_EXP,
    RK_A,
    RK_B,
    RK_C,
    RK_E,
    RK_P,
    SAFETY,
    STEP_LIMIT,
    STEP_UNDERFLOW,
    _MAX_STEPS,
)

ENV_SIN2 = 0
ENV_CONST = 1


@njit(cache=True, nogil=True)
def env_value(kind: int, t: float, duration: float) -> float:
    """Envelope m(t) on [0, duration]; sin^2 ramp or flat top."""
    if kind == ENV_CONST:
        return 1.0
    s = np.sin(np.pi * t / duration)
    return s * s


@njit(cache=True, nogil=True)
def env_sq_integral(kind: int, t: float, duration: float) -> float:
    """Closed form of integral of m(u)^2 du over [0, t]."""
    if kind == ENV_CONST:
        return t
    w = np.pi / duration
    return 3.0 * t / 8.0 - np.sin(2.0 * w * t) / (4.0 * w) + np.sin(4.0 * w * t) / (32.0 * w)


@njit(cache=True, nogil=True)
def env_integral(kind: int, t: float, duration: float) -> float:
    """Closed form of integral of m(u) du over [0, t]."""
    if kind == ENV_CONST:
        return t
    w = np.pi / duration
    return t / 2.0 - np.sin(2.0 * w * t) / (4.0 * w)


@njit(cache=True, nogil=True)
def carrier_freq(kind: int, t: float, duration: float, base: float, coeff: float) -> float:
    """Instantaneous carrier omega(t) = base + coeff * (1/t) int_0^t m^2.

    The t -> 0 limit is base: the running average of m^2 starts at m(0)^2,
    which is 0 for the sin^2 envelope, and the coefficient is finite.
    """
    if t <= 0.0:
        if kind == ENV_CONST:
            return base + coeff
        return base
    return base + coeff * env_sq_integral(kind, t, duration) / t


@njit(cache=True, nogil=True)
def _deriv(dy, y, t, pref, omega, sign, env_kind, duration, base, coeff, reverse):
    """dy = -i V(t) y, or +i V(T - t) y when running the clock backwards.

    V is assembled from its upper triangle and the exact conjugate mirror, so
    hermiticity holds to the last bit by construction.
    """
    n = y.shape[0]
    tt = duration - t if reverse else t
    m = env_value(env_kind, tt, duration)
    for i in range(n):
        dy[i] = 0.0 + 0.0j
    if m == 0.0:
        return
    w = carrier_freq(env_kind, tt, duration, base, coeff)
    for i in range(n):
        for j in range(i + 1, n):
            p = pref[i, j]
            if p == 0.0:
                continue
            s = sign[i, j]
            ph_near = s * (w - omega[i, j]) * tt
            ph_far = -s * (w + omega[i, j]) * tt
            v = p * m * (np.exp(1j * ph_near) + np.exp(1j * ph_far))
            dy[i] += v * y[j]
            dy[j] += np.conj(v) * y[i]
    fac = 1j if reverse else -1j
    for i in range(n):
        dy[i] *= fac


@njit(cache=True, nogil=True)
def propagate(pref, omega, sign, env_kind, duration, base, coeff,
              y0, t_grid, rtol, atol, h_max, reverse):
    """Adaptive Dormand-Prince propagation sampled on t_grid by dense output.

    Parameters mirror ``_rk.integrate_dopri5`` with the right hand side
    replaced by the inlined interaction matrix: pref[i, j] holds the Rabi
    prefactor F0 mu_ij / 2, omega and sign the pair frequencies and their
    orientation, and (base, coeff) the carrier law.  ``reverse`` integrates
    the time mirrored system, used by the reversibility checks.

    Returns (out, status, nsteps, nrejected).
    """
    n = y0.shape[0]
    npts = t_grid.shape[0]
    out = np.empty((npts, n), np.complex128)
    y = y0.copy()
    out[0] = y
    t = t_grid[0]
    t_end = t_grid[npts - 1]
    if t_end == t:
        for q in range(npts):
            out[q] = y
        return out, OK, 0, 0

    k = np.empty((7, n), np.complex128)
    ytmp = np.empty(n, np.complex128)
    ynew = np.empty(n, np.complex128)
    _deriv(k[0], y, t, pref, omega, sign, env_kind, duration, base, coeff, reverse)
    h = min(h_max, (t_end - t) * 1e-4 + 1e-12)
    err_prev = 1.0
    idx = 1
    nsteps = 0
    nrej = 0
    while t < t_end:
        nsteps += 1
        if nsteps > _MAX_STEPS:
            return out, STEP_LIMIT, nsteps, nrej
        if t + h > t_end:
            h = t_end - t
        for s in range(1, 7):
            for i in range(n):
                acc = 0.0 + 0.0j
                for q in range(s):
                    a = RK_A[s, q]
                    if a != 0.0:
                        acc += a * k[q, i]
                ytmp[i] = y[i] + h * acc
            _deriv(k[s], ytmp, t + RK_C[s] * h,
                   pref, omega, sign, env_kind, duration, base, coeff, reverse)
        errsum = 0.0
        for i in range(n):
            bacc = 0.0 + 0.0j
            eacc = 0.0 + 0.0j
            for q in range(7):
                if RK_B[q] != 0.0:
                    bacc += RK_B[q] * k[q, i]
                if RK_E[q] != 0.0:
                    eacc += RK_E[q] * k[q, i]
            ynew[i] = y[i] + h * bacc
            ay = abs(y[i])
            ayn = abs(ynew[i])
            scale = atol + rtol * (ay if ay > ayn else ayn)
            r = abs(h * eacc) / scale
            errsum += r * r
        err = np.sqrt(errsum / n)
        if err <= 1.0:
            while idx < npts and t_grid[idx] <= t + h:
                th = (t_grid[idx] - t) / h
                th2 = th * th
                th3 = th2 * th
                th4 = th3 * th
                for i in range(n):
                    acc = 0.0 + 0.0j
                    for q in range(7):
                        bp = (RK_P[q, 0] * th + RK_P[q, 1] * th2
                              + RK_P[q, 2] * th3 + RK_P[q, 3] * th4)
                        acc += bp * k[q, i]
                    out[idx, i] = y[i] + h * acc
                idx += 1
            t += h
            for i in range(n):
                y[i] = ynew[i]
                k[0, i] = k[6, i]  # FSAL
            if err > 0.0:
                fac = SAFETY * err ** ACCEPT_EXP * err_prev ** ACCEPT_EXP_PREV
            else:
                fac = FAC_MAX
            if fac < FAC_MIN:
                fac = FAC_MIN
            if fac > FAC_MAX:
                fac = FAC_MAX
            h = min(h * fac, h_max)
            err_prev = max(err, 1e-10)
        else:
            nrej += 1
            h *= max(FAC_MIN, SAFETY * err ** REJECT_EXP)
            if h < 1e-14 * max(abs(t), 1.0):
                return out, STEP_UNDERFLOW, nsteps, nrej
    if idx < npts:
        out[npts - 1] = y
    return out, OK, nsteps, nrej
