"""Dormand-Prince 5(4) coefficients and a reference adaptive integrator.

The Butcher tableau lives here, in one place, so that the compiled kernel in
``_kernels`` and the pure Python driver below cannot drift apart.  All names
carry an ``RK_`` prefix on purpose: single letter aliases are too easy to
shadow from numerical code, and the compiled kernel freezes whatever globals
it sees at first call, without bounds checking.

``integrate_dopri5`` is the plain Python implementation.  It is used for the
reduced two level model, whose right hand side is an arbitrary Python
closure, and it doubles as a cross check oracle for the compiled kernel in
the test suite.  Both implementations share the tableau, the PI step
controller constants, and the Shampine dense output polynomial.
"""

from __future__ import annotations

import numpy as np

RK_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])

RK_A = np.zeros((7, 7))
RK_A[1, 0] = 1 / 5
RK_A[2, :2] = [3 / 40, 9 / 40]
RK_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
RK_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
RK_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
RK_A[6, :6] = [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]

RK_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])

# difference between the 5th and the embedded 4th order weights
RK_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

# Shampine dense output: b_s(theta) = sum_j RK_P[s, j] theta^(j+1)
RK_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

# PI step controller, shared with the compiled kernel
ACCEPT_EXP = -0.17
ACCEPT_EXP_PREV = 0.04
REJECT_EXP = -0.2
SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0

OK = 0
STEP_UNDERFLOW = 1
STEP_LIMIT = 2

_MAX_STEPS = 200_000_000


def integrate_dopri5(rhs, y0, t_eval, rtol, atol, h_max):
    """Integrate dy/dt = rhs(t, y) and sample the solution on t_eval.

    Parameters
    ----------
    rhs : callable(t, y) -> ndarray
        Right hand side; y and the return value are complex vectors.
    y0 : ndarray
        State at t_eval[0].
    t_eval : ndarray
        Ascending sample grid; integration runs over its full extent and
        samples are filled by dense output, decoupled from internal steps.
    rtol, atol : float
        Local error tolerances per step.
    h_max : float
        Hard cap on the internal step size.

    Returns
    -------
    (out, status) : (ndarray of shape (len(t_eval), len(y0)), int)
        status is OK, STEP_UNDERFLOW, or STEP_LIMIT.
    """
    y = np.asarray(y0, dtype=np.complex128).copy()
    n = y.size
    t_eval = np.asarray(t_eval, dtype=np.float64)
    npts = t_eval.size
    out = np.empty((npts, n), dtype=np.complex128)
    out[0] = y
    t = t_eval[0]
    t_end = t_eval[-1]
    if t_end == t:
        out[:] = y
        return out, OK

    k = np.empty((7, n), dtype=np.complex128)
    k[0] = rhs(t, y)
    h = min(h_max, (t_end - t) * 1e-4 + 1e-12)
    err_prev = 1.0
    idx = 1
    steps = 0
    while t < t_end:
        steps += 1
        if steps > _MAX_STEPS:
            return out, STEP_LIMIT
        if t + h > t_end:
            h = t_end - t
        for s in range(1, 7):
            k[s] = rhs(t + RK_C[s] * h, y + h * (RK_A[s, :s] @ k[:s]))
        ynew = y + h * (RK_B @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = np.sqrt(np.mean(np.abs(h * (RK_E @ k)) ** 2 / scale**2))
        if err <= 1.0:
            while idx < npts and t_eval[idx] <= t + h:
                th = (t_eval[idx] - t) / h
                powers = th ** np.arange(1, 5)
                out[idx] = y + h * ((RK_P @ powers) @ k)
                idx += 1
            t += h
            y = ynew
            k[0] = k[6]  # FSAL
            fac = SAFETY * err**ACCEPT_EXP * err_prev**ACCEPT_EXP_PREV if err > 0 else FAC_MAX
            fac = min(max(fac, FAC_MIN), FAC_MAX)
            h = min(h * fac, h_max)
            err_prev = max(err, 1e-10)
        else:
            h *= max(FAC_MIN, SAFETY * err**REJECT_EXP)
            if h < 1e-14 * max(abs(t), 1.0):
                return out, STEP_UNDERFLOW
    if idx < npts:
        out[npts - 1] = y
    return out, OK
