import functools
import math

import numpy as np
import pytest

import pulseopt as po
from pulseopt import _kernels, _rk

OFFSET_PAIR = 0.017671 - (0.035282 - 0.017671)  # pair minus perturber freq


def two_level_system():
    moments = np.zeros((2, 2))
    moments[0, 1] = moments[1, 0] = 0.073
    return po.build_system(["alpha", "beta"], [0.0, 0.017671], moments)


@functools.lru_cache(maxsize=None)
def sigma_sq_run(s2: float):
    """Design and propagate the HF system at a requested sigma^2."""
    import conftest as cf
    hf = cf.hf_system()
    pair = po.TargetPair(0, 1)
    perts = (po.PerturberSpec(attached_to=1, level=2),)
    f0 = math.sqrt(s2) * 2.0 * abs(OFFSET_PAIR) / 0.098
    spec, report = po.design_pulse(hf, pair, perts, f0, 1)
    full = po.integrate(hf, spec, po.StateVector.basis(3, 0),
                        sampling=2000, rtol=1e-10)
    reduced = po.integrate_reduced(hf, pair, perts, spec,
                                   sampling=2001, rtol=1e-10)
    return hf, pair, perts, spec, report, full, reduced


def combined_eps(system, pair, perts, spec, report):
    """eps(t) for the beta side perturbers of an HF style system."""
    ana = po.perturber_analysis(system, pair, perts, spec.amplitude)[0]
    coeff = report.chirp_coefficient

    def eps_of_t(t):
        t = np.asarray(t, dtype=float)
        m = po.envelope_value(spec.envelope, t)
        safe = np.where(t > 0.0, t, 1.0)
        g = np.where(t > 0.0,
                     po.envelope_sq_integral(spec.envelope, t) / safe, 0.0)
        d = po.delta(coeff, g, ana.offset)
        return np.asarray(po.epsilon(ana.sigma, m, d), dtype=float)

    return eps_of_t


def test_state_vector_basics():
    state = po.StateVector.basis(3, 1)
    assert state.amplitudes.shape == (3,)
    assert state.populations == pytest.approx([0.0, 1.0, 0.0])
    assert not state.amplitudes.flags.writeable
    with pytest.raises(ValueError):
        po.StateVector(np.zeros((2, 2), dtype=complex))


def test_interaction_matrix_is_hermitian(runs):
    run = runs("hf_fig4", "optimized")
    rng = np.random.default_rng(7)
    t_samples = rng.uniform(0.0, run.spec.envelope.duration, 100)
    for t in t_samples:
        h = po.interaction_matrix(run.sc.system, run.spec, float(t))
        assert np.array_equal(h, h.conj().T)
        assert np.all(h.diagonal() == 0.0)
        # alpha and the perturbing level are not dipole coupled
        assert h[0, 2] == 0.0


def test_interaction_matrix_domain(runs):
    run = runs("hf_fig4", "optimized")
    with pytest.raises(ValueError):
        po.interaction_matrix(run.sc.system, run.spec, -1.0)
    with pytest.raises(ValueError):
        po.interaction_matrix(run.sc.system, run.spec,
                              run.spec.envelope.duration * 1.001)


def test_kernel_matches_reference_integrator(runs):
    # the compiled propagation and a plain python run of the same scheme on
    # the hermitian generator must agree to roundoff
    run = runs("hf_fig5", "optimized")
    system, spec = run.sc.system, run.spec
    rtol = 1e-10
    sampling = 101
    traj = po.integrate(system, spec, po.StateVector.basis(3, 0),
                        sampling=sampling, rtol=rtol)

    def rhs(t, y):
        return -1j * (po.interaction_matrix(system, spec, t) @ y)

    base = spec.carrier.base
    coeff = spec.carrier.coefficient
    w_fast = base + abs(coeff) + float(np.max(system.energies) - np.min(system.energies))
    h_max = 2.0 * np.pi / w_fast / 40.0
    t_grid = np.linspace(0.0, spec.envelope.duration, sampling)
    y0 = np.zeros(3, dtype=np.complex128)
    y0[0] = 1.0
    ref, status = _rk.integrate_dopri5(rhs, y0, t_grid, rtol, rtol / 100.0, h_max)
    assert status == _rk.OK
    assert np.max(np.abs(traj.amplitudes - ref)) <= 1e-9


def test_time_reversal_recovers_initial_state(runs):
    run = runs("hf_fig4", "optimized")
    system, spec = run.sc.system, run.spec
    end = po.StateVector(run.traj.amplitudes[-1])
    back = po.integrate(system, spec, end, sampling=200, rtol=1e-10,
                        reverse=True)
    y0 = np.zeros(3, dtype=complex)
    y0[0] = 1.0
    assert np.max(np.abs(back.amplitudes[-1] - y0)) <= 1e-9
    # the stored field samples are the forward ones either way
    fwd = po.integrate(system, spec, po.StateVector.basis(3, 0),
                       sampling=200, rtol=1e-10)
    assert np.array_equal(back.envelope_samples, fwd.envelope_samples)
    assert np.array_equal(back.carrier_samples, fwd.carrier_samples)


def test_sampling_grid_does_not_steer_the_solution(runs):
    run = runs("hf_fig5", "optimized")
    system, spec = run.sc.system, run.spec
    coarse = po.integrate(system, spec, po.StateVector.basis(3, 0),
                          sampling=1001, rtol=1e-10)
    fine = po.integrate(system, spec, po.StateVector.basis(3, 0),
                        sampling=2001, rtol=1e-10)
    # common sample times: every second point of the fine grid
    assert np.max(np.abs(fine.populations[::2] - coarse.populations)) <= 1e-9


def test_tolerance_refinement_is_converged(runs):
    run = runs("hf_fig5", "optimized")
    tight = po.integrate(run.sc.system, run.spec, po.StateVector.basis(3, 0),
                         sampling=2000, rtol=1e-12)
    assert np.max(np.abs(tight.populations[-1] - run.traj.populations[-1])) <= 1e-6


def test_norm_drift_small_and_no_alarm(runs):
    for fig, mode in (("hf_fig2", "optimized"), ("hf_fig3", "optimized"),
                      ("hf_fig4", "optimized"), ("hf_fig5", "optimized")):
        run = runs(fig, mode)
        assert run.traj.norm_drift <= 1e-7
        assert not run.traj.norm_alarm


def test_integrate_input_validation(runs):
    run = runs("hf_fig4", "optimized")
    with pytest.raises(ValueError, match="amplitudes"):
        po.integrate(run.sc.system, run.spec, po.StateVector.basis(2, 0))
    with pytest.raises(ValueError, match="sampling"):
        po.integrate(run.sc.system, run.spec, po.StateVector.basis(3, 0),
                     sampling=1)


def test_step_underflow_is_reported():
    # a singular right hand side defeats the step controller; the raw
    # integrator must flag it instead of looping
    def rhs(t, y):
        return y / (0.5 - t)

    y0 = np.ones(1, dtype=np.complex128)
    _, status = _rk.integrate_dopri5(rhs, y0, np.linspace(0.0, 1.0, 5),
                                     1e-10, 1e-12, 0.1)
    assert status == _rk.STEP_UNDERFLOW


def test_underflow_status_raises_integration_error(runs, monkeypatch):
    run = runs("hf_fig4", "optimized")

    def fake_propagate(*args):
        return (np.zeros((50, 3), dtype=np.complex128),
                _rk.STEP_UNDERFLOW, 0, 0)

    monkeypatch.setattr(po.propagator._kernels, "propagate", fake_propagate)
    with pytest.raises(po.IntegrationError, match="underflow"):
        po.integrate(run.sc.system, run.spec, po.StateVector.basis(3, 0),
                     sampling=50)


def test_weak_drive_matches_rotating_wave_solution():
    # constant envelope two level transfer: Pi_beta = sin^2(tau) up to the
    # counter rotating correction ~ F0 mu / 4 omega
    system = two_level_system()
    pair = po.TargetPair(0, 1)
    for f0, frozen in ((1.22282e-3, 1.262e-3), (4.07606e-4, 4.21e-4)):
        spec, _ = po.design_pulse(system, pair, (), f0, 1, po.CONSTANT)
        traj = po.integrate(system, spec, po.StateVector.basis(2, 0),
                            sampling=2000, rtol=1e-10)
        tau = po.tau_of_t(spec, 0.073, traj.times)
        dev = np.max(np.abs(traj.populations[:, 1] - np.sin(tau) ** 2))
        assert dev <= 0.01
        assert dev == pytest.approx(frozen, rel=0.02)
        assert traj.populations[-1, 1] >= 0.99999


def test_reduced_model_without_perturbers_is_exact():
    system = two_level_system()
    pair = po.TargetPair(0, 1)
    spec, _ = po.design_pulse(system, pair, (), 4.07606e-4, 1)
    traj = po.integrate_reduced(system, pair, (), spec, sampling=501)
    tau = po.tau_of_t(spec, 0.073, traj.times)
    assert np.max(np.abs(traj.populations[:, 1] - np.sin(tau) ** 2)) <= 1e-8
    assert traj.labels == ("alpha", "beta")
    assert not traj.norm_alarm


def test_reduced_model_rejects_undriven_pair():
    system = two_level_system()
    spec = po.PulseSpec(0.0, po.Envelope(po.SIN2, 1000.0), 0.017671)
    with pytest.raises(ValueError, match="driven"):
        po.integrate_reduced(system, po.TargetPair(0, 1), (), spec)


@pytest.mark.parametrize("s2,frozen_diff", [
    (0.01, 1.564e-06),
    (0.02, 1.302e-05),
    (0.05, 4.200e-04),
])
def test_reduced_model_tracks_full_solution(s2, frozen_diff):
    _, _, _, _, _, full, reduced = sigma_sq_run(s2)
    diff = abs(reduced.populations[-1, 1] - full.populations[-1, 1])
    assert diff <= 0.01
    assert diff == pytest.approx(frozen_diff, rel=0.05)


def test_reduced_coefficients_structure(runs):
    run = runs("hf_fig4", "optimized")
    sc, spec = run.sc, run.spec
    tau_tot = po.tau_of_t(spec, 0.073, spec.envelope.duration)
    grid = np.linspace(0.0, tau_tot, 801)
    co = po.reduced_coefficients(sc.system, sc.pair, sc.perturbers, spec, grid)
    assert np.all(co.eps_alpha_q == 0.0)
    assert np.all(co.eps_beta_p >= 0.0)
    assert co.zeta_of_tau == pytest.approx(1.0 / (1.0 + co.eps_beta_p))
    assert co.kappa_of_tau == pytest.approx(
        np.sqrt((1.0 + co.eps_alpha_q) * (1.0 + co.eps_beta_p)))
    assert np.all(co.kappa_of_tau >= 1.0)
    assert co.zeta_of_tau.min() == pytest.approx(0.9072, abs=2e-4)
    assert co.kappa_of_tau.max() == pytest.approx(1.0499, abs=2e-4)
    # the repulsion grows while the envelope rises and relaxes after the peak
    assert co.xi_of_tau[1] < 0.0 < co.xi_of_tau[-2]


@pytest.mark.parametrize("s2,frozen_dev", [
    (0.01, 0.0162),
    (0.05, 0.0208),
    (0.10, 0.1478),
])
def test_leak_estimate_tracks_perturber_population(s2, frozen_dev):
    system, pair, perts, spec, report, full, _ = sigma_sq_run(s2)
    eps_of_t = combined_eps(system, pair, perts, spec, report)
    predicted = po.predicted_perturber_population(full, eps_of_t, "beta")
    assert predicted.shape == full.times.shape
    dev = abs(1.0 - predicted.max() / full.populations[:, 2].max())
    assert dev <= 0.30
    assert dev == pytest.approx(frozen_dev, abs=0.005)


def test_trajectory_arrays_are_frozen(runs):
    run = runs("hf_fig4", "optimized")
    for arr in (run.traj.times, run.traj.amplitudes, run.traj.populations,
                run.traj.carrier_samples, run.traj.envelope_samples):
        assert not arr.flags.writeable
