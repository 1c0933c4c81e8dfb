"""Shared fixtures: scenario paths and a memoized run cache.

Full propagations are the expensive part of the suite, so every (scenario,
mode) pair is integrated at most once per session and shared between the
unit tests and the acceptance gate.
"""

import pathlib
import time
from types import SimpleNamespace

import numpy as np
import pytest

import pulseopt as po

SCENARIO_DIR = pathlib.Path(__file__).resolve().parents[1] / "scenarios"

_CACHE: dict[tuple[str, str], SimpleNamespace] = {}


def options_for(sc: po.Scenario, mode: str) -> po.DesignOptions:
    if mode == "unoptimized":
        return po.DesignOptions(unoptimized=True)
    if mode == "frequency_only":
        return po.DesignOptions(frequency_only=True)
    if mode == "manual":
        if sc.drive.manual_duration is None:
            raise ValueError("scenario has no manual duration")
        return po.DesignOptions(manual_duration=sc.drive.manual_duration)
    if mode == "optimized":
        return po.DesignOptions()
    raise ValueError(f"unknown mode {mode!r}")


def run_scenario(fig: str, mode: str) -> SimpleNamespace:
    key = (fig, mode)
    if key not in _CACHE:
        sc = po.load_scenario(SCENARIO_DIR / f"{fig}.scn")
        t0 = time.perf_counter()
        spec, report = po.design_pulse(
            sc.system, sc.pair, sc.perturbers, sc.drive.f0, sc.drive.n_half,
            sc.drive.shape, options_for(sc, mode))
        design_secs = time.perf_counter() - t0
        t0 = time.perf_counter()
        traj = po.integrate(sc.system, spec,
                            po.StateVector.basis(sc.system.n, sc.pair.alpha),
                            sampling=sc.numerics.grid, rtol=sc.numerics.rtol)
        integrate_secs = time.perf_counter() - t0
        summary = po.summarize(sc, spec, report.t_pi, traj)
        _CACHE[key] = SimpleNamespace(
            sc=sc, spec=spec, report=report, traj=traj, summary=summary,
            design_secs=design_secs, integrate_secs=integrate_secs)
    return _CACHE[key]


@pytest.fixture(scope="session")
def runs():
    return run_scenario


@pytest.fixture(scope="session")
def scenario_dir() -> pathlib.Path:
    return SCENARIO_DIR


def hf_system() -> po.LevelSystem:
    energies = [0.0, 0.017671, 0.035282]
    moments = np.zeros((3, 3))
    moments[0, 1] = moments[1, 0] = 0.073
    moments[1, 2] = moments[2, 1] = 0.098
    return po.build_system(["alpha", "beta", "p"], energies, moments)


@pytest.fixture(scope="session")
def hf() -> po.LevelSystem:
    return hf_system()


@pytest.fixture(scope="session")
def hf_pair() -> po.TargetPair:
    return po.TargetPair(alpha=0, beta=1)


@pytest.fixture(scope="session")
def hf_perturbers() -> tuple[po.PerturberSpec, ...]:
    return (po.PerturberSpec(attached_to=1, level=2),)


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    """Pay the JIT compile cost once, outside any timed assertion."""
    system = hf_system()
    spec, _ = po.design_pulse(system, po.TargetPair(0, 1),
                              (po.PerturberSpec(attached_to=1, level=2),),
                              1.22282e-3, 1)
    po.integrate(system, spec, po.StateVector.basis(3, 0),
                 sampling=16, rtol=1e-6)
    yield
