"""Scenario files: a line oriented description of one transfer problem.

Sections in square brackets, ``key = value`` lines, ``#`` comment lines.
Levels come either as absolute energies::

    [levels]
    alpha = 0.0
    beta = 0.017671

or pairwise, anchored at a reference level (``reference`` is reserved)::

    [levels]
    reference = alpha
    pair beta alpha = 0.017671 +1 0.073

where a ``pair i j = omega sign mu`` line fixes E_i - E_j = sign * omega and
the coupling mu_ij at once.  [couplings] lines read ``a b = mu``.  [target]
names the transfer pair, [perturbers] lines read ``level = attached_level``,
[drive] holds F0, n_half, shape, mode and the optional manual duration T,
[numerics] holds rtol and the sample grid size.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .levels import (
    LevelSystem,
    PerturberSpec,
    TargetPair,
    build_system,
    validate_pair,
    validate_perturber,
)
from .pulse import CONSTANT, SIN2, PulseSpec, tau_of_t

MODES = ("unoptimized", "frequency_only", "optimized", "manual")

_SECTIONS = ("levels", "couplings", "target", "perturbers", "drive", "numerics")


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class DriveSpec:
    f0: float
    n_half: int
    shape: str = SIN2
    mode: str = "optimized"
    manual_duration: Optional[float] = None


@dataclass(frozen=True)
class Numerics:
    rtol: float = 1e-10
    grid: int = 2000


@dataclass(frozen=True)
class Scenario:
    system: LevelSystem
    pair: TargetPair
    perturbers: tuple
    drive: DriveSpec
    numerics: Numerics


@dataclass(frozen=True)
class RunSummary:
    """Headline numbers of one simulated run; populations clipped to [0, 1]."""

    final_transfer: float
    peak_transfer_last_cycle: float
    max_perturber_population: float
    t_pi: float
    t_used: float
    norm_drift: float


def _float(value: str, line: int, what: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(f"{what} is not a number: {value!r}", line) from None


def _int(value: str, line: int, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ScenarioError(f"{what} is not an integer: {value!r}", line) from None


def _split_sections(text: str) -> dict:
    sections: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if name not in _SECTIONS:
                raise ScenarioError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ScenarioError(f"duplicate section [{name}]", lineno)
            sections[name] = []
            current = name
            continue
        if "=" not in stripped:
            raise ScenarioError("expected 'key = value'", lineno)
        if current is None:
            raise ScenarioError("entry before any section header", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ScenarioError("empty key or value", lineno)
        sections[current].append((lineno, key, value))
    return sections


def _parse_levels(entries) -> tuple:
    """Return (labels, energies, moment entries from pair lines)."""
    pairwise = any(k == "reference" or k.startswith("pair ") for _, k, _ in entries)
    if not pairwise:
        labels, energies = [], []
        for lineno, key, value in entries:
            if " " in key:
                raise ScenarioError(f"bad level label {key!r}", lineno)
            if key in labels:
                raise ScenarioError(f"duplicate level {key!r}", lineno)
            labels.append(key)
            energies.append(_float(value, lineno, "level energy"))
        return labels, energies, []

    reference = None
    constraints = []  # (lineno, a, b, signed offset, mu)
    for lineno, key, value in entries:
        if key == "reference":
            if reference is not None:
                raise ScenarioError("duplicate reference", lineno)
            reference = value
            continue
        tokens = key.split()
        if len(tokens) != 3 or tokens[0] != "pair":
            raise ScenarioError(f"expected 'pair A B' or 'reference', got {key!r}", lineno)
        parts = value.split()
        if len(parts) != 3:
            raise ScenarioError("pair line needs 'omega sign mu'", lineno)
        omega = _float(parts[0], lineno, "pair frequency")
        sign = _int(parts[1], lineno, "pair sign")
        if sign not in (1, -1):
            raise ScenarioError(f"pair sign must be +1 or -1, got {parts[1]}", lineno)
        mu = _float(parts[2], lineno, "pair moment")
        constraints.append((lineno, tokens[1], tokens[2], sign * omega, mu))
    if reference is None:
        raise ScenarioError("pairwise [levels] needs a reference line")

    labels = [reference]
    for lineno, a, b, _, _ in constraints:
        for lab in (a, b):
            if lab not in labels:
                labels.append(lab)
    energies = {reference: 0.0}
    pending = list(constraints)
    while pending:
        progressed = False
        remaining = []
        for item in pending:
            lineno, a, b, offset, _ = item
            if a in energies and b in energies:
                if abs(energies[a] - energies[b] - offset) > 1e-9 * max(1.0, abs(offset)):
                    raise ScenarioError(
                        f"pair {a} {b} contradicts the energies already fixed", lineno)
                progressed = True
            elif b in energies:
                energies[a] = energies[b] + offset
                progressed = True
            elif a in energies:
                energies[b] = energies[a] - offset
                progressed = True
            else:
                remaining.append(item)
        if not progressed and remaining:
            missing = sorted({x for item in remaining for x in (item[1], item[2])}
                             - set(energies))
            raise ScenarioError(
                f"levels not connected to the reference: {', '.join(missing)}")
        pending = remaining
    moment_entries = [(lineno, a, b, mu) for lineno, a, b, _, mu in constraints]
    return labels, [energies[lab] for lab in labels], moment_entries


def parse_scenario(text: str) -> Scenario:
    sections = _split_sections(text)
    for required in ("levels", "target", "drive"):
        if required not in sections:
            raise ScenarioError(f"missing [{required}] section")

    labels, energies, moment_entries = _parse_levels(sections["levels"])
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    moments = np.zeros((n, n))

    def set_moment(lineno, a, b, mu):
        for lab in (a, b):
            if lab not in index:
                raise ScenarioError(f"unknown level {lab!r}", lineno)
        i, j = index[a], index[b]
        if i == j:
            raise ScenarioError("coupling needs two distinct levels", lineno)
        if moments[i, j] != 0.0 and moments[i, j] != mu:
            raise ScenarioError(f"conflicting coupling for {a} {b}", lineno)
        moments[i, j] = moments[j, i] = mu

    for lineno, a, b, mu in moment_entries:
        set_moment(lineno, a, b, mu)
    for lineno, key, value in sections.get("couplings", []):
        tokens = key.split()
        if len(tokens) != 2:
            raise ScenarioError(f"coupling key must name two levels, got {key!r}", lineno)
        set_moment(lineno, tokens[0], tokens[1], _float(value, lineno, "coupling"))

    try:
        system = build_system(labels, energies, moments)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    target = {key: (lineno, value) for lineno, key, value in sections["target"]}
    for key in ("alpha", "beta"):
        if key not in target:
            raise ScenarioError(f"[target] needs an {key} line")
    for key, (lineno, value) in target.items():
        if key not in ("alpha", "beta"):
            raise ScenarioError(f"unknown [target] key {key!r}", lineno)
        if value not in index:
            raise ScenarioError(f"unknown level {value!r}", lineno)
    pair = TargetPair(alpha=index[target["alpha"][1]], beta=index[target["beta"][1]])
    try:
        validate_pair(system, pair)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    perturbers = []
    for lineno, key, value in sections.get("perturbers", []):
        for lab in (key, value):
            if lab not in index:
                raise ScenarioError(f"unknown level {lab!r}", lineno)
        pert = PerturberSpec(attached_to=index[value], level=index[key])
        try:
            validate_perturber(system, pair, pert)
        except ValueError as exc:
            raise ScenarioError(str(exc), lineno) from None
        perturbers.append(pert)

    drive_keys = {}
    for lineno, key, value in sections["drive"]:
        if key in drive_keys:
            raise ScenarioError(f"duplicate [drive] key {key!r}", lineno)
        drive_keys[key] = (lineno, value)
    for key in ("F0", "n_half"):
        if key not in drive_keys:
            raise ScenarioError(f"[drive] needs an {key} line")
    known = {"F0", "n_half", "shape", "mode", "T"}
    for key, (lineno, _) in drive_keys.items():
        if key not in known:
            raise ScenarioError(f"unknown [drive] key {key!r}", lineno)
    f0 = _float(drive_keys["F0"][1], drive_keys["F0"][0], "F0")
    if f0 < 0.0:
        raise ScenarioError("F0 must be nonnegative", drive_keys["F0"][0])
    n_half = _int(drive_keys["n_half"][1], drive_keys["n_half"][0], "n_half")
    if n_half < 1:
        raise ScenarioError("n_half must be at least 1", drive_keys["n_half"][0])
    shape = drive_keys.get("shape", (0, SIN2))[1]
    if shape not in (SIN2, CONSTANT):
        raise ScenarioError(f"unknown shape {shape!r}", drive_keys["shape"][0])
    mode = drive_keys.get("mode", (0, "optimized"))[1]
    if mode not in MODES:
        raise ScenarioError(f"unknown mode {mode!r}", drive_keys["mode"][0])
    manual = None
    if "T" in drive_keys:
        manual = _float(drive_keys["T"][1], drive_keys["T"][0], "T")
        if not manual > 0.0:
            raise ScenarioError("T must be positive", drive_keys["T"][0])
    if mode == "manual" and manual is None:
        raise ScenarioError("mode = manual needs a T line in [drive]")
    if f0 == 0.0 and mode != "manual":
        raise ScenarioError("F0 = 0 is only meaningful with mode = manual")
    drive = DriveSpec(f0=f0, n_half=n_half, shape=shape, mode=mode,
                      manual_duration=manual)

    numerics = Numerics()
    for lineno, key, value in sections.get("numerics", []):
        if key == "rtol":
            rtol = _float(value, lineno, "rtol")
            if not rtol > 0.0:
                raise ScenarioError("rtol must be positive", lineno)
            numerics = replace(numerics, rtol=rtol)
        elif key == "grid":
            grid = _int(value, lineno, "grid")
            if grid < 2:
                raise ScenarioError("grid must be at least 2", lineno)
            numerics = replace(numerics, grid=grid)
        else:
            raise ScenarioError(f"unknown [numerics] key {key!r}", lineno)

    return Scenario(system=system, pair=pair, perturbers=tuple(perturbers),
                    drive=drive, numerics=numerics)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def serialize_scenario(sc: Scenario) -> str:
    """Canonical absolute energy form; parse(serialize(sc)) == sc."""
    lines = ["[levels]"]
    for lab, energy in zip(sc.system.labels, sc.system.energies):
        lines.append(f"{lab} = {float(energy)!r}")
    lines.append("")
    lines.append("[couplings]")
    n = sc.system.n
    for i in range(n):
        for j in range(i + 1, n):
            mu = float(sc.system.moments[i, j])
            if mu != 0.0:
                lines.append(f"{sc.system.labels[i]} {sc.system.labels[j]} = {mu!r}")
    lines.append("")
    lines.append("[target]")
    lines.append(f"alpha = {sc.system.labels[sc.pair.alpha]}")
    lines.append(f"beta = {sc.system.labels[sc.pair.beta]}")
    if sc.perturbers:
        lines.append("")
        lines.append("[perturbers]")
        for pert in sc.perturbers:
            lines.append(f"{sc.system.labels[pert.level]} = "
                         f"{sc.system.labels[pert.attached_to]}")
    lines.append("")
    lines.append("[drive]")
    lines.append(f"F0 = {float(sc.drive.f0)!r}")
    lines.append(f"n_half = {sc.drive.n_half}")
    lines.append(f"shape = {sc.drive.shape}")
    lines.append(f"mode = {sc.drive.mode}")
    if sc.drive.manual_duration is not None:
        lines.append(f"T = {float(sc.drive.manual_duration)!r}")
    lines.append("")
    lines.append("[numerics]")
    lines.append(f"rtol = {float(sc.numerics.rtol)!r}")
    lines.append(f"grid = {sc.numerics.grid}")
    lines.append("")
    return "\n".join(lines)


def summarize(sc: Scenario, spec: PulseSpec, t_pi: float, trajectory) -> RunSummary:
    """Distill one trajectory into the headline transfer numbers.

    The transfer destination is the beta level; after an even number of half
    cycles the intended end state is back in alpha, so final_transfer reads
    the level the design aims to populate at the end.  The peak is taken
    over the last half cycle in pulse area, tau >= tau_tot (1 - 1/n_half).
    """
    mu_ab = sc.system.moments[sc.pair.alpha, sc.pair.beta]
    tau = np.asarray(tau_of_t(spec, mu_ab, trajectory.times))
    tau_tot = float(tau[-1])
    window = tau >= tau_tot * (1.0 - 1.0 / sc.drive.n_half) - 1e-12
    pops = trajectory.populations
    beta_col = sc.pair.beta
    end_col = sc.pair.beta if sc.drive.n_half % 2 == 1 else sc.pair.alpha
    peak = float(pops[window, beta_col].max())
    final = float(pops[-1, end_col])
    others = [i for i in range(sc.system.n) if i not in (sc.pair.alpha, sc.pair.beta)]
    max_pert = float(pops[:, others].max()) if others else 0.0

    def clip(x: float) -> float:
        return min(max(x, 0.0), 1.0)

    return RunSummary(
        final_transfer=clip(final),
        peak_transfer_last_cycle=clip(peak),
        max_perturber_population=clip(max_pert),
        t_pi=t_pi,
        t_used=spec.envelope.duration,
        norm_drift=trajectory.norm_drift,
    )
