"""N-level system model: energies, transition moments, derived pair data.

Energies are stored in absolute form (Hartree, with an arbitrary gauge
offset; population dynamics in the interaction picture is gauge invariant).
Pairwise inputs from scenario files are converted to absolute energies at
parse time, anchored at a declared reference level with E = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class LevelSystem:
    """Validated level structure.

    labels   : unique level identifiers
    energies : E_i in atomic units
    moments  : symmetric N x N transition moment matrix mu_ij, zero diagonal
    """

    labels: tuple[str, ...]
    energies: np.ndarray
    moments: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, LevelSystem):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.energies, other.energies)
            and np.array_equal(self.moments, other.moments)
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown level label {label!r}") from None


@dataclass(frozen=True)
class TransitionData:
    """Pairwise transition data relative to a declared target pair."""

    omega: float  # |E_i - E_j|
    sign: int     # sign(E_i - E_j)
    moment: float
    ratio: float  # mu_ij / mu_alpha_beta


@dataclass(frozen=True)
class TargetPair:
    """The two levels selected for population transfer."""

    alpha: int
    beta: int


@dataclass(frozen=True)
class PerturberSpec:
    """A perturbing level coupled to exactly one of the target levels."""

    attached_to: int  # index of the target level (alpha or beta) it couples to
    level: int        # index of the perturbing level


def build_system(labels, energies, moments) -> LevelSystem:
    """Validate and freeze a level system.

    Rejects asymmetric or nonzero-diagonal moments, duplicate labels, and
    coupled degenerate pairs (mu_ij != 0 with E_i = E_j), which would make the
    pair transition frequency vanish.  Degenerate uncoupled levels pass.
    """
    labels = tuple(str(x) for x in labels)
    energies = np.asarray(energies, dtype=float).copy()
    moments = np.asarray(moments, dtype=float).copy()
    n = len(labels)
    if len(set(labels)) != n:
        raise ValueError("duplicate level labels")
    if energies.shape != (n,):
        raise ValueError(f"expected {n} energies, got shape {energies.shape}")
    if moments.shape != (n, n):
        raise ValueError(f"moments must be {n}x{n}, got {moments.shape}")
    for i in range(n):
        if moments[i, i] != 0.0:
            raise ValueError(f"diagonal moment at level {labels[i]} must be zero")
        for j in range(i + 1, n):
            if moments[i, j] != moments[j, i]:
                raise ValueError(
                    f"asymmetric moments for pair ({labels[i]}, {labels[j]}): "
                    f"{moments[i, j]} vs {moments[j, i]}"
                )
            if moments[i, j] != 0.0 and energies[i] == energies[j]:
                raise ValueError(
                    f"coupled degenerate pair ({labels[i]}, {labels[j]}): "
                    "transition frequency would vanish"
                )
    energies.flags.writeable = False
    moments.flags.writeable = False
    return LevelSystem(labels=labels, energies=energies, moments=moments)


def transition(system: LevelSystem, i: int, j: int, pair: TargetPair) -> TransitionData:
    """Pairwise data (omega_ij, s_ij, mu_ij, R_ij) for levels i, j."""
    if i == j:
        raise ValueError("transition requires two distinct levels")
    de = system.energies[i] - system.energies[j]
    mu = system.moments[i, j]
    mu_ab = system.moments[pair.alpha, pair.beta]
    return TransitionData(
        omega=abs(de),
        sign=1 if de > 0 else -1,
        moment=float(mu),
        ratio=float(mu / mu_ab),
    )


def validate_pair(system: LevelSystem, pair: TargetPair) -> None:
    if pair.alpha == pair.beta:
        raise ValueError("target pair must name two distinct levels")
    if system.moments[pair.alpha, pair.beta] == 0.0:
        raise ValueError("target pair is not dipole coupled")


def validate_perturber(system: LevelSystem, pair: TargetPair, pert: PerturberSpec) -> None:
    """Enforce the simplifying structure: coupled to one target level only."""
    if pert.attached_to not in (pair.alpha, pair.beta):
        raise ValueError("perturber must attach to one of the target levels")
    if pert.level in (pair.alpha, pair.beta):
        raise ValueError("perturber must be a level outside the target pair")
    other = pair.alpha if pert.attached_to == pair.beta else pair.beta
    if system.moments[pert.level, pert.attached_to] == 0.0:
        raise ValueError(
            f"perturber {system.labels[pert.level]} is not coupled to its "
            f"attached level {system.labels[pert.attached_to]}"
        )
    if system.moments[pert.level, other] != 0.0:
        raise ValueError(
            f"perturber {system.labels[pert.level]} must not couple to "
            f"{system.labels[other]}"
        )
