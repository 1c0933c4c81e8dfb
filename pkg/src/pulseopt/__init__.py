"""Analytically designed driving pulses for two level transfer in an
N level system, verified by direct integration of the interaction picture
Schrodinger equation with no rotating wave approximation.
"""

from .designer import (
    DesignError,
    DesignOptions,
    DesignReport,
    PerturberAnalysis,
    chirp_design,
    delta,
    design_pulse,
    epsilon,
    optimized_duration,
    perturber_analysis,
    pi_pulse_duration,
    sigma,
)
from .levels import (
    LevelSystem,
    PerturberSpec,
    TargetPair,
    TransitionData,
    build_system,
    transition,
    validate_pair,
    validate_perturber,
)
from .propagator import (
    IntegrationError,
    ReducedModelCoeffs,
    StateVector,
    Trajectory,
    integrate,
    integrate_reduced,
    interaction_matrix,
    predicted_perturber_population,
    reduced_coefficients,
)
from .pulse import (
    CONSTANT,
    SIN2,
    ChirpProfile,
    Envelope,
    PulseSpec,
    ScaledClock,
    ScaledDetunings,
    carrier_frequency,
    envelope_integral,
    envelope_sq_integral,
    envelope_value,
    field_value,
    scaled_clock,
    scaled_detunings,
    t_of_tau,
    tau_of_t,
)
from .scenario import (
    MODES,
    DriveSpec,
    Numerics,
    RunSummary,
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario,
    serialize_scenario,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "CONSTANT",
    "ChirpProfile",
    "DesignError",
    "DesignOptions",
    "DesignReport",
    "DriveSpec",
    "Envelope",
    "IntegrationError",
    "LevelSystem",
    "MODES",
    "Numerics",
    "PerturberAnalysis",
    "PerturberSpec",
    "PulseSpec",
    "ReducedModelCoeffs",
    "RunSummary",
    "SIN2",
    "ScaledClock",
    "ScaledDetunings",
    "Scenario",
    "ScenarioError",
    "StateVector",
    "TargetPair",
    "Trajectory",
    "TransitionData",
    "build_system",
    "carrier_frequency",
    "chirp_design",
    "delta",
    "design_pulse",
    "envelope_integral",
    "envelope_sq_integral",
    "envelope_value",
    "epsilon",
    "field_value",
    "integrate",
    "integrate_reduced",
    "interaction_matrix",
    "load_scenario",
    "optimized_duration",
    "parse_scenario",
    "perturber_analysis",
    "pi_pulse_duration",
    "predicted_perturber_population",
    "reduced_coefficients",
    "scaled_clock",
    "scaled_detunings",
    "serialize_scenario",
    "sigma",
    "summarize",
    "t_of_tau",
    "tau_of_t",
    "transition",
    "validate_pair",
    "validate_perturber",
]
