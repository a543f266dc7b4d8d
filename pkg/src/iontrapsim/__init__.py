"""Trapped-ion quantum-dynamics-simulator toolkit.

Builds the elementary evolution operator of a simulated one-dimensional
time-dependent Schroedinger equation, synthesizes the radio-frequency
control field that drives it on the motional eigenstates of an anharmonic
ion trap, and verifies the concatenated-pulse simulation with and without
Lindblad dissipation.
"""

from .analysis import (
    Spectrum,
    bandpass_filter,
    default_filter_band,
    fidelity_trace,
    mean_position_ion,
    mean_position_sim,
    periodicity_residual,
    spectrum,
)
from .encoder import QubitAmplitudes, decode, encode, to_wavepacket
from .errors import ConvergenceError, NumericalError, ValidationError
from .gridsim import (
    GateMatrix,
    Grid,
    GridWavepacket,
    SimSystem,
    analytic_coherent_evolution,
    classic_propagate,
    elementary_gate,
    gaussian_packet,
    make_grid,
    split_step,
)
from .oct import (
    OctConfig,
    OctTrace,
    TargetSet,
    fidelity,
    make_guess_field,
    optimize_gate,
    optimize_gate_dissipative,
    optimize_state_prep,
    penalty,
    phase_spread,
)
from .propagator import (
    ControlField,
    DissipationModel,
    QuantumState,
    build_dissipation,
    evolution_operator,
    propagate_lindblad,
    propagate_tdse,
    zero_field,
)
from .trap import EigenBasis, TrapParams, solve_trap, transition_table

__all__ = [
    "ControlField",
    "ConvergenceError",
    "DissipationModel",
    "EigenBasis",
    "GateMatrix",
    "Grid",
    "GridWavepacket",
    "NumericalError",
    "OctConfig",
    "OctTrace",
    "QuantumState",
    "QubitAmplitudes",
    "SimSystem",
    "Spectrum",
    "TargetSet",
    "TrapParams",
    "ValidationError",
    "analytic_coherent_evolution",
    "bandpass_filter",
    "build_dissipation",
    "classic_propagate",
    "decode",
    "default_filter_band",
    "elementary_gate",
    "encode",
    "evolution_operator",
    "fidelity",
    "fidelity_trace",
    "gaussian_packet",
    "make_grid",
    "make_guess_field",
    "mean_position_ion",
    "mean_position_sim",
    "optimize_gate",
    "optimize_gate_dissipative",
    "optimize_state_prep",
    "penalty",
    "periodicity_residual",
    "phase_spread",
    "propagate_lindblad",
    "propagate_tdse",
    "solve_trap",
    "spectrum",
    "split_step",
    "to_wavepacket",
    "transition_table",
    "zero_field",
]

__version__ = "0.1.0"
