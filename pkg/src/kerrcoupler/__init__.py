"""Entanglement dynamics of a damped Kerr-nonlinear coupler.

Two anharmonic oscillators exchange photon pairs inside a lossy (optionally
thermal) two-mode cavity. The package builds the model operators on a
truncated Fock space, integrates the Lindblad master equation with fixed-step
RK4, measures Wootters concurrence and Bell-like state fidelities of the
{|0>,|2>} x {|0>,|2>} qubit pair, and detects sudden-death intervals and
sudden-birth events in the resulting concurrence traces.
"""

__version__ = "0.1.0"

from .analysis import (
    DeathInterval,
    DetectorConfig,
    detect_birth_events,
    detect_death_intervals,
    envelope,
    write_event_csv,
)
from .entanglement import (
    QubitPairMatrix,
    bell_fidelity,
    bell_state_qubit,
    bell_state_vector,
    concurrence,
    project_to_qubits,
    spin_flip,
)
from .hilbert import (
    DensityMatrix,
    HilbertSpec,
    OperatorMatrix,
    annihilation,
    basis_state,
    creation,
    lift,
    number,
)
from .master_eq import (
    ConvergenceReport,
    CsvFormatError,
    IntegrationError,
    IntegratorConfig,
    NonFiniteStateError,
    TraceDriftError,
    Trajectory,
    check_convergence,
    evolve,
    lindblad_rhs,
    liouvillian_matrix,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .model import (
    CouplerParams,
    ModelOperators,
    build_collapse_ops,
    build_hamiltonian,
    build_model,
)

__all__ = [
    "DeathInterval", "DetectorConfig", "detect_birth_events",
    "detect_death_intervals", "envelope", "write_event_csv",
    "QubitPairMatrix", "bell_fidelity", "bell_state_qubit", "bell_state_vector",
    "concurrence", "project_to_qubits", "spin_flip",
    "DensityMatrix", "HilbertSpec", "OperatorMatrix", "annihilation",
    "basis_state", "creation", "lift", "number",
    "ConvergenceReport", "CsvFormatError", "IntegrationError",
    "IntegratorConfig", "NonFiniteStateError", "TraceDriftError", "Trajectory",
    "check_convergence", "evolve", "lindblad_rhs", "liouvillian_matrix",
    "read_trajectory_csv", "write_trajectory_csv",
    "CouplerParams", "ModelOperators", "build_collapse_ops",
    "build_hamiltonian", "build_model",
]
