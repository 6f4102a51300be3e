"""Ising encoding of small vehicle-routing instances and a noise-aware
VQE simulation harness with an exact classical oracle."""

from .problem import (
    DimensionGuardError,
    Infeasibility,
    IsingForm,
    QuboForm,
    RouteSet,
    VrpInstance,
    brute_force_minimum,
    build_instance,
    build_qubo,
    decode_routes,
    evaluate_ising,
    evaluate_qubo,
    qubo_to_ising,
    reference_instance,
    vrp_cost,
)
from .hamiltonian import PauliZPolynomial, expectation, from_ising
from .circuit import (
    Gate,
    ParameterizedCircuit,
    ParamRef,
    bind_parameters,
    build_ansatz,
    circuit_unitary,
    gate_matrix,
)
from .noise import NoiseChannel, channel_from_name, kraus_operators, validate_channel
from .simulator import (
    NoisePlacement,
    QuantumState,
    apply_channel,
    basis_probabilities,
    run_density,
    run_statevector,
    run_trajectories,
)
from .vqe import (
    BackendCompatibilityError,
    ObjectiveError,
    OptimizerConfig,
    VqeResult,
    minimize,
    vqe_multistart,
    vqe_run,
)
from .experiment import (
    AggregateRow,
    SweepConfig,
    SweepRecord,
    aggregate,
    run_sweep,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "BackendCompatibilityError",
    "DimensionGuardError",
    "Gate",
    "Infeasibility",
    "IsingForm",
    "NoiseChannel",
    "NoisePlacement",
    "ObjectiveError",
    "OptimizerConfig",
    "ParamRef",
    "ParameterizedCircuit",
    "PauliZPolynomial",
    "QuantumState",
    "QuboForm",
    "RouteSet",
    "SweepConfig",
    "SweepRecord",
    "VqeResult",
    "VrpInstance",
    "aggregate",
    "apply_channel",
    "basis_probabilities",
    "bind_parameters",
    "brute_force_minimum",
    "build_ansatz",
    "build_instance",
    "build_qubo",
    "channel_from_name",
    "circuit_unitary",
    "decode_routes",
    "evaluate_ising",
    "evaluate_qubo",
    "expectation",
    "from_ising",
    "gate_matrix",
    "kraus_operators",
    "minimize",
    "qubo_to_ising",
    "reference_instance",
    "run_density",
    "run_statevector",
    "run_sweep",
    "run_trajectories",
    "validate_channel",
    "vqe_multistart",
    "vqe_run",
    "vrp_cost",
    "write_csv",
]
