"""Reversible n-bit comparator: synthesis, noisy simulation and success statistics."""
from .analysis import (
    OutcomeCategory,
    SuccessReport,
    aggregate,
    calibrate_noise,
    classify_shot,
    oracle_f,
)
from .ir import Circuit, Gate, GateKind, RegisterLayout, append, inverse, metrics, new_circuit
from .qasm import export_qasm, parse_qasm
from .simulator import (
    NoiseModel,
    ShotRecord,
    Shots,
    exact_distribution_statevector,
    inject_error_at,
    run_shots_basis,
    run_shots_statevector,
)
from .synth import ComparatorSpec, build_comparator, build_experiment, lower_toffoli

__all__ = [
    "Circuit",
    "ComparatorSpec",
    "Gate",
    "GateKind",
    "NoiseModel",
    "OutcomeCategory",
    "RegisterLayout",
    "ShotRecord",
    "Shots",
    "SuccessReport",
    "aggregate",
    "append",
    "build_comparator",
    "build_experiment",
    "calibrate_noise",
    "classify_shot",
    "exact_distribution_statevector",
    "export_qasm",
    "inject_error_at",
    "inverse",
    "lower_toffoli",
    "metrics",
    "new_circuit",
    "oracle_f",
    "parse_qasm",
    "run_shots_basis",
    "run_shots_statevector",
]
