from .circuit import CircuitSpec, GateOp, generate_circuit
from .engine import (
    Statevector,
    apply_gate,
    expectation_z,
    grad_adjoint,
    grad_param_shift,
    grad_weighted_batch,
    measure_shots,
    run_circuit,
    run_circuit_batch,
    run_statevector,
    z_expectations,
)

__all__ = [
    "CircuitSpec",
    "GateOp",
    "Statevector",
    "apply_gate",
    "expectation_z",
    "generate_circuit",
    "grad_adjoint",
    "grad_param_shift",
    "grad_weighted_batch",
    "measure_shots",
    "run_circuit",
    "run_circuit_batch",
    "run_statevector",
    "z_expectations",
]
