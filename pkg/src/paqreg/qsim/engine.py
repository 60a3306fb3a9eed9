"""Batched statevector simulation and analytic gradients.

Amplitude arrays are complex128, shape (batch, 2**n). Basis index bit q is
qubit q, so qubit 0 is the least significant bit. All gate kernels mutate
the array in place through reshaped views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InputError
from .circuit import CircuitSpec, GateOp, ROTATION_KINDS

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray  # (2**n,) complex128

    @classmethod
    def zero_state(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@lru_cache(maxsize=64)
def _z_signs(n_qubits: int) -> np.ndarray:
    """(2**n, n) matrix of Z eigenvalues: +1 where bit q is 0, else -1."""
    idx = np.arange(1 << n_qubits)
    signs = np.empty((1 << n_qubits, n_qubits), dtype=np.float64)
    for q in range(n_qubits):
        signs[:, q] = 1.0 - 2.0 * ((idx >> q) & 1)
    return signs


@lru_cache(maxsize=256)
def _cnot_indices(n_qubits: int, control: int, target: int):
    """(dst, src) index arrays implementing the controlled bit flip."""
    idx = np.arange(1 << n_qubits)
    sel = ((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)
    i0 = idx[sel]
    i1 = i0 | (1 << target)
    return np.concatenate([i0, i1]), np.concatenate([i1, i0])


@lru_cache(maxsize=256)
def _cz_indices(n_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    return idx[((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 1)]


def _halves(amps: np.ndarray, n_qubits: int, q: int):
    """Split the batch array into the bit-q=0 and bit-q=1 amplitude views."""
    view = amps.reshape(amps.shape[0], -1, 2, 1 << q)
    return view[:, :, 0, :], view[:, :, 1, :]


def _as_angle(theta) -> "np.ndarray | float":
    """Scalar angles stay scalars; per-row angles broadcast over the view axes."""
    if np.ndim(theta) == 0:
        return float(theta)
    return np.asarray(theta, dtype=np.float64)[:, None, None]


def _apply_kernel(amps: np.ndarray, n_qubits: int, kind: str, qubits: tuple, theta=0.0) -> None:
    if kind == "cnot":
        dst, src = _cnot_indices(n_qubits, *qubits)
        amps[:, dst] = amps[:, src]
        return
    if kind == "cz":
        amps[:, _cz_indices(n_qubits, *qubits)] *= -1.0
        return

    a0, a1 = _halves(amps, n_qubits, qubits[0])
    if kind == "h":
        t0 = (a0 + a1) * _INV_SQRT2
        a1[...] = (a0 - a1) * _INV_SQRT2
        a0[...] = t0
    elif kind == "x":
        t0 = a0.copy()
        a0[...] = a1
        a1[...] = t0
    elif kind == "y":
        t0 = -1j * a1
        a1[...] = 1j * a0
        a0[...] = t0
    elif kind == "z":
        a1[...] *= -1.0
    else:
        half = _as_angle(theta) * 0.5
        c = np.cos(half)
        s = np.sin(half)
        if kind == "rx":
            t0 = c * a0 - 1j * s * a1
            a1[...] = -1j * s * a0 + c * a1
            a0[...] = t0
        elif kind == "ry":
            t0 = c * a0 - s * a1
            a1[...] = s * a0 + c * a1
            a0[...] = t0
        elif kind == "rz":
            a0[...] *= c - 1j * s
            a1[...] *= c + 1j * s
        else:
            raise InputError(f"unknown gate kind {kind!r}")


def _apply_pauli(amps: np.ndarray, n_qubits: int, axis: str, q: int) -> None:
    """Apply the bare Pauli generator of an rx/ry/rz rotation."""
    _apply_kernel(amps, n_qubits, axis, (q,))


def _pauli_overlap(bra: np.ndarray, ket: np.ndarray, n_qubits: int, axis: str, q: int, per_row: bool):
    """<bra|P_q|ket> without materializing P|ket>.

    The rotation-gate gradient is Im(<bra|P|ket>), since dU/dtheta maps the
    ket through -0.5i P. With per_row the sum runs within each batch row.
    """
    b0, b1 = _halves(bra, n_qubits, q)
    a0, a1 = _halves(ket, n_qubits, q)
    axes = (1, 2) if per_row else None
    if axis == "x":
        return np.sum(np.conj(b0) * a1 + np.conj(b1) * a0, axis=axes)
    if axis == "y":
        return -1j * np.sum(np.conj(b0) * a1 - np.conj(b1) * a0, axis=axes)
    return np.sum(np.conj(b0) * a0 - np.conj(b1) * a1, axis=axes)


def _gate_angle(op: GateOp, features, params):
    if op.source == "feature":
        return features[..., op.slot]
    if op.source == "param":
        return params[op.slot]
    return op.angle


def _check_shapes(spec: CircuitSpec, features, params) -> tuple[np.ndarray, np.ndarray]:
    features = np.atleast_2d(np.asarray(features if features is not None else [], dtype=np.float64))
    if spec.n_feature_slots and features.shape[1] != spec.n_feature_slots:
        raise InputError(
            f"expected {spec.n_feature_slots} feature values, got {features.shape[1]}"
        )
    params = np.asarray(params if params is not None else [], dtype=np.float64)
    if params.shape != (spec.n_param_slots,):
        raise InputError(
            f"expected {spec.n_param_slots} parameter values, got shape {params.shape}"
        )
    return features, params


def apply_gate(state: Statevector, op: GateOp, angle: float | None = None) -> Statevector:
    """Apply one gate to a single statevector, returning a new one."""
    for q in op.qubits:
        if not 0 <= q < state.n_qubits:
            raise InputError(f"gate {op.kind} addresses qubit {q}")
    theta = angle if angle is not None else op.angle
    amps = state.amplitudes[None, :].copy()
    _apply_kernel(amps, state.n_qubits, op.kind, op.qubits, theta)
    return Statevector(state.n_qubits, amps[0])


def run_circuit_batch(
    spec: CircuitSpec,
    features: np.ndarray | None,
    params: np.ndarray | None,
) -> np.ndarray:
    """Run the circuit on |0...0> for every feature row; returns (B, 2**n)."""
    features, params = _check_shapes(spec, features, params)
    batch = features.shape[0] if spec.n_feature_slots else max(features.shape[0], 1)
    amps = np.zeros((batch, 1 << spec.n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    for op in spec.gates:
        _apply_kernel(amps, spec.n_qubits, op.kind, op.qubits, _gate_angle(op, features, params))
    return amps


def run_statevector(
    spec: CircuitSpec,
    features=None,
    params=None,
) -> Statevector:
    """Single-row circuit execution returning the final state."""
    feats = None if features is None else np.asarray(features, dtype=np.float64)[None, :]
    amps = run_circuit_batch(spec, feats, params)
    return Statevector(spec.n_qubits, amps[0])


def run_circuit(
    spec: CircuitSpec,
    features=None,
    params=None,
) -> np.ndarray:
    """Execute the circuit on |0...0> and read out per-qubit <Z>; returns (n,)."""
    state = run_statevector(spec, features, params)
    return z_expectations(state.amplitudes[None, :], spec.n_qubits)[0]


def z_expectations(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """Per-qubit <Z> for each batch row: (B, 2**n) -> (B, n)."""
    probs = np.abs(amps) ** 2
    return probs @ _z_signs(n_qubits)


def expectation_z(state: Statevector, qubit: int) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise InputError(f"qubit {qubit} out of range")
    return float(z_expectations(state.amplitudes[None, :], state.n_qubits)[0, qubit])


def grad_param_shift(spec: CircuitSpec, features, params) -> np.ndarray:
    """Exact gradients d<Z_q>/d theta_p via +-pi/2 shifts; returns (n, P)."""
    _, params = _check_shapes(spec, features, params)
    feats = None if features is None else np.asarray(features, dtype=np.float64)
    grads = np.zeros((spec.n_qubits, spec.n_param_slots))
    for p in range(spec.n_param_slots):
        shifted = params.copy()
        shifted[p] += 0.5 * math.pi
        e_plus = run_circuit(spec, feats, shifted)
        shifted[p] -= math.pi
        e_minus = run_circuit(spec, feats, shifted)
        grads[:, p] = 0.5 * (e_plus - e_minus)
    return grads


_PAULI_OF = {"rx": "x", "ry": "y", "rz": "z"}


def grad_adjoint(
    spec: CircuitSpec,
    features,
    params,
    return_feature_grads: bool = False,
):
    """Full Jacobian d<Z_q>/d theta_p in one reverse sweep; returns (n, P).

    With return_feature_grads a (n, F) array accumulating d<Z_q>/d x_f is
    returned as well (feature slots may be reused, so entries add up).
    """
    feats2d, params = _check_shapes(spec, features, params)
    n = spec.n_qubits
    dim = 1 << n

    ket = run_circuit_batch(spec, feats2d if spec.n_feature_slots else None, params)
    if ket.shape[0] != 1:
        raise InputError("adjoint jacobian works on a single feature row")

    # One bra per observable: Z_q |psi>, advanced backwards alongside the ket.
    bras = _z_signs(n).T * ket[0]

    grads = np.zeros((n, spec.n_param_slots))
    fgrads = np.zeros((n, spec.n_feature_slots))

    feats_row = feats2d[0] if spec.n_feature_slots else np.empty(0)
    for op in reversed(spec.gates):
        theta = _gate_angle(op, feats_row, params)
        if op.kind in ROTATION_KINDS and op.source != "fixed":
            s = _pauli_overlap(bras, ket, n, _PAULI_OF[op.kind], op.qubits[0], per_row=True)
            g = np.imag(s)
            if op.source == "param":
                grads[:, op.slot] = g
            else:
                fgrads[:, op.slot] += g
        inv_theta = -theta if op.kind in ROTATION_KINDS else theta
        _apply_kernel(ket, n, op.kind, op.qubits, inv_theta)
        _apply_kernel(bras, n, op.kind, op.qubits, inv_theta)

    if return_feature_grads:
        return grads, fgrads
    return grads


def grad_weighted_batch(
    spec: CircuitSpec,
    features: np.ndarray,
    params: np.ndarray,
    weights: np.ndarray,
    ket: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of sum_b sum_q weights[b, q] * <Z_q>_b w.r.t. params.

    One reverse sweep over the whole batch (about three forward costs),
    instead of a full per-row Jacobian. This is what makes hybrid training
    tractable. Returns (P,).

    A final state already computed for (features, params) can be passed in
    to skip the forward run. The array is consumed: the sweep un-applies
    gates into it in place.
    """
    feats2d, params = _check_shapes(spec, features, params)
    weights = np.asarray(weights, dtype=np.float64)
    n = spec.n_qubits
    if weights.shape != (feats2d.shape[0], n):
        raise InputError(f"weights shape {weights.shape} does not match (batch, n_qubits)")

    if ket is None:
        ket = run_circuit_batch(spec, feats2d if spec.n_feature_slots else None, params)
    elif ket.shape != (feats2d.shape[0], 1 << n):
        raise InputError(f"precomputed state shape {ket.shape} does not match (batch, 2**n)")
    # sum_q w[b,q] Z_q is diagonal; its action is an elementwise profile.
    bra = (weights @ _z_signs(n).T) * ket

    grads = np.zeros(spec.n_param_slots)
    feats_row = feats2d if spec.n_feature_slots else np.empty((ket.shape[0], 0))
    for op in reversed(spec.gates):
        theta = _gate_angle(op, feats_row, params)
        if op.source == "param":
            grads[op.slot] = np.imag(
                _pauli_overlap(bra, ket, n, _PAULI_OF[op.kind], op.qubits[0], per_row=False)
            )
        inv_theta = -theta if op.kind in ROTATION_KINDS else theta
        _apply_kernel(ket, n, op.kind, op.qubits, inv_theta)
        _apply_kernel(bra, n, op.kind, op.qubits, inv_theta)
    return grads


def measure_shots(
    spec: CircuitSpec,
    features,
    params,
    shots: int,
    seed: int,
) -> np.ndarray:
    """Estimate per-qubit <Z> from a finite multinomial sample; returns (n,)."""
    if shots < 1:
        raise InputError("shots must be positive")
    state = run_statevector(spec, features, params)
    probs = state.probabilities()
    total = probs.sum()
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
        raise InputError(f"state norm deviates from 1: sum(p) = {total}")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs / total)
    return (counts @ _z_signs(state.n_qubits)) / shots
