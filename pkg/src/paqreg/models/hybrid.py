"""Hybrid regressor: a bank of parallel sub-encoders feeding a dense head.

Each sub-encoder is the same sampled circuit topology with its own trainable
angles, reading a disjoint contiguous slice of the input features. Per-qubit
Z expectations from all encoders are concatenated into the head input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..qsim import CircuitSpec, generate_circuit, grad_weighted_batch, run_circuit_batch, z_expectations
from .mlp import Mlp, mlp_param_count


@dataclass(frozen=True)
class HybridSpec:
    n_qubits: int
    n_circuits: int
    features_per_circuit: int
    params_per_circuit: int
    seed: int = 0
    # Encoding angles are input_scale * feature value. Normalized features
    # span a few standard deviations; compressing them into a sub-pi range
    # keeps the rotation encoding injective, which helps generalization.
    input_scale: float = 1.0

    def __post_init__(self):
        if self.n_circuits < 1:
            raise InputError("need at least one sub-encoder")
        if self.features_per_circuit < 1:
            raise InputError("each sub-encoder needs at least one feature")
        if self.params_per_circuit < 1:
            raise InputError("each sub-encoder needs at least one parameter")
        if self.n_qubits * self.n_circuits < 4:
            raise InputError("head input width below the minimum of 4")
        if not self.input_scale > 0:
            raise InputError("input_scale must be positive")

    @property
    def n_features(self) -> int:
        return self.n_circuits * self.features_per_circuit

    @property
    def head_input_width(self) -> int:
        return self.n_circuits * self.n_qubits

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_circuits": self.n_circuits,
            "features_per_circuit": self.features_per_circuit,
            "params_per_circuit": self.params_per_circuit,
            "seed": self.seed,
            "input_scale": self.input_scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HybridSpec":
        return cls(
            n_qubits=int(data["n_qubits"]),
            n_circuits=int(data["n_circuits"]),
            features_per_circuit=int(data["features_per_circuit"]),
            params_per_circuit=int(data["params_per_circuit"]),
            seed=int(data["seed"]),
            input_scale=float(data.get("input_scale", 1.0)),
        )


def hybrid_param_count(n_qubits: int, n_circuits: int, params_per_circuit: int) -> int:
    """Trainable angles plus head weights for the given encoder layout."""
    return n_circuits * params_per_circuit + mlp_param_count(n_circuits * n_qubits)


class HybridModel:
    """Trainable hybrid: K circuit parameter sets plus the dense head.

    Flat parameter layout: all circuit angles first (circuit-major), then
    the head weights. Circuit angles start uniform in (-pi, pi), the head
    with its own fan-in scaled init, all drawn from the spec seed.
    """

    def __init__(self, spec: HybridSpec):
        self.spec = spec
        self.circuit: CircuitSpec = generate_circuit(
            spec.n_qubits,
            spec.features_per_circuit,
            spec.params_per_circuit,
            seed=spec.seed,
        )
        rng = np.random.default_rng(spec.seed)
        self.circuit_params = rng.uniform(
            -np.pi, np.pi, size=(spec.n_circuits, spec.params_per_circuit)
        )
        self.head = Mlp(spec.head_input_width, seed=int(rng.integers(2**31)))
        self._cache_X: np.ndarray | None = None
        self._cache_kets: list[np.ndarray] | None = None

    def set_target_transform(self, center: float, scale: float) -> None:
        self.head.set_target_transform(center, scale)

    @property
    def out_center(self) -> float:
        return self.head.out_center

    @property
    def out_scale(self) -> float:
        return self.head.out_scale

    @property
    def n_params(self) -> int:
        return hybrid_param_count(
            self.spec.n_qubits, self.spec.n_circuits, self.spec.params_per_circuit
        )

    def params_flat(self) -> np.ndarray:
        return np.concatenate([self.circuit_params.ravel(), self.head.params_flat()])

    def set_params_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise InputError(f"expected {self.n_params} parameters, got {flat.shape}")
        k, p = self.spec.n_circuits, self.spec.params_per_circuit
        self.circuit_params = flat[: k * p].reshape(k, p).copy()
        self.head.set_params_flat(flat[k * p :])

    def _slices(self, X: np.ndarray) -> list[np.ndarray]:
        f = self.spec.features_per_circuit
        return [X[:, k * f : (k + 1) * f] for k in range(self.spec.n_circuits)]

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.spec.n_features:
            raise InputError(f"expected (batch, {self.spec.n_features}) input, got {X.shape}")
        angles = self.spec.input_scale * X
        kets = [
            run_circuit_batch(self.circuit, xk, self.circuit_params[k])
            for k, xk in enumerate(self._slices(angles))
        ]
        outs = [z_expectations(ket, self.spec.n_qubits) for ket in kets]
        self._cache_X = angles
        self._cache_kets = kets
        return self.head.forward(np.concatenate(outs, axis=1))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        """Head backprop plus one weighted adjoint sweep per sub-encoder.

        Reuses the states cached by the preceding forward (the sweep consumes
        them), so each call after a forward costs roughly two extra forwards.
        """
        if self._cache_X is None or self._cache_kets is None:
            raise InputError("backward called before forward")
        head_grads, dh = self.head.backward_full(dpred)
        nq = self.spec.n_qubits
        cgrads = np.empty_like(self.circuit_params)
        for k, xk in enumerate(self._slices(self._cache_X)):
            weights = dh[:, k * nq : (k + 1) * nq]
            cgrads[k] = grad_weighted_batch(
                self.circuit, xk, self.circuit_params[k], weights, ket=self._cache_kets[k]
            )
        self._cache_kets = None
        return np.concatenate([cgrads.ravel(), head_grads])
