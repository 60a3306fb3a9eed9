"""Small fully connected regression head with a fixed halving layout."""

from __future__ import annotations

import numpy as np

from ..errors import InputError


def mlp_layer_dims(d_in: int) -> list[tuple[int, int]]:
    """Layer shapes for input width d: (d, d//2), (d//2, d//4), (d//4, 1)."""
    if d_in < 4:
        raise InputError(f"input width must be at least 4, got {d_in}")
    return [(d_in, d_in // 2), (d_in // 2, d_in // 4), (d_in // 4, 1)]


def mlp_param_count(d_in: int) -> int:
    return sum(fan_in * fan_out + fan_out for fan_in, fan_out in mlp_layer_dims(d_in))


class Mlp:
    """Three dense layers, ReLU between them, identity output.

    Weights start uniform in +-1/sqrt(fan_in). forward() caches activations
    so backward() can return both parameter and input gradients.

    An affine output transform (center + scale * raw) lets a trainer fit
    standardized targets while predictions stay in original units; it is
    fixed data, not a trainable parameter, much like the constant base of
    a boosted ensemble.
    """

    def __init__(self, d_in: int, seed: int = 0):
        self.d_in = d_in
        self.dims = mlp_layer_dims(d_in)
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in self.dims:
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))
        self.out_center = 0.0
        self.out_scale = 1.0
        self._cache: list[np.ndarray] | None = None

    def set_target_transform(self, center: float, scale: float) -> None:
        if not (np.isfinite(center) and np.isfinite(scale)) or scale <= 0.0:
            raise InputError(f"bad target transform ({center}, {scale})")
        self.out_center = float(center)
        self.out_scale = float(scale)

    @property
    def n_params(self) -> int:
        return mlp_param_count(self.d_in)

    def params_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_params_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise InputError(f"expected {self.n_params} parameters, got {flat.shape}")
        pos = 0
        for i, (fan_in, fan_out) in enumerate(self.dims):
            self.weights[i] = flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out).copy()
            pos += fan_in * fan_out
            self.biases[i] = flat[pos : pos + fan_out].copy()
            pos += fan_out

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d_in:
            raise InputError(f"expected (batch, {self.d_in}) input, got {X.shape}")
        acts = [X]
        h = X
        last = len(self.dims) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        self._cache = acts
        return self.out_center + self.out_scale * h[:, 0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)

    def backward(self, dpred: np.ndarray) -> np.ndarray:
        """Backprop dloss/dpred into flat parameter gradients."""
        return self.backward_full(dpred)[0]

    def backward_full(self, dpred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Backprop dloss/dpred; returns (flat parameter grads, input grads)."""
        if self._cache is None:
            raise InputError("backward called before forward")
        acts = self._cache
        delta = self.out_scale * np.asarray(dpred, dtype=np.float64)[:, None]
        wgrads: list[np.ndarray] = [None] * len(self.dims)
        bgrads: list[np.ndarray] = [None] * len(self.dims)
        for i in range(len(self.dims) - 1, -1, -1):
            wgrads[i] = acts[i].T @ delta
            bgrads[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * (acts[i] > 0.0)
        parts = []
        for wg, bg in zip(wgrads, bgrads):
            parts.append(wg.ravel())
            parts.append(bg)
        return np.concatenate(parts), delta
