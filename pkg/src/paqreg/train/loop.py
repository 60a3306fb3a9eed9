"""Minibatch MSE training for models exposing the flat-gradient protocol:
params_flat / set_params_flat / forward / backward."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, NumericError
from .optim import Adam, Sgd


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    lr: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0
    seed: int = 0
    patience: int | None = None
    standardize_targets: bool = True
    # Ramp the learning rate linearly over the first epochs. Hot early Adam
    # steps can push a narrow ReLU layer dead in one go; a short warmup is
    # the cheapest guard.
    warmup_epochs: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise InputError("epochs must be at least 1")
        if self.batch_size < 1:
            raise InputError("batch_size must be at least 1")
        # lr == 0 is allowed: it freezes the model, which is occasionally useful
        if self.lr < 0:
            raise InputError("lr must be non-negative")
        if self.optimizer not in ("adam", "sgd"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")
        if self.patience is not None and self.patience < 1:
            raise InputError("patience must be at least 1 when set")
        if self.warmup_epochs < 0:
            raise InputError("warmup_epochs must be non-negative")

    def make_optimizer(self):
        if self.optimizer == "adam":
            return Adam(self.lr, self.beta1, self.beta2, self.eps)
        return Sgd(self.lr, self.momentum)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "optimizer": self.optimizer,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "momentum": self.momentum,
            "seed": self.seed,
            "patience": self.patience,
            "standardize_targets": self.standardize_targets,
            "warmup_epochs": self.warmup_epochs,
        }


@dataclass
class TrainResult:
    epoch_losses: list[float] = field(default_factory=list)
    n_epochs: int = 0
    stopped_early: bool = False


def train_model(model, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> TrainResult:
    """Run seeded minibatch gradient descent on the squared error.

    The epoch loss is the mean of its minibatch losses. A non-finite loss or
    gradient aborts with the offending epoch in the message. With patience
    set, training stops after that many epochs without improvement.

    Models exposing set_target_transform get an affine output matched to the
    training targets up front (standardize_targets, on by default), so the
    network only has to learn the standardized residual. Predictions and the
    loss trace stay in original units throughout.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise InputError(f"bad training shapes {X.shape} / {y.shape}")
    if X.shape[0] < 1:
        raise InputError("cannot train on zero rows")

    if cfg.standardize_targets and hasattr(model, "set_target_transform"):
        scale = float(y.std())
        model.set_target_transform(float(y.mean()), scale if scale > 0 else 1.0)

    rng = np.random.default_rng(cfg.seed)
    opt = cfg.make_optimizer()
    params = model.params_flat()
    result = TrainResult()
    best_loss = np.inf
    stale = 0

    for epoch in range(cfg.epochs):
        if cfg.warmup_epochs:
            ramp = min(1.0, (epoch + 1) / (cfg.warmup_epochs + 1))
            opt.lr = cfg.lr * ramp
        order = rng.permutation(X.shape[0])
        batch_losses = []
        for start in range(0, X.shape[0], cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            pred = model.forward(X[rows])
            err = pred - y[rows]
            loss = float(np.mean(err**2))
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            grads = model.backward(2.0 * err / len(rows))
            if not np.all(np.isfinite(grads)):
                raise NumericError(f"non-finite gradient at epoch {epoch}")
            params = opt.step(params, grads)
            model.set_params_flat(params)
            batch_losses.append(loss)
        epoch_loss = float(np.mean(batch_losses))
        result.epoch_losses.append(epoch_loss)
        result.n_epochs = epoch + 1
        if cfg.patience is not None:
            if epoch_loss < best_loss - 1e-12:
                best_loss = epoch_loss
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    result.stopped_early = True
                    break
    return result


def fit_any(model, X: np.ndarray, y: np.ndarray, cfg: TrainConfig | None = None):
    """Dispatch: gradient-protocol models get the minibatch loop, the rest
    train themselves through their own fit(X, y)."""
    if hasattr(model, "backward") and hasattr(model, "params_flat"):
        return train_model(model, X, y, cfg if cfg is not None else TrainConfig())
    model.fit(X, y)
    return None
