"""Regression metrics used across evaluation and reporting."""

from __future__ import annotations

import numpy as np

from ..errors import InputError


def _paired(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    yt = np.asarray(y_true, dtype=np.float64)
    yp = np.asarray(y_pred, dtype=np.float64)
    if yt.shape != yp.shape or yt.ndim != 1:
        raise InputError(f"metric inputs must be equal-length vectors, got {yt.shape} / {yp.shape}")
    if yt.size == 0:
        raise InputError("metric inputs are empty")
    return yt, yp


def r2(y_true, y_pred) -> float:
    yt, yp = _paired(y_true, y_pred)
    ss_tot = float(np.sum((yt - yt.mean()) ** 2))
    if ss_tot == 0.0:
        raise InputError("r2 is undefined for a constant y_true")
    ss_res = float(np.sum((yt - yp) ** 2))
    return 1.0 - ss_res / ss_tot


def mae(y_true, y_pred) -> float:
    yt, yp = _paired(y_true, y_pred)
    return float(np.mean(np.abs(yt - yp)))


def rmse(y_true, y_pred) -> float:
    yt, yp = _paired(y_true, y_pred)
    return float(np.sqrt(np.mean((yt - yp) ** 2)))


def all_metrics(y_true, y_pred) -> dict:
    return {
        "r2": r2(y_true, y_pred),
        "mae": mae(y_true, y_pred),
        "rmse": rmse(y_true, y_pred),
    }
