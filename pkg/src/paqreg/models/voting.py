"""Weighted-mean ensembling over independently trained regressors."""

from __future__ import annotations

import numpy as np

from ..errors import InputError


class VotingEnsemble:
    """Prediction = sum(w_i * pred_i) / sum(w_i). Weights must be positive.

    Members are (name, model, weight) triples; models need only a predict
    method. fit() delegates to members that train directly from (X, y).
    """

    def __init__(self, members: list[tuple[str, object, float]]):
        if not members:
            raise InputError("ensemble needs at least one member")
        names = [name for name, _, _ in members]
        if len(set(names)) != len(names):
            raise InputError("duplicate member names")
        for name, _, weight in members:
            if not weight > 0:
                raise InputError(f"member {name!r} has non-positive weight {weight}")
        self.members = list(members)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "VotingEnsemble":
        for name, model, _ in self.members:
            if not hasattr(model, "fit"):
                raise InputError(f"member {name!r} cannot be fit directly")
            model.fit(X, y)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        total_w = sum(w for _, _, w in self.members)
        out = np.zeros(np.asarray(X).shape[0])
        for _, model, w in self.members:
            out += w * np.asarray(model.predict(X), dtype=np.float64)
        return out / total_w
