"""Backward feature elimination driven by tree importances and CV error."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..ingest import make_folds
from ..train.cv import cross_validate
from .trees import GradientBoosting


@dataclass(frozen=True)
class SelectionResult:
    retained: tuple[str, ...]  # original column order
    retained_idx: tuple[int, ...]
    ranking: tuple[str, ...]  # most to least important
    history: tuple[dict, ...]

    @property
    def retained_ranked(self) -> tuple[str, ...]:
        """Retained features in importance order, the layout sub-encoders
        consume (most important slice first)."""
        kept = set(self.retained)
        return tuple(name for name in self.ranking if name in kept)


def select_features(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: tuple[str, ...],
    model_factory,
    cfg,
    n_folds: int = 5,
    n_iterations: int = 1,
    seed: int = 0,
    tolerance: float = 0.02,
    ranker: GradientBoosting | None = None,
    threads: int | None = None,
) -> SelectionResult:
    """Drop features worst-first while CV MAE stays within (1 + tolerance)
    of the best seen; the set before the violating drop is retained.

    Ranking comes from a boosted-tree fit on the full data (importance =
    accumulated split gain). Ties keep the earlier column first. A tolerance
    of inf eliminates all the way down to one feature.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[1] != len(feature_names):
        raise InputError("feature_names length does not match matrix width")
    if X.shape[1] < 2:
        raise InputError("selection needs at least 2 features")
    if tolerance < 0:
        raise InputError("tolerance must be non-negative")

    if ranker is None:
        ranker = GradientBoosting(seed=seed)
    ranker.fit(X, y)
    importances = ranker.feature_importances()
    order = np.argsort(-importances, kind="stable")  # best first, stable ties

    fold_plan = make_folds(X.shape[0], n_folds, n_iterations, seed)

    def evaluate(cols: list[int]) -> float:
        summary = cross_validate(
            model_factory, X[:, cols], y, fold_plan, cfg, threads=threads
        )
        return summary.mae_mean

    active = [int(j) for j in order]
    history: list[dict] = []
    best_seen = evaluate(active)
    history.append({"n_features": len(active), "mae": best_seen, "dropped": None})

    while len(active) > 1:
        candidate = active[:-1]
        mae = evaluate(candidate)
        dropped = feature_names[active[-1]]
        limit = best_seen * (1.0 + tolerance)
        history.append({"n_features": len(candidate), "mae": mae, "dropped": dropped})
        if mae > limit and not math.isinf(tolerance):
            break
        active = candidate
        best_seen = min(best_seen, mae)

    retained_idx = tuple(sorted(active))
    return SelectionResult(
        retained=tuple(feature_names[j] for j in retained_idx),
        retained_idx=retained_idx,
        ranking=tuple(feature_names[j] for j in order),
        history=tuple(history),
    )
