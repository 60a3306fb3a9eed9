"""Repeated k-fold evaluation and exhaustive hyperparameter search."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..errors import InputError, NumericError
from ..ingest import FoldPlan, zscore_fit_apply
from .loop import TrainConfig, fit_any
from .metrics import all_metrics


@dataclass(frozen=True)
class CvSummary:
    fold_metrics: tuple[dict, ...]  # exactly n_folds * n_iterations entries
    n_folds: int
    n_iterations: int
    r2_mean: float
    r2_std: float
    mae_mean: float
    mae_std: float
    rmse_mean: float
    rmse_std: float

    def as_dict(self) -> dict:
        return {
            "n_folds": self.n_folds,
            "n_iterations": self.n_iterations,
            "r2_mean": self.r2_mean,
            "r2_std": self.r2_std,
            "mae_mean": self.mae_mean,
            "mae_std": self.mae_std,
            "rmse_mean": self.rmse_mean,
            "rmse_std": self.rmse_std,
            "folds": list(self.fold_metrics),
        }


def _eval_seed(base_seed: int, iteration: int, fold: int) -> int:
    return int(np.random.SeedSequence([base_seed, iteration, fold]).generate_state(1)[0])


def cross_validate(
    model_factory,
    X: np.ndarray,
    y: np.ndarray,
    fold_plan: FoldPlan,
    cfg: TrainConfig,
    threads: int | None = None,
) -> CvSummary:
    """Evaluate model_factory(seed) over every (iteration, fold) pair.

    Normalization statistics are fit on the training rows of each split and
    applied to both sides; the target is left in its original units. Each
    split gets its own seed mixed from (cfg.seed, iteration, fold), so
    results do not depend on evaluation order or thread count.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != fold_plan.assignments.shape[1]:
        raise InputError("fold plan was built for a different number of rows")

    jobs = [
        (it, fold)
        for it in range(fold_plan.n_iterations)
        for fold in range(fold_plan.n_folds)
    ]

    def run_one(job: tuple[int, int]) -> dict:
        it, fold = job
        test_rows = fold_plan.test_rows(it, fold)
        train_rows = fold_plan.train_rows(it, fold)
        if len(test_rows) < 2:
            raise InputError(f"fold {fold} of iteration {it} has fewer than 2 test rows")
        Xn, _, _ = zscore_fit_apply(X, train_rows)
        seed = _eval_seed(cfg.seed, it, fold)
        model = model_factory(seed)
        fit_any(model, Xn[train_rows], y[train_rows], replace(cfg, seed=seed))
        m = all_metrics(y[test_rows], model.predict(Xn[test_rows]))
        m.update({"iteration": it, "fold": fold})
        return m

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fold_metrics = list(pool.map(run_one, jobs))
    else:
        fold_metrics = [run_one(job) for job in jobs]

    def agg(key: str) -> tuple[float, float]:
        vals = np.asarray([m[key] for m in fold_metrics])
        return float(vals.mean()), float(vals.std())

    r2_mean, r2_std = agg("r2")
    mae_mean, mae_std = agg("mae")
    rmse_mean, rmse_std = agg("rmse")
    return CvSummary(
        fold_metrics=tuple(fold_metrics),
        n_folds=fold_plan.n_folds,
        n_iterations=fold_plan.n_iterations,
        r2_mean=r2_mean,
        r2_std=r2_std,
        mae_mean=mae_mean,
        mae_std=mae_std,
        rmse_mean=rmse_mean,
        rmse_std=rmse_std,
    )


@dataclass(frozen=True)
class GridResult:
    best_params: dict
    best_summary: CvSummary
    results: tuple[tuple[dict, CvSummary | None], ...]  # None: combo diverged


def grid_search(
    grid: dict[str, list],
    make_factory,
    X: np.ndarray,
    y: np.ndarray,
    fold_plan: FoldPlan,
    cfg: TrainConfig,
    threads: int | None = None,
) -> GridResult:
    """Exhaustive search over the Cartesian product of grid values.

    make_factory(combo) must return a model_factory(seed). Best is lowest CV
    MAE; ties break by lower RMSE, then by enumeration order (keys in given
    order, values left to right). Combos that diverge (training failure or
    non-finite CV error) stay in the results table with a None summary and
    never win; they only fail the search if nothing converges.
    """
    if not grid:
        raise InputError("empty parameter grid")
    keys = list(grid.keys())
    for k in keys:
        if not grid[k]:
            raise InputError(f"grid entry {k!r} has no values")

    results: list[tuple[dict, CvSummary | None]] = []
    best: tuple[float, float, int] | None = None
    best_idx = -1
    for idx, values in enumerate(itertools.product(*(grid[k] for k in keys))):
        combo = dict(zip(keys, values))
        try:
            summary = cross_validate(make_factory(combo), X, y, fold_plan, cfg, threads=threads)
        except NumericError:
            results.append((combo, None))
            continue
        if not all(
            np.isfinite(v)
            for v in (summary.mae_mean, summary.rmse_mean, summary.r2_mean)
        ):
            results.append((combo, None))
            continue
        results.append((combo, summary))
        rank = (summary.mae_mean, summary.rmse_mean, idx)
        if best is None or rank < best:
            best = rank
            best_idx = idx
    if best is None:
        raise NumericError("every grid combination diverged")
    return GridResult(
        best_params=results[best_idx][0],
        best_summary=results[best_idx][1],
        results=tuple(results),
    )
