"""Versioned JSON checkpoints for every trainable model kind."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import InputError
from ..ingest import NormStats
from ..jsonio import read_json, write_json
from .hybrid import HybridModel, HybridSpec
from .mlp import Mlp
from .trees import DecisionTree, GradientBoosting, RandomForest

FORMAT_VERSION = 1


def _tree_ensemble_params(trees: list[DecisionTree]) -> list[dict]:
    return [t.to_dict() for t in trees]


def _model_payload(model) -> tuple[str, dict, object]:
    if isinstance(model, GradientBoosting):
        spec = {
            "n_trees": model.n_trees,
            "learning_rate": model.learning_rate,
            "max_depth": model.max_depth,
            "min_samples_leaf": model.min_samples_leaf,
            "seed": model.seed,
        }
        params = {
            "base": model.base_,
            "n_features": model.n_features_,
            "trees": _tree_ensemble_params(model.trees_),
        }
        return "gbdt", spec, params
    if isinstance(model, RandomForest):
        spec = {
            "n_trees": model.n_trees,
            "max_depth": model.max_depth,
            "min_samples_leaf": model.min_samples_leaf,
            "feature_fraction": model.feature_fraction,
            "seed": model.seed,
        }
        params = {
            "n_features": model.n_features_,
            "trees": _tree_ensemble_params(model.trees_),
        }
        return "rf", spec, params
    if isinstance(model, HybridModel):
        params = {
            "flat": model.params_flat(),
            "out_center": model.out_center,
            "out_scale": model.out_scale,
        }
        return "hybrid", model.spec.to_dict(), params
    if isinstance(model, Mlp):
        params = {
            "flat": model.params_flat(),
            "out_center": model.out_center,
            "out_scale": model.out_scale,
        }
        return "mlp", {"d_in": model.d_in}, params
    raise InputError(f"cannot checkpoint a {type(model).__name__}")


def save_model(
    path: str | Path,
    model,
    normalizer: NormStats | None = None,
    feature_names: tuple[str, ...] = (),
    config: dict | None = None,
) -> None:
    kind, spec, params = _model_payload(model)
    norm = None
    if normalizer is not None:
        norm = {"means": normalizer.means, "stds": normalizer.stds}
    write_json(
        path,
        {
            "format": FORMAT_VERSION,
            "kind": kind,
            "spec": spec,
            "parameters": params,
            "normalizer": norm,
            "feature_names": list(feature_names),
            "config": config or {},
        },
    )


def load_model(path: str | Path):
    """Returns (model, normalizer or None, feature_names, config)."""
    data = read_json(path)
    version = data.get("format")
    if version != FORMAT_VERSION:
        raise InputError(f"unsupported checkpoint format {version!r}, expected {FORMAT_VERSION}")
    kind = data.get("kind")
    spec = data["spec"]
    params = data["parameters"]

    if kind == "gbdt":
        model = GradientBoosting(**spec)
        model.base_ = float(params["base"])
        model.n_features_ = int(params["n_features"])
        model.trees_ = [
            DecisionTree.from_dict(t, model.n_features_) for t in params["trees"]
        ]
    elif kind == "rf":
        model = RandomForest(**spec)
        model.n_features_ = int(params["n_features"])
        model.trees_ = [
            DecisionTree.from_dict(t, model.n_features_) for t in params["trees"]
        ]
    elif kind == "hybrid":
        model = HybridModel(HybridSpec.from_dict(spec))
        model.set_params_flat(np.asarray(params["flat"], dtype=np.float64))
        model.set_target_transform(params["out_center"], params["out_scale"])
    elif kind == "mlp":
        model = Mlp(int(spec["d_in"]))
        model.set_params_flat(np.asarray(params["flat"], dtype=np.float64))
        model.set_target_transform(params["out_center"], params["out_scale"])
    else:
        raise InputError(f"unknown checkpoint kind {kind!r}")

    norm = None
    if data.get("normalizer") is not None:
        norm = NormStats(
            means=np.asarray(data["normalizer"]["means"], dtype=np.float64),
            stds=np.asarray(data["normalizer"]["stds"], dtype=np.float64),
        )
    return model, norm, tuple(data.get("feature_names", ())), data.get("config", {})
