from .cv import CvSummary, GridResult, cross_validate, grid_search
from .loop import TrainConfig, TrainResult, fit_any, train_model
from .metrics import all_metrics, mae, r2, rmse
from .optim import Adam, Sgd

__all__ = [
    "Adam",
    "CvSummary",
    "GridResult",
    "Sgd",
    "TrainConfig",
    "TrainResult",
    "all_metrics",
    "cross_validate",
    "fit_any",
    "grid_search",
    "mae",
    "r2",
    "rmse",
    "train_model",
]
