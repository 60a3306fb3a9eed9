from .checkpoint import load_model, save_model
from .hybrid import HybridModel, HybridSpec, hybrid_param_count
from .mlp import Mlp, mlp_layer_dims, mlp_param_count
from .selection import SelectionResult, select_features
from .trees import DecisionTree, GradientBoosting, RandomForest
from .voting import VotingEnsemble

__all__ = [
    "DecisionTree",
    "GradientBoosting",
    "HybridModel",
    "HybridSpec",
    "Mlp",
    "RandomForest",
    "SelectionResult",
    "VotingEnsemble",
    "hybrid_param_count",
    "load_model",
    "mlp_layer_dims",
    "mlp_param_count",
    "save_model",
    "select_features",
]
