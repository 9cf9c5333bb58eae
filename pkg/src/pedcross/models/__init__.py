"""From-scratch model families with a uniform fit/predict surface."""

from ._backend import BACKEND
from .base import (
    CLASSIFICATION,
    LINEAR_REGRESSION,
    LINEAR_SVM,
    LOGISTIC_REGRESSION,
    MLP,
    MODEL_KINDS,
    RANDOM_FOREST,
    REGRESSION,
    TASKS,
    DesignMatrix,
    ModelSpec,
    TrainedModel,
    feature_importance,
    fit,
    impurity_importance,
    permutation_importance,
    predict,
    predict_label,
    standardized_coefficients,
    supports_task,
)
from .cluster import AVERAGE, COMPLETE, WARD, Clustering, agglomerative, assign
from .mlp import flatten, init_params, mlp_gradients, mlp_loss, param_count, unflatten
from .serialize import (
    clustering_from_dict,
    clustering_to_dict,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    scaler_from_dict,
    scaler_to_dict,
)

__all__ = [
    "BACKEND",
    "CLASSIFICATION",
    "LINEAR_REGRESSION",
    "LINEAR_SVM",
    "LOGISTIC_REGRESSION",
    "MLP",
    "MODEL_KINDS",
    "RANDOM_FOREST",
    "REGRESSION",
    "TASKS",
    "DesignMatrix",
    "ModelSpec",
    "TrainedModel",
    "AVERAGE",
    "COMPLETE",
    "WARD",
    "Clustering",
    "agglomerative",
    "assign",
    "feature_importance",
    "fit",
    "flatten",
    "impurity_importance",
    "init_params",
    "load_model",
    "mlp_gradients",
    "mlp_loss",
    "model_from_dict",
    "model_to_dict",
    "param_count",
    "permutation_importance",
    "predict",
    "predict_label",
    "save_model",
    "scaler_from_dict",
    "scaler_to_dict",
    "clustering_from_dict",
    "clustering_to_dict",
    "standardized_coefficients",
    "supports_task",
    "unflatten",
]
