"""Training, evaluation, metrics and the command line."""

from ..config import ABLATION_METHODS, Config, ConfigError
from .evaluate import evaluate, evaluate_model, load_checkpoint, predict
from .metrics import MetricsReport, min_ade, min_fde, rmse_horizon
from .train import TrainingDiverged, train, train_model

__all__ = [
    "ABLATION_METHODS", "Config", "ConfigError", "MetricsReport", "TrainingDiverged",
    "evaluate", "evaluate_model", "load_checkpoint", "min_ade", "min_fde", "predict",
    "rmse_horizon", "train", "train_model",
]
