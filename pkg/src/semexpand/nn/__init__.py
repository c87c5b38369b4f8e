"""From-scratch neural network layers, classifiers and training utilities."""

from . import layers
from .models import (
    CHECKPOINT_TAG,
    CnnClassifier,
    LstmClassifier,
    build_model,
    cnn_output_lengths,
    forward_cnn,
    forward_lstm,
    load_model,
    save_model,
)
from .training import EvalResult, TrainConfig, TrainLog, evaluate, gradient_check, train_classifier

__all__ = [
    "CHECKPOINT_TAG",
    "CnnClassifier",
    "layers",
    "LstmClassifier",
    "build_model",
    "cnn_output_lengths",
    "forward_cnn",
    "forward_lstm",
    "load_model",
    "save_model",
    "EvalResult",
    "TrainConfig",
    "TrainLog",
    "evaluate",
    "gradient_check",
    "train_classifier",
]
