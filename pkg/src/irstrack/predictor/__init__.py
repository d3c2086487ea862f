"""Observation predictor: dual LSTM network, training windows and rollout."""

from .dataset import block_features, make_windows, sequence_features, simulate_corpus, simulate_observations
from .estimator import (
    OBLSTMPredictor,
    load_checkpoint,
    ob_nmse,
    predict_observations,
    rollout,
    save_checkpoint,
)
from .normalize import Normalizer

__all__ = [
    "OBLSTMPredictor",
    "Normalizer",
    "block_features",
    "sequence_features",
    "make_windows",
    "simulate_observations",
    "simulate_corpus",
    "ob_nmse",
    "predict_observations",
    "rollout",
    "save_checkpoint",
    "load_checkpoint",
]
