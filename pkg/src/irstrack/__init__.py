"""Kalman tracking and LSTM observation prediction for IRS-assisted uplink channels."""

from .channel import ChannelState, ChannelStatistics, SystemConfig, derive_statistics
from .exceptions import ConfigurationError, NotFittedError, NumericalError, TrainingError
from .measurement import ObservationBlock, ReferenceMatrix, measurement_matrix, reference_matrix
from .tracker import KalmanState, KalmanTracker

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "ChannelStatistics",
    "ChannelState",
    "derive_statistics",
    "ObservationBlock",
    "ReferenceMatrix",
    "reference_matrix",
    "measurement_matrix",
    "KalmanState",
    "KalmanTracker",
    "ConfigurationError",
    "NumericalError",
    "TrainingError",
    "NotFittedError",
]
