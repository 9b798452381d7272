"""Deep echo state networks with post-hoc explanation tools."""

from ._accel import backend, set_backend
from .data import SequenceDataset
from .errors import ConfigError, DataError, EsnError, NumericError, ShapeError, StateError
from .reservoir import (
    DeepEsnModel,
    ReservoirLayer,
    StateTrajectory,
    init_random,
    readout,
    run_sequence,
    spectral_radius,
    step,
)
from .serialization import load_model, save_model
from .training import TrainConfig, evaluate, fit_pinv, fit_ridge, predict, train

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DeepEsnModel",
    "EsnError",
    "NumericError",
    "ReservoirLayer",
    "SequenceDataset",
    "ShapeError",
    "StateError",
    "StateTrajectory",
    "TrainConfig",
    "backend",
    "evaluate",
    "fit_pinv",
    "fit_ridge",
    "init_random",
    "load_model",
    "predict",
    "readout",
    "run_sequence",
    "save_model",
    "set_backend",
    "spectral_radius",
    "step",
    "train",
]
