"""Sparse constitutive model discovery from biaxial tissue tests."""

from .datagen import STANDARD_PROTOCOLS, ProtocolSpec, generate_fixture, standard_protocols, solve_ratio_path
from .dataset import Dataset, read_dataset
from .discovery import (
    LEFT_ATRIUM,
    RIGHT_ATRIUM,
    DiscoveredModel,
    FitReport,
    prune,
    r_squared,
    render_model,
    sweep,
)
from .energy import CATALOG, NetworkWeights, psi, psi_partials
from .kinematics import StretchPair, invariants, pullback_point
from .stress import stress, stress_weight_gradient
from .training import TrainConfig, TrainState, fit, loss, loss_gradient

__version__ = "0.1.0"

__all__ = [
    "CATALOG",
    "LEFT_ATRIUM",
    "STANDARD_PROTOCOLS",
    "RIGHT_ATRIUM",
    "Dataset",
    "DiscoveredModel",
    "FitReport",
    "NetworkWeights",
    "ProtocolSpec",
    "StretchPair",
    "TrainConfig",
    "TrainState",
    "fit",
    "generate_fixture",
    "invariants",
    "loss",
    "loss_gradient",
    "standard_protocols",
    "prune",
    "psi",
    "psi_partials",
    "pullback_point",
    "r_squared",
    "read_dataset",
    "render_model",
    "solve_ratio_path",
    "stress",
    "stress_weight_gradient",
    "sweep",
]
