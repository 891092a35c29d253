"""Point-wise linear classifiers: neural nets that emit, for every input,
the weights of a linear model that makes the prediction."""

from .autodiff import Tensor, backward
from .baselines import DeepClassifier, LogisticModel
from .bundle import ModelBundle, load_bundle
from .datasets import (Dataset, apply_standardization, load_csv, make_circles,
                       make_moons, save_csv, split, standardize)
from .errors import (ConfigError, DataError, SchemaError, ShapeError,
                     TrainingAbort)
from .explain import (angle_grid, boundary_grid, explain_batch,
                      global_importance, rho_scatter)
from .pwl import HeadConfig, PwlModel
from .training import TrainConfig, TrainReport, evaluate, fit

__version__ = "0.1.0"

__all__ = [
    "Tensor", "backward",
    "DeepClassifier", "LogisticModel",
    "ModelBundle", "load_bundle",
    "Dataset", "apply_standardization", "load_csv", "make_circles",
    "make_moons", "save_csv", "split", "standardize",
    "ConfigError", "DataError", "SchemaError", "ShapeError", "TrainingAbort",
    "angle_grid", "boundary_grid", "explain_batch", "global_importance",
    "rho_scatter",
    "HeadConfig", "PwlModel",
    "TrainConfig", "TrainReport", "evaluate", "fit",
]
