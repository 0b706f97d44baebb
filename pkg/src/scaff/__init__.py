"""Fair tree ensembles with the SCAFF splitting criterion.

SCAFF scores a candidate split by ``(1 - theta) * AUC_Y - theta * AUC_S``,
where ``AUC_Y`` is the ROC-AUC of the induced node probabilities against
the class label and ``AUC_S`` is the worst one-vs-rest sensitive AUC.
"""
from .criteria import SplitCriterion, parse_criterion
from .dataset import DataConfig, Dataset, SensitiveView, load_csv
from .ensemble import ForestConfig, ForestModel, fit
from .errors import ConfigError, DataError, ScaffError, TrainingError
from .kernels import BACKEND
from .tree import TreeConfig

__all__ = [
    "BACKEND",
    "ConfigError",
    "DataConfig",
    "DataError",
    "Dataset",
    "ForestConfig",
    "ForestModel",
    "ScaffError",
    "SensitiveView",
    "SplitCriterion",
    "TrainingError",
    "TreeConfig",
    "fit",
    "load_csv",
    "parse_criterion",
]

__version__ = "0.1.0"
