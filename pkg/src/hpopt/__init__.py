"""Sequential model-based hyperparameter optimization with GP surrogates."""

__version__ = "0.1.0"

from .acq_optimizer import AcqOptConfig, maximize
from .acquisition import AcquisitionConfig, PosteriorAt
from .assistants import ExperimentAssistant, LabAssistant, init_experiment
from .experiment import Candidate, CandidateStatus, Experiment
from .gp import GPFitConfig, GPModel, Kernel
from .optimizers import BayesianOptimizer, RandomSearch, make_optimizer
from .params import (
    AsymptoticNumericParamDef,
    CustomNumericParamDef,
    MinMaxNumericParamDef,
    NominalParamDef,
    OrdinalParamDef,
)

__all__ = [
    "AcqOptConfig",
    "AcquisitionConfig",
    "AsymptoticNumericParamDef",
    "BayesianOptimizer",
    "Candidate",
    "CandidateStatus",
    "CustomNumericParamDef",
    "Experiment",
    "ExperimentAssistant",
    "GPFitConfig",
    "GPModel",
    "Kernel",
    "LabAssistant",
    "MinMaxNumericParamDef",
    "NominalParamDef",
    "OrdinalParamDef",
    "PosteriorAt",
    "RandomSearch",
    "init_experiment",
    "make_optimizer",
    "maximize",
]
