"""Interpretable Convolutional Network surrogates for offline surrogate-assisted evolution."""

from .benchmarks import ProblemSpec, evaluate, evaluate_batch
from .errors import ContractError, SurrogateError, TrainingDiverged
from .evolution import EaConfig, evolve
from .icn import IcnConfig, IcnModel, IcnParams, pack_samples, train
from .knowledge import KnowledgeTerm, train_augmented
from .pipeline import RunResult, run_offline
from .rbfn import train_ensemble, train_rbfn
from .sampling import lhs
from .stats import summarize, wilcoxon_signed_rank

__version__ = "0.1.0"
