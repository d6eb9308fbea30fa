"""One offline surrogate-assisted run.

LHS offline data -> true fitness of that data -> train surrogate -> evolve on
the surrogate -> one true evaluation of the final best individual.
"""

from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import benchmarks
from .benchmarks import ProblemSpec
from .errors import ContractError, SurrogateError, TrainingDiverged
from .evolution import EaConfig, evolve
from .icn import IcnConfig, train
from .knowledge import resolve_terms, train_augmented
from .rbfn import train_ensemble, train_rbfn
from .sampling import lhs

SURROGATE_KINDS = ("icn", "icn+knowledge", "rbfn", "rbfn-ensemble")


class CountingObjective:
    """Wraps a problem's true function and counts evaluated points."""

    def __init__(self, problem: ProblemSpec):
        self.problem = problem
        self.calls = 0

    def __call__(self, points) -> np.ndarray:
        points = np.atleast_2d(points)
        self.calls += points.shape[0]
        return benchmarks.evaluate_batch(self.problem, points)


def run_seed(master_seed: int, problem: str, dim: int, repeat: int) -> int:
    """Seed of one run, shared by all algorithms so runs pair on the same data."""
    key = [int(master_seed), zlib.crc32(problem.encode()), int(dim), int(repeat)]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass
class RunResult:
    problem: str
    dim: int
    variant: str
    kind: str
    seed: int
    status: str = "ok"
    best: list = field(default_factory=list)
    surrogate_fitness: float = math.nan
    true_fitness: float = math.nan
    n_offline: int = 0
    true_calls: int = 0
    times: dict = field(default_factory=dict)
    loss_curve: list = field(default_factory=list)
    history: list = field(default_factory=list)
    error: str = ""
    master_seed: int | None = None
    repeat: int | None = None

    @property
    def label(self) -> str:
        return ProblemSpec(self.problem, self.dim, self.variant).label

    @property
    def algorithm(self) -> str:
        return self.kind

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        return cls(**data)


def _build(kind, x, y, icn_cfg, terms, ensemble_size, seed):
    """Fit the surrogate; returns (predictor, loss curve)."""
    if kind == "icn":
        res = train(x, y, replace(icn_cfg, seed=seed))
        return res.model, res.curve
    if kind == "icn+knowledge":
        model, res = train_augmented(x, y, replace(icn_cfg, seed=seed), terms)
        return model, res.curve
    if kind == "rbfn":
        return train_rbfn(x, y, seed), None
    if kind == "rbfn-ensemble":
        return train_ensemble(x, y, ensemble_size, seed), None
    raise ContractError(f"unknown surrogate kind {kind!r}; expected one of {SURROGATE_KINDS}")


def run_offline(problem: ProblemSpec, kind: str, icn_cfg: IcnConfig | None = None,
                ea_cfg: EaConfig | None = None, seed: int = 0, knowledge=(),
                ensemble_size: int = 50, n_offline: int | None = None,
                objective: CountingObjective | None = None) -> RunResult:
    """Execute one run; failures are recorded on the result, not raised."""
    if kind not in SURROGATE_KINDS:
        raise ContractError(f"unknown surrogate kind {kind!r}; expected one of {SURROGATE_KINDS}")
    icn_cfg = icn_cfg or IcnConfig()
    ea_cfg = ea_cfg or EaConfig()
    d = problem.dim
    n = n_offline or 11 * d
    terms = resolve_terms(knowledge, d)
    if kind == "icn+knowledge" and not terms:
        raise ContractError("icn+knowledge needs at least one knowledge term")
    objective = objective or CountingObjective(problem)
    data_seed, model_seed, ea_seed = (
        int(s) for s in np.random.SeedSequence(seed).generate_state(3)
    )
    result = RunResult(problem=problem.name, dim=d, variant=problem.variant, kind=kind,
                       seed=seed, n_offline=n)

    t0 = time.perf_counter()
    x = lhs(n, d, data_seed).points
    y = objective(x)
    result.times["sample"] = time.perf_counter() - t0

    phase = "build"
    try:
        t0 = time.perf_counter()
        surrogate, curve = _build(kind, x, y, icn_cfg, terms, ensemble_size, model_seed)
        result.times["build"] = time.perf_counter() - t0
        if curve is not None:
            result.loss_curve = [float(v) for v in curve]
        phase = "evolve"
        t0 = time.perf_counter()
        ea = evolve(surrogate, replace(ea_cfg, seed=ea_seed), x)
        result.times["evolve"] = time.perf_counter() - t0
    except (TrainingDiverged, SurrogateError, FloatingPointError) as exc:
        result.status = "failed"
        result.error = f"{phase}: {exc}"
        result.true_calls = objective.calls
        return result

    result.best = [float(v) for v in ea.best]
    result.surrogate_fitness = ea.best_fitness
    result.history = [float(v) for v in ea.history]
    result.true_fitness = float(objective(ea.best)[0])
    result.true_calls = objective.calls
    return result
