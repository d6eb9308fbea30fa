"""Real-coded EA on [0, 1]^d driven only by a surrogate.

Binary tournament mating, SBX crossover, polynomial mutation, and (mu+lambda)
truncation survival.  Each generation the offspring are scored by the
surrogate in one batch, in offspring-index order; parents keep the scores they
were given when created.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np

from .errors import ContractError, SurrogateError

Surrogate = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EaConfig:
    """EA settings; ``None`` sizes resolve against the problem dimension."""

    pop_size: int | None = None  # 11 * d
    generations: int = 200
    p_crossover: float = 1.0
    p_mutation: float | None = None  # 1 / d
    eta_c: float = 15.0
    eta_m: float = 15.0
    seed: int = 0

    def __post_init__(self):
        if self.pop_size is not None and self.pop_size < 2:
            raise ContractError("pop_size must be >= 2")
        if self.generations < 0:
            raise ContractError("generations must be >= 0")
        for p in (self.p_crossover, self.p_mutation):
            if p is not None and not 0.0 <= p <= 1.0:
                raise ContractError("probabilities must be in [0, 1]")
        if not self.eta_c > 0 or not self.eta_m > 0:
            raise ContractError("distribution indices must be positive")

    def resolved(self, d: int) -> "EaConfig":
        pop = self.pop_size if self.pop_size is not None else 11 * d
        pop += pop % 2
        pm = self.p_mutation if self.p_mutation is not None else 1.0 / d
        return EaConfig(pop, self.generations, self.p_crossover, pm, self.eta_c, self.eta_m, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EaConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ContractError(f"unknown EaConfig keys: {sorted(unknown)}")
        return cls(**data)


def sbx_beta(u: np.ndarray, eta: float) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    low = u <= 0.5
    beta = np.empty_like(u)
    beta[low] = (2.0 * u[low]) ** (1.0 / (eta + 1.0))
    beta[~low] = (1.0 / (2.0 * (1.0 - u[~low]))) ** (1.0 / (eta + 1.0))
    return beta


def sbx(p1, p2, eta_c: float, rng: np.random.Generator, clip: bool = True, u=None):
    """Simulated binary crossover applied to every gene.

    ``u`` overrides the uniform draws (one per gene).
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise ContractError(f"parent shapes differ: {p1.shape} vs {p2.shape}")
    if u is None:
        u = rng.random(p1.shape)
    beta = sbx_beta(u, eta_c)
    c1 = 0.5 * ((1.0 + beta) * p1 + (1.0 - beta) * p2)
    c2 = 0.5 * ((1.0 - beta) * p1 + (1.0 + beta) * p2)
    if clip:
        c1, c2 = np.clip(c1, 0.0, 1.0), np.clip(c2, 0.0, 1.0)
    return c1, c2


def poly_mutate(genome, p_m: float, eta_m: float, rng: np.random.Generator) -> np.ndarray:
    """Bounded polynomial mutation on [0, 1], per gene with probability ``p_m``."""
    x = np.array(genome, dtype=np.float64)
    hit = rng.random(x.shape) < p_m
    u = rng.random(x.shape)
    power = 1.0 / (eta_m + 1.0)
    lo = u < 0.5
    deltaq = np.empty_like(x)
    xy = 1.0 - x[lo]
    val = 2.0 * u[lo] + (1.0 - 2.0 * u[lo]) * xy ** (eta_m + 1.0)
    deltaq[lo] = val**power - 1.0
    xy = x[~lo]
    val = 2.0 * (1.0 - u[~lo]) + 2.0 * (u[~lo] - 0.5) * xy ** (eta_m + 1.0)
    deltaq[~lo] = 1.0 - val**power
    x[hit] += deltaq[hit]
    return np.clip(x, 0.0, 1.0)


def _score(surrogate: Surrogate, pop: np.ndarray, gen: int) -> np.ndarray:
    fit = np.asarray(surrogate(pop), dtype=np.float64).ravel()
    if fit.shape != (pop.shape[0],):
        raise SurrogateError(f"generation {gen}: surrogate returned {fit.shape} for {pop.shape[0]} points")
    if not np.all(np.isfinite(fit)):
        bad = int(np.sum(~np.isfinite(fit)))
        raise SurrogateError(f"generation {gen}: surrogate returned {bad} non-finite values")
    return fit


def _tournament(fit: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.integers(0, fit.size, size=n)
    b = rng.integers(0, fit.size, size=n)
    return np.where(fit[b] < fit[a], b, a)


@dataclass
class EvolveResult:
    best: np.ndarray
    best_fitness: float
    history: np.ndarray  # best surrogate fitness per generation, generation 0 included
    population: np.ndarray
    fitness: np.ndarray


def evolve(surrogate: Surrogate, cfg: EaConfig, init) -> EvolveResult:
    """Minimize ``surrogate`` from an initial population.

    ``init`` is an (n, d) array (or a SampleSet).  Extra rows beyond the
    population size are cut by surrogate rank; missing rows are filled
    uniformly at random.
    """
    init = np.atleast_2d(np.asarray(getattr(init, "points", init), dtype=np.float64))
    d = init.shape[1]
    cfg = cfg.resolved(d)
    if np.any(init < 0) or np.any(init > 1):
        raise ContractError("initial population must lie in [0, 1]^d")
    rng = np.random.default_rng(cfg.seed)
    mu = cfg.pop_size
    pop = init
    if pop.shape[0] < mu:
        pop = np.vstack([pop, rng.random((mu - pop.shape[0], d))])
    fit = _score(surrogate, pop, 0)
    if pop.shape[0] > mu:
        keep = np.argsort(fit, kind="stable")[:mu]
        pop, fit = pop[keep], fit[keep]

    history = [float(fit.min())]
    for gen in range(1, cfg.generations + 1):
        parents = _tournament(fit, mu, rng)
        p1, p2 = pop[parents[0::2]], pop[parents[1::2]]
        cross = rng.random(p1.shape[0]) < cfg.p_crossover
        c1, c2 = sbx(p1, p2, cfg.eta_c, rng)
        c1 = np.where(cross[:, None], c1, p1)
        c2 = np.where(cross[:, None], c2, p2)
        kids = np.empty((mu, d))
        kids[0::2], kids[1::2] = c1, c2
        kids = poly_mutate(kids, cfg.p_mutation, cfg.eta_m, rng)
        kid_fit = _score(surrogate, kids, gen)

        merged = np.vstack([pop, kids])
        merged_fit = np.concatenate([fit, kid_fit])
        keep = np.argsort(merged_fit, kind="stable")[:mu]
        pop, fit = merged[keep], merged_fit[keep]
        history.append(float(fit[0]))

    best = int(np.argmin(fit))
    return EvolveResult(pop[best].copy(), float(fit[best]), np.array(history), pop, fit)
