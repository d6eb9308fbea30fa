"""Test problems on the unit box [0, 1]^d.

All functions are evaluated directly on [0, 1]^d with no remapping to their
usual domains.  Rosenbrock defaults to the canonical squared valley term;
``variant="literal"`` gives the unsquared form
``sum (1 - x_i)^2 + 100 (x_{i+1} - x_i^2)``, which can go negative on the box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

PROBLEMS = ("Ellipsoid", "Rosenbrock", "Ackley", "Griewank", "Rastrigin")
STUDY_DIMS = (10, 30, 50, 100)
ROSENBROCK_VARIANTS = ("canonical", "literal")


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    dim: int
    variant: str = "canonical"

    def __post_init__(self):
        name = canonical_name(self.name)
        object.__setattr__(self, "name", name)
        if int(self.dim) < 1:
            raise ContractError(f"dim must be positive, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.variant not in ROSENBROCK_VARIANTS:
            raise ContractError(f"unknown variant {self.variant!r}")
        if self.variant != "canonical" and name != "Rosenbrock":
            raise ContractError("only Rosenbrock has a literal variant")

    @property
    def lower(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def upper(self) -> np.ndarray:
        return np.ones(self.dim)

    @property
    def optimum(self) -> np.ndarray:
        if self.name == "Rosenbrock":
            return np.ones(self.dim)
        return np.zeros(self.dim)

    @property
    def label(self) -> str:
        suffix = "-literal" if self.variant == "literal" else ""
        return f"{self.name}{suffix}-{self.dim}d"


def canonical_name(name: str) -> str:
    for p in PROBLEMS:
        if p.lower() == str(name).lower():
            return p
    raise ContractError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEMS)}")


def ellipsoid(x: np.ndarray) -> np.ndarray:
    i = np.arange(1, x.shape[-1] + 1)
    return np.sum(i * x**2, axis=-1)


def rosenbrock(x: np.ndarray) -> np.ndarray:
    a, b = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (b - a**2) ** 2 + (1.0 - a) ** 2, axis=-1)


def rosenbrock_literal(x: np.ndarray) -> np.ndarray:
    a, b = x[..., :-1], x[..., 1:]
    return np.sum((1.0 - a) ** 2 + 100.0 * (b - a**2), axis=-1)


def ackley(x: np.ndarray, a: float = 20.0, b: float = 0.2, c: float = 2 * np.pi) -> np.ndarray:
    d = x.shape[-1]
    s1 = np.sqrt(np.sum(x**2, axis=-1) / d)
    s2 = np.sum(np.cos(c * x), axis=-1) / d
    val = -a * np.exp(-b * s1) - np.exp(s2) + a + np.e
    # exp(1) + e does not cancel to exactly zero in floating point
    return np.maximum(val, 0.0)


def griewank(x: np.ndarray) -> np.ndarray:
    i = np.arange(1, x.shape[-1] + 1)
    return 1.0 + np.sum(x**2, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=-1)


def rastrigin(x: np.ndarray) -> np.ndarray:
    d = x.shape[-1]
    return 10.0 * d + np.sum(x**2 - 10.0 * np.cos(2 * np.pi * x), axis=-1)


_FUNCS = {
    "Ellipsoid": ellipsoid,
    "Rosenbrock": rosenbrock,
    "Ackley": ackley,
    "Griewank": griewank,
    "Rastrigin": rastrigin,
}


def _check(problem: ProblemSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != problem.dim:
        raise ContractError(f"{problem.label} expects {problem.dim} variables, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ContractError(f"{problem.label}: point outside [0, 1]^{problem.dim}")
    return x


def evaluate(problem: ProblemSpec, x) -> float:
    """True fitness of one point (lower is better)."""
    x = _check(problem, x)
    if x.ndim != 1:
        raise ContractError("evaluate takes a single point; use evaluate_batch")
    return float(evaluate_batch(problem, x[None])[0])


def evaluate_batch(problem: ProblemSpec, points) -> np.ndarray:
    points = _check(problem, np.atleast_2d(points))
    if problem.name == "Rosenbrock" and problem.variant == "literal":
        return rosenbrock_literal(points)
    return _FUNCS[problem.name](points)
