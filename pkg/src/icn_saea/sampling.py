"""Latin hypercube sampling on [0, 1)^d."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def lhs(n: int, d: int, seed: int) -> SampleSet:
    """One point per stratum ``[k/n, (k+1)/n)`` in every dimension.

    Each column is an independent permutation of the strata, and the point is
    placed uniformly at random inside its stratum.
    """
    if n < 1 or d < 1:
        raise ContractError(f"lhs needs n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    strata = np.argsort(rng.random((n, d)), axis=0)
    jitter = rng.random((n, d))
    points = (strata + jitter) / n
    # (k + u) / n can round up to (k + 1) / n when u is within an ulp of 1
    upper = np.nextafter((strata + 1) / n, 0.0)
    points = np.minimum(points, upper)
    return SampleSet(points=points, seed=seed)
