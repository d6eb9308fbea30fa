"""Gaussian RBF network baselines.

Centers come from k-means with ``ceil(sqrt(N))`` clusters, one shared width
equal to twice the mean pairwise center distance, and output weights (plus a
bias) from the minimum-norm least-squares (pseudo-inverse) solution.  The ensemble is a mean
of RBFNs fitted on bootstrap resamples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import ContractError

KMEANS_MAX_ITER = 100


def kmeans(points, k: int, seed: int, max_iter: int = KMEANS_MAX_ITER) -> np.ndarray:
    """Lloyd's algorithm from k distinct random data points.

    Empty clusters are reseeded at the point farthest from its center.
    """
    x = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ContractError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centers = x[rng.choice(n, size=k, replace=False)].copy()
    labels = None
    for _ in range(max_iter):
        dist = cdist(x, centers, "sqeuclidean")
        new_labels = np.argmin(dist, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        if np.any(counts == 0):
            own = dist[np.arange(n), new_labels]
            for c in np.flatnonzero(counts == 0):
                far = int(np.argmax(own))
                new_labels[far] = c
                own[far] = -1.0
            counts = np.bincount(new_labels, minlength=k)
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        centers = sums / counts[:, None]
    return centers


def n_centers(n: int) -> int:
    return math.ceil(math.sqrt(n))


def spread_of(centers: np.ndarray) -> float:
    if centers.shape[0] < 2:
        raise ContractError("width rule needs at least two centers")
    return 2.0 * float(np.mean(pdist(centers)))


@dataclass
class RbfnModel:
    centers: np.ndarray
    spread: float
    weights: np.ndarray
    bias: float

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def design(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != self.dim:
            raise ContractError(f"model expects {self.dim} variables, got {points.shape[1]}")
        return np.exp(-cdist(points, self.centers, "sqeuclidean") / (2.0 * self.spread**2))

    def predict(self, points) -> np.ndarray:
        return self.design(points) @ self.weights + self.bias

    __call__ = predict

    def to_dict(self) -> dict:
        return {
            "format": "icn-saea/rbfn-model",
            "version": 1,
            "centers_layout": "center, variable (row-major)",
            "shape": list(self.centers.shape),
            "centers": self.centers.ravel().tolist(),
            "spread": self.spread,
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RbfnModel":
        return cls(np.array(data["centers"], dtype=np.float64).reshape(data["shape"]),
                   float(data["spread"]), np.array(data["weights"], dtype=np.float64),
                   float(data["bias"]))


def train_rbfn(x, y, seed: int, n_centers_override: int | None = None) -> RbfnModel:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    if n < 2 or y.size != n:
        raise ContractError(f"need at least 2 points with matching targets, got {n}/{y.size}")
    if np.all(x == x[0]):
        raise ContractError("degenerate data: all training points are identical")
    k = n_centers_override or n_centers(n)
    centers = kmeans(x, k, seed)
    spread = spread_of(centers)
    if not spread > 0:
        raise ContractError("degenerate data: all centers coincide")
    model = RbfnModel(centers, spread, np.zeros(k), 0.0)
    phi = np.hstack([model.design(x), np.ones((n, 1))])
    # SVD-based solve: singular values below eps * max are truncated
    sol = np.linalg.lstsq(phi, y, rcond=None)[0]
    model.weights = sol[:k]
    model.bias = float(sol[k])
    return model


def predict_rbfn(model: RbfnModel, points) -> np.ndarray:
    return model.predict(points)


@dataclass
class EnsembleModel:
    members: list

    def predict(self, points) -> np.ndarray:
        return np.mean([m.predict(points) for m in self.members], axis=0)

    __call__ = predict

    def member_predictions(self, points) -> np.ndarray:
        return np.array([m.predict(points) for m in self.members])

    def to_dict(self) -> dict:
        return {"format": "icn-saea/rbfn-ensemble", "version": 1, "aggregation": "mean",
                "members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleModel":
        return cls([RbfnModel.from_dict(m) for m in data["members"]])


def train_ensemble(x, y, m: int, seed: int, bootstrap: bool = True) -> EnsembleModel:
    """``m`` RBFNs on bootstrap resamples (or the data as-is with ``bootstrap=False``)."""
    if m < 1:
        raise ContractError("ensemble needs at least one member")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = x.shape[0]
    seeds = np.random.SeedSequence(seed).generate_state(2 * m)
    members = []
    for i in range(m):
        if bootstrap:
            idx = np.random.default_rng(seeds[2 * i]).integers(0, n, size=n)
        else:
            idx = np.arange(n)
        members.append(train_rbfn(x[idx], y[idx], int(seeds[2 * i + 1])))
    return EnsembleModel(members)
