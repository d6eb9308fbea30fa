"""Analytic prior knowledge compiled into frozen ICN kernels.

A term is a product of linear forms of the input channels.  Each linear form
becomes an L x L kernel whose only non-zero taps sit at the center, so the
feature map at a pixel is ``sum_j w_j * x_j`` of that pixel's own sample.
Multiplying the layers gives the monomial; a learnable coefficient scales it,
and the result is added to the base network's output.

Built-in Rosenbrock knowledge:

* weak: ``sum_i x_{i+1}^2``
* strong: ``sum_i (x_{i+1} - x_i)^2`` (two identical difference forms per i),
  or the one-layer ``sum_i (x_{i+1} - x_i)`` with ``squared=False``
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .icn import IcnConfig, IcnModel, TrainResult, fit


@dataclass(frozen=True)
class LinearFormSpec:
    """Per-channel center-tap weights of one frozen kernel."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in np.asarray(self.weights, dtype=np.float64).ravel())
        if not w or not any(w):
            raise ContractError("a linear form needs at least one non-zero weight")
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return len(self.weights)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ np.asarray(self.weights)


@dataclass
class KnowledgeTerm:
    layers: tuple
    coeff: float = 1.0
    name: str = ""

    def __post_init__(self):
        self.layers = tuple(l if isinstance(l, LinearFormSpec) else LinearFormSpec(l)
                            for l in self.layers)
        if not self.layers:
            raise ContractError("a knowledge term needs at least one layer")
        if len({l.d for l in self.layers}) != 1:
            raise ContractError("all layers of a term must have the same length")

    @property
    def d(self) -> int:
        return self.layers[0].d

    def formula(self, x) -> np.ndarray:
        """Direct evaluation of the monomial at unit coefficient."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.ones(x.shape[0])
        for layer in self.layers:
            out = out * layer(x)
        return out

    def to_dict(self) -> dict:
        return {"name": self.name, "layers": [list(l.weights) for l in self.layers],
                "coeff": self.coeff}

    @classmethod
    def from_dict(cls, data: dict) -> "KnowledgeTerm":
        unknown = set(data) - {"name", "layers", "coeff"}
        if unknown:
            raise ContractError(f"unknown knowledge term keys: {sorted(unknown)}")
        return cls(layers=tuple(data["layers"]), coeff=float(data.get("coeff", 1.0)),
                   name=data.get("name", ""))


def compile_term(term: KnowledgeTerm, d: int, side: int = 3) -> np.ndarray:
    """Frozen kernels of a term, shape (n_layers, d, side, side)."""
    if term.d != d:
        raise ContractError(f"term has {term.d} weights per layer, problem has d={d}")
    if side < 1 or side % 2 == 0:
        raise ContractError("kernel side must be a positive odd integer")
    out = np.zeros((len(term.layers), d, side, side))
    for i, layer in enumerate(term.layers):
        out[i, :, side // 2, side // 2] = layer.weights
    return out


def _one_hot(d, i, value=1.0):
    w = np.zeros(d)
    w[i] = value
    return w


def weak_rosenbrock_terms(d: int) -> list[KnowledgeTerm]:
    """``x_{i+1}^2`` for i = 1..d-1, one two-layer term each."""
    if d < 2:
        raise ContractError("Rosenbrock knowledge needs d >= 2")
    return [KnowledgeTerm((_one_hot(d, i + 1),) * 2, name=f"weak[{i}]") for i in range(d - 1)]


def strong_rosenbrock_terms(d: int, squared: bool = True) -> list[KnowledgeTerm]:
    """``(x_{i+1} - x_i)^2`` per i, or ``(x_{i+1} - x_i)`` when not squared."""
    if d < 2:
        raise ContractError("Rosenbrock knowledge needs d >= 2")
    terms = []
    for i in range(d - 1):
        diff = _one_hot(d, i + 1) - _one_hot(d, i)
        layers = (diff, diff) if squared else (diff,)
        terms.append(KnowledgeTerm(layers, name=f"strong[{i}]" if squared else f"strong-literal[{i}]"))
    return terms


BUILTIN_TERMS = {
    "weak-rosenbrock": weak_rosenbrock_terms,
    "strong-rosenbrock": strong_rosenbrock_terms,
    "strong-rosenbrock-literal": lambda d: strong_rosenbrock_terms(d, squared=False),
}


def builtin_terms(name: str, d: int) -> list[KnowledgeTerm]:
    try:
        return BUILTIN_TERMS[name](d)
    except KeyError:
        raise ContractError(f"unknown knowledge set {name!r}; known: {sorted(BUILTIN_TERMS)}") from None


def resolve_terms(entries, d: int) -> list[KnowledgeTerm]:
    """Config entries (built-in names or term dicts) to a flat term list."""
    terms = []
    for entry in entries or ():
        if isinstance(entry, str):
            terms.extend(builtin_terms(entry, d))
        elif isinstance(entry, KnowledgeTerm):
            terms.append(entry)
        else:
            terms.append(KnowledgeTerm.from_dict(entry))
    return terms


@dataclass
class AugmentedIcn:
    """A base ICN plus knowledge terms; prediction is their per-pixel sum."""

    model: IcnModel
    terms: list = field(default_factory=list)

    def __post_init__(self):
        # keep term coefficients in sync with the trained model
        for term, c in zip(self.terms, self.model.term_coeffs):
            term.coeff = float(c)

    @property
    def base(self) -> IcnModel:
        return IcnModel(self.model.cfg, self.model.params, self.model.scaler)

    def predict(self, points) -> np.ndarray:
        return self.model.predict(points)

    __call__ = predict

    def to_dict(self) -> dict:
        data = self.model.to_dict()
        data["knowledge"] = [t.to_dict() for t in self.terms]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentedIcn":
        return cls(IcnModel.from_dict(data),
                   [KnowledgeTerm.from_dict(t) for t in data.get("knowledge", [])])


def build_augmented(model: IcnModel, terms) -> AugmentedIcn:
    """Attach terms to an existing model (coefficients from the terms)."""
    side = model.cfg.kernel_side
    model.term_kernels = [compile_term(t, model.dim, side) for t in terms]
    model.term_coeffs = np.array([t.coeff for t in terms], dtype=np.float64)
    return AugmentedIcn(model, list(terms))


def train_augmented(x, y, cfg: IcnConfig | None = None, terms=(),
                    test: tuple | None = None) -> tuple[AugmentedIcn, TrainResult]:
    """Jointly train the base network and the term coefficients.

    Term kernels never change; each term coefficient starts at 1.
    """
    cfg = cfg or IcnConfig()
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    terms = [KnowledgeTerm(t.layers, t.coeff, t.name) for t in terms]
    kernels = [compile_term(t, x.shape[1], cfg.kernel_side) for t in terms]
    result = fit(x, y, cfg, kernels, test)
    return AugmentedIcn(result.model, terms), result
