"""Interpretable Convolutional Network surrogate.

For an input image X with d channels (one per decision variable), the network
predicts, per pixel,

    F(X) = sum_c f_c * prod_l conv(X, K[c, l])

with ``N_c`` channels, ``N_l`` parallel convolution layers, same-size zero
padding and no biases.  Samples are packed into S x S images row-major in
insertion order; trailing pixels of the last image are zero and masked out
of the loss by default.

Fixed "knowledge" terms (see :mod:`icn_saea.knowledge`) enter as extra
product terms with frozen kernels and one learnable coefficient each; this
module handles them as plain arrays so it does not depend on that module.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from .errors import ContractError, TrainingDiverged
from .tensor import _patches, conv_same_batch

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class IcnConfig:
    """Network shape and training settings.

    ``channels=None`` means ``8 * d`` for the problem dimension ``d``.
    The default 1x1 kernel keeps each prediction a function of its own sample;
    with wider kernels it also depends on whichever samples are packed next to
    it.  Targets are divided by their standard deviation; ``target_center``
    also subtracts the mean, which the bias-free network cannot add back.
    """

    n_layers: int = 3
    channels: int | None = None
    kernel_side: int = 1
    image_side: int = 10
    learn_rate: float = 1e-3
    iterations: int = 200
    grad_clip: float = 10.0
    mask_padding: bool = True
    target_standardize: bool = True
    target_center: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_layers < 1:
            raise ContractError("n_layers must be >= 1")
        if self.channels is not None and self.channels < 1:
            raise ContractError("channels must be >= 1")
        if self.kernel_side < 1 or self.kernel_side % 2 == 0:
            raise ContractError("kernel_side must be a positive odd integer")
        if self.image_side < 1:
            raise ContractError("image_side must be >= 1")
        if not self.learn_rate > 0 or not self.grad_clip > 0:
            raise ContractError("learn_rate and grad_clip must be positive")
        if self.iterations < 1:
            raise ContractError("iterations must be >= 1")

    def n_channels(self, d: int) -> int:
        return self.channels if self.channels is not None else 8 * d

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "IcnConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractError(f"unknown IcnConfig keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class IcnParams:
    """Learnable parameters.

    kernels: (N_c, N_l, d, L, L), channel-major; coeffs: (N_c,).
    """

    kernels: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.kernels = np.asarray(self.kernels, dtype=np.float64)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.kernels.ndim != 5:
            raise ContractError(f"kernels must be 5-d (N_c, N_l, d, L, L), got {self.kernels.shape}")
        if self.coeffs.shape != (self.kernels.shape[0],):
            raise ContractError("coeffs length must equal the number of channels")

    @property
    def n_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def n_layers(self) -> int:
        return self.kernels.shape[1]

    @property
    def depth(self) -> int:
        return self.kernels.shape[2]

    @property
    def kernel_side(self) -> int:
        return self.kernels.shape[3]

    def copy(self) -> "IcnParams":
        return IcnParams(self.kernels.copy(), self.coeffs.copy())


@dataclass(frozen=True)
class ImageBatch:
    images: np.ndarray  # (n_images, d, S, S)
    mask: np.ndarray  # (n_images, S, S) bool, True for real samples
    order: np.ndarray  # (n_images, S, S) sample index, -1 on padding
    n_samples: int

    @property
    def channels(self) -> int:
        return self.images.shape[1]

    def pixels(self, values: np.ndarray) -> np.ndarray:
        """Scatter per-sample values onto the pixel grid (zeros on padding)."""
        out = np.zeros(self.mask.shape)
        out.reshape(-1)[: self.n_samples] = values
        return out

    def samples(self, grid: np.ndarray) -> np.ndarray:
        """Gather per-pixel values back into sample order."""
        return grid.reshape(-1)[: self.n_samples].copy()


@dataclass(frozen=True)
class TargetScaler:
    mean: float = 0.0
    std: float = 1.0

    @classmethod
    def fit(cls, y: np.ndarray, standardize: bool = True, center: bool = False) -> "TargetScaler":
        """Scale by the target std; a constant target is absorbed into ``mean``."""
        if not standardize:
            return cls()
        std = float(np.std(y))
        if not std > 0 or not math.isfinite(std):
            return cls(float(np.mean(y)), 1.0)
        return cls(float(np.mean(y)) if center else 0.0, std)

    def transform(self, y):
        return (np.asarray(y, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z):
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


def pack_samples(samples, cfg: IcnConfig | int) -> ImageBatch:
    """Lay samples out as pixels, one channel per variable.

    Pixel ``(img, r, c)`` holds sample ``img*S*S + r*S + c``.
    """
    side = cfg if isinstance(cfg, int) else cfg.image_side
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    n, d = x.shape
    if n < 1:
        raise ContractError("cannot pack an empty sample set")
    per = side * side
    n_img = -(-n // per)
    flat = np.zeros((n_img * per, d))
    flat[:n] = x
    images = flat.reshape(n_img, side, side, d).transpose(0, 3, 1, 2).copy()
    order = np.full(n_img * per, -1, dtype=np.int64)
    order[:n] = np.arange(n)
    order = order.reshape(n_img, side, side)
    return ImageBatch(images=images, mask=order >= 0, order=order, n_samples=n)


def init_params(d: int, cfg: IcnConfig, rng: np.random.Generator) -> IcnParams:
    nc, nl, side = cfg.n_channels(d), cfg.n_layers, cfg.kernel_side
    k_bound = 1.0 / math.sqrt(d * side * side)
    kernels = rng.uniform(-k_bound, k_bound, size=(nc, nl, d, side, side))
    coeffs = rng.uniform(-1.0 / math.sqrt(nc), 1.0 / math.sqrt(nc), size=nc)
    return IcnParams(kernels, coeffs)


@dataclass
class _Terms:
    """Frozen product terms with learnable scalar coefficients."""

    kernels: list  # each (n_layers_t, d, L, L)
    coeffs: np.ndarray

    @classmethod
    def empty(cls) -> "_Terms":
        return cls([], np.zeros(0))

    def __len__(self):
        return len(self.kernels)


def _check_depth(params: IcnParams, batch: ImageBatch):
    if params.depth != batch.channels:
        raise ContractError(
            f"kernel depth {params.depth} does not match {batch.channels} input channels"
        )


# Internally pixels are flattened in (image, row, col) order, which is also
# sample order.  All layers' feature maps come from one matmul and live in a
# (pixel, layer, channel) array.

def _stacked_kernels(params: IcnParams) -> np.ndarray:
    """Kernels as one (d*L*L, N_l*N_c) matrix, layer-major columns."""
    nc, nl = params.kernels.shape[:2]
    return params.kernels.reshape(nc, nl, -1).transpose(2, 1, 0).reshape(-1, nl * nc)


def _layer_maps(params: IcnParams, cols: np.ndarray) -> np.ndarray:
    """conv(X, K[c, l]) at every pixel, shape (P, N_l, N_c)."""
    nc, nl = params.kernels.shape[:2]
    return (cols @ _stacked_kernels(params)).reshape(-1, nl, nc)


def _products(maps: np.ndarray) -> np.ndarray:
    out = maps[:, 0].copy()
    for l in range(1, maps.shape[1]):
        out *= maps[:, l]
    return out


def _excl_products(maps: np.ndarray) -> np.ndarray:
    """Product over all layers but one, for each layer, without division."""
    nl = maps.shape[1]
    out = np.empty_like(maps)
    out[:, 0] = 1.0
    for l in range(1, nl):
        np.multiply(out[:, l - 1], maps[:, l - 1], out=out[:, l])
    if nl > 1:
        suffix = maps[:, nl - 1].copy()
        for l in range(nl - 2, -1, -1):
            out[:, l] *= suffix
            if l:
                suffix *= maps[:, l]
    return out


def _term_outputs(terms: _Terms, batch: ImageBatch) -> np.ndarray:
    """Unit-coefficient output of every frozen term: (n_terms, P)."""
    out = np.empty((len(terms), batch.mask.size))
    for i, k in enumerate(terms.kernels):
        maps = conv_same_batch(batch.images, k)
        out[i] = np.prod(maps, axis=1).ravel()
    return out


def forward(params: IcnParams, batch: ImageBatch) -> np.ndarray:
    """Per-pixel predictions, shape (n_images, S, S), in model units."""
    _check_depth(params, batch)
    cols = _patches(batch.images, params.kernel_side)
    pred = _products(_layer_maps(params, cols)) @ params.coeffs
    return pred.reshape(batch.mask.shape)


def _loss_weights(mask: np.ndarray, use_mask: bool) -> np.ndarray:
    w = mask.astype(np.float64) if use_mask else np.ones(mask.shape)
    count = w.sum()
    if count == 0:
        raise ContractError("loss needs at least one real pixel")
    return w / count


def loss_masked_mse(pred, targets, mask, mask_padding: bool = True) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != targets.shape or pred.shape != mask.shape:
        raise ContractError(f"shape mismatch: {pred.shape}, {targets.shape}, {mask.shape}")
    w = _loss_weights(mask, mask_padding)
    return float(np.sum(w * (pred - targets) ** 2))


def _loss_and_grads(params: IcnParams, terms: _Terms, cols: np.ndarray, targets: np.ndarray,
                    weights: np.ndarray, term_out: np.ndarray):
    """Loss and gradients on flattened pixels (targets, weights: (P,))."""
    maps = _layer_maps(params, cols)
    prods = _products(maps)
    pred = prods @ params.coeffs
    if len(terms):
        pred += terms.coeffs @ term_out
    resid = pred - targets
    loss = float(weights @ resid**2)
    dpred = 2.0 * weights * resid
    g_coeffs = dpred @ prods
    others = _excl_products(maps)
    others *= (dpred[:, None] * params.coeffs)[:, None, :]
    nc, nl = params.kernels.shape[:2]
    g_stack = cols.T @ others.reshape(others.shape[0], -1)
    g_kernels = g_stack.reshape(-1, nl, nc).transpose(2, 1, 0).reshape(params.kernels.shape)
    g_terms = term_out @ dpred if len(terms) else np.zeros(0)
    return loss, pred, IcnParams(np.ascontiguousarray(g_kernels), g_coeffs), g_terms


def gradients(params: IcnParams, batch: ImageBatch, targets, mask=None,
              mask_padding: bool = True) -> IcnParams:
    """d(masked MSE)/d(params), same structure as ``params``."""
    _check_depth(params, batch)
    mask = batch.mask if mask is None else np.asarray(mask, dtype=bool)
    targets = np.asarray(targets, dtype=np.float64).ravel()
    weights = _loss_weights(mask, mask_padding).ravel()
    cols = _patches(batch.images, params.kernel_side)
    _, _, grads, _ = _loss_and_grads(params, _Terms.empty(), cols, targets, weights,
                                     np.zeros((0, targets.size)))
    return grads


class _Adam:
    def __init__(self, shapes):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, values, grads, lr):
        self.t += 1
        c1 = 1.0 - _ADAM_BETA1**self.t
        c2 = 1.0 - _ADAM_BETA2**self.t
        for val, g, m, v in zip(values, grads, self.m, self.v):
            m *= _ADAM_BETA1
            m += (1.0 - _ADAM_BETA1) * g
            v *= _ADAM_BETA2
            v += (1.0 - _ADAM_BETA2) * g * g
            val -= lr * (m / c1) / (np.sqrt(v / c2) + _ADAM_EPS)


@dataclass
class IcnModel:
    """A trained surrogate: config, parameters, target scaler and frozen terms."""

    cfg: IcnConfig
    params: IcnParams
    scaler: TargetScaler
    term_kernels: list = field(default_factory=list)
    term_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dim(self) -> int:
        return self.params.depth

    def _terms(self) -> _Terms:
        return _Terms(self.term_kernels, np.asarray(self.term_coeffs, dtype=np.float64))

    def predict_batch(self, batch: ImageBatch) -> np.ndarray:
        """Per-pixel predictions in model (standardized) units."""
        pred = forward(self.params, batch)
        terms = self._terms()
        if len(terms):
            pred = pred + (terms.coeffs @ _term_outputs(terms, batch)).reshape(pred.shape)
        return pred

    def predict(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if points.shape[1] != self.dim:
            raise ContractError(f"model expects {self.dim} variables, got {points.shape[1]}")
        batch = pack_samples(points, self.cfg)
        return self.scaler.inverse(batch.samples(self.predict_batch(batch)))

    __call__ = predict

    def to_dict(self) -> dict:
        nc, nl, d, side, _ = self.params.kernels.shape
        return {
            "format": "icn-saea/icn-model",
            "version": 1,
            "cfg": self.cfg.to_dict(),
            "shape": {"channels": nc, "layers": nl, "depth": d, "kernel_side": side},
            "kernel_layout": "channel, layer, depth, row, col (row-major)",
            "kernels": self.params.kernels.ravel().tolist(),
            "coeffs": self.params.coeffs.tolist(),
            "scaler": {"mean": self.scaler.mean, "std": self.scaler.std},
            "terms": [
                {"layout": "layer, depth, row, col (row-major)",
                 "layers": int(k.shape[0]),
                 "kernels": np.asarray(k).ravel().tolist(),
                 "coeff": float(c)}
                for k, c in zip(self.term_kernels, self.term_coeffs)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IcnModel":
        shp = data["shape"]
        nc, nl, d, side = shp["channels"], shp["layers"], shp["depth"], shp["kernel_side"]
        kernels = np.array(data["kernels"], dtype=np.float64).reshape(nc, nl, d, side, side)
        terms = data.get("terms", [])
        return cls(
            cfg=IcnConfig.from_dict(data["cfg"]),
            params=IcnParams(kernels, np.array(data["coeffs"], dtype=np.float64)),
            scaler=TargetScaler(**data["scaler"]),
            term_kernels=[np.array(t["kernels"], dtype=np.float64).reshape(t["layers"], d, side, side)
                          for t in terms],
            term_coeffs=np.array([t["coeff"] for t in terms], dtype=np.float64),
        )


@dataclass
class TrainResult:
    model: IcnModel
    curve: np.ndarray  # train RMSE per iteration, in target units
    test_curve: np.ndarray | None = None

    @property
    def params(self) -> IcnParams:
        return self.model.params

    @property
    def scaler(self) -> TargetScaler:
        return self.model.scaler

    def __iter__(self):
        # allows ``params, scaler, curve = train(...)``
        return iter((self.model.params, self.model.scaler, self.curve))


def _rmse(pred, targets, weights, scale):
    return scale * math.sqrt(float(weights @ (pred - targets) ** 2))


def fit(x, y, cfg: IcnConfig, term_kernels: Sequence[np.ndarray] = (),
        test: tuple | None = None) -> TrainResult:
    """Full-batch Adam on the masked MSE with global-norm gradient clipping.

    Targets are standardized when ``cfg.target_standardize``; padding pixels
    carry a zero target in standardized units.  The curve reports RMSE in
    the original target units, computed at each iteration before its update.
    ``test=(x_test, y_test)`` adds a held-out curve, packed on its own.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] < 1 or x.shape[0] != y.size:
        raise ContractError(f"need matching non-empty data, got {x.shape[0]} points, {y.size} targets")
    if np.any(x < 0) or np.any(x > 1):
        raise ContractError("training points must lie in [0, 1]^d")
    d = x.shape[1]
    for k in term_kernels:
        if k.ndim != 4 or k.shape[1] != d or k.shape[2] != cfg.kernel_side:
            raise ContractError(f"knowledge kernels must be (layers, {d}, L, L) with L = kernel_side")

    rng = np.random.default_rng(cfg.seed)
    params = init_params(d, cfg, rng)
    terms = _Terms([np.asarray(k, dtype=np.float64) for k in term_kernels],
                   np.ones(len(term_kernels)))
    scaler = TargetScaler.fit(y, cfg.target_standardize, cfg.target_center)

    batch = pack_samples(x, cfg)
    targets = batch.pixels(scaler.transform(y)).ravel()
    weights = _loss_weights(batch.mask, cfg.mask_padding).ravel()
    cols = _patches(batch.images, cfg.kernel_side)
    term_out = _term_outputs(terms, batch)

    if test is not None:
        tbatch = pack_samples(test[0], cfg)
        tcols = _patches(tbatch.images, cfg.kernel_side)
        ttargets = tbatch.pixels(scaler.transform(np.asarray(test[1]).ravel())).ravel()
        tweights = _loss_weights(tbatch.mask, cfg.mask_padding).ravel()
        tterm_out = _term_outputs(terms, tbatch)
        test_curve = np.empty(cfg.iterations)
    else:
        test_curve = None

    opt = _Adam([params.kernels.shape, params.coeffs.shape, terms.coeffs.shape])
    curve = np.empty(cfg.iterations)
    for it in range(cfg.iterations):
        # overflow is detected explicitly below and reported as divergence
        with np.errstate(over="ignore", invalid="ignore"):
            loss, _, grads, g_terms = _loss_and_grads(params, terms, cols, targets, weights, term_out)
        if not math.isfinite(loss):
            raise TrainingDiverged(it)
        curve[it] = scaler.std * math.sqrt(loss)
        if test_curve is not None:
            tpred = _products(_layer_maps(params, tcols)) @ params.coeffs
            if len(terms):
                tpred += terms.coeffs @ tterm_out
            test_curve[it] = _rmse(tpred, ttargets, tweights, scaler.std)

        gs = [grads.kernels, grads.coeffs, g_terms]
        norm = math.sqrt(sum(float(np.sum(g * g)) for g in gs))
        if not math.isfinite(norm):
            raise TrainingDiverged(it, f"non-finite gradient at iteration {it}")
        if norm > cfg.grad_clip:
            gs = [g * (cfg.grad_clip / norm) for g in gs]
        opt.step([params.kernels, params.coeffs, terms.coeffs], gs, cfg.learn_rate)

    model = IcnModel(cfg=replace(cfg, channels=params.n_channels), params=params, scaler=scaler,
                     term_kernels=terms.kernels, term_coeffs=terms.coeffs)
    return TrainResult(model=model, curve=curve, test_curve=test_curve)


def train(x, y, cfg: IcnConfig | None = None, test: tuple | None = None) -> TrainResult:
    """Train a plain ICN (no knowledge terms) on offline data."""
    return fit(x, y, cfg or IcnConfig(), (), test)


def predict(params: IcnParams, scaler: TargetScaler, cfg: IcnConfig, points) -> np.ndarray:
    return IcnModel(cfg, params, scaler).predict(points)
