"""
Instance-dependent mixture weights.

A small ReLU network maps instance features to a point on the
(M-1)-simplex (softmax output).  It is trained with Adam on a proper scoring
rule plus ``gamma`` times a calibration-error estimate of the combined
predictor, with early stopping on a held-out tail of the optimisation data.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .estimators import CalEstimatorKind, Kind
from .simplex import (
    CredalDataset,
    DimensionError,
    DomainError,
    NumericError,
    RngStream,
    as_generator,
    combine_dataset,
)

FORMAT_VERSION = 1


class UnsupportedError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------
@dataclass
class WeightNet:
    """Feed-forward network ``features -> simplex`` with ReLU hidden layers.

    Inputs are standardized with ``input_shift`` / ``input_scale`` (fixed at
    training time) before the first affine layer.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_shift: np.ndarray
    input_scale: np.ndarray
    history: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def initialize(cls, layer_sizes, rng, input_shift=None, input_scale=None) -> "WeightNet":
        """Fan-in scaled uniform initialization; the output layer starts at zero
        so the untrained network returns uniform weights (the mean predictor)."""
        sizes = tuple(int(s) for s in layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise DomainError(f"invalid layer sizes {sizes}")
        gen = as_generator(rng)
        weights, biases = [], []
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            if i == len(sizes) - 2:
                weights.append(np.zeros((fan_in, fan_out)))
                biases.append(np.zeros(fan_out))
            else:
                bound = 1.0 / math.sqrt(fan_in)
                weights.append(gen.uniform(-bound, bound, size=(fan_in, fan_out)))
                biases.append(gen.uniform(-bound, bound, size=fan_out))
        d = sizes[0]
        shift = np.zeros(d) if input_shift is None else np.asarray(input_shift, dtype=float)
        scale = np.ones(d) if input_scale is None else np.asarray(input_scale, dtype=float)
        return cls(sizes, weights, biases, shift, scale)

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_members(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def with_params(self, params: list[np.ndarray]) -> "WeightNet":
        return replace(self, weights=[p.copy() for p in params[0::2]], biases=[p.copy() for p in params[1::2]],
                       history={})

    def _forward(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.n_inputs:
            raise DimensionError(f"network expects {self.n_inputs} features, got {X.shape[1]}")
        a = (X - self.input_shift) / self.input_scale
        acts = [a]
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = z if i == last else np.maximum(z, 0.0)
            acts.append(a)
        z = acts[-1]
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        lam = e / e.sum(axis=1, keepdims=True)
        return lam, acts

    def forward(self, X) -> np.ndarray:
        return self._forward(X)[0]

    def _backward(self, lam, acts, d_lam) -> list[np.ndarray]:
        dz = lam * (d_lam - np.sum(d_lam * lam, axis=1, keepdims=True))
        grads = []
        for i in range(len(self.weights) - 1, -1, -1):
            a_in = acts[i]
            grads.append(dz.sum(axis=0))
            grads.append(a_in.T @ dz)
            if i > 0:
                dz = (dz @ self.weights[i].T) * (acts[i] > 0)
        grads.reverse()
        return grads

    # -- persistence -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": "credal-cal-weightnet",
            "version": FORMAT_VERSION,
            "layer_sizes": list(self.layer_sizes),
            "activation": "relu",
            "output": "softmax",
            "input_shift": self.input_shift.tolist(),
            "input_scale": self.input_scale.tolist(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WeightNet":
        if doc.get("format") != "credal-cal-weightnet":
            raise ValueError("not a weight-net checkpoint")
        sizes = tuple(doc["layer_sizes"])
        weights = [np.array(w, dtype=float).reshape(a, b) for w, a, b in zip(doc["weights"], sizes[:-1], sizes[1:])]
        biases = [np.array(b, dtype=float) for b in doc["biases"]]
        return cls(sizes, weights, biases, np.array(doc["input_shift"], dtype=float),
                   np.array(doc["input_scale"], dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WeightNet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def evaluate_weights(net: WeightNet, data: CredalDataset | np.ndarray) -> np.ndarray:
    """Weight matrix with row i = net(features_i)."""
    X = data.features if isinstance(data, CredalDataset) else data
    return net.forward(X)


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TrainConfig:
    """Meta-learner training settings.

    ``batch_size=None`` trains full-batch.  The defaults are the synthetic
    experiment settings; :meth:`for_ingested` gives the settings used for
    precomputed ensemble predictions.
    """

    loss_estimator: CalEstimatorKind = CalEstimatorKind(Kind.CE2)
    scoring_rule: Kind = Kind.BRIER
    gamma: float = 0.01
    hidden: tuple[int, ...] = (16, 16, 16)
    learning_rate: float = 1e-3
    batch_size: int | None = 32
    epochs: int = 300
    patience: int = 10
    holdout_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.loss_estimator, (str, Kind)):
            object.__setattr__(self, "loss_estimator", CalEstimatorKind(Kind(self.loss_estimator)))
        object.__setattr__(self, "scoring_rule", Kind(self.scoring_rule))
        if self.scoring_rule not in (Kind.BRIER, Kind.LOG_LOSS):
            raise DomainError("scoring rule must be brier or logloss")
        if self.gamma < 0:
            raise DomainError("gamma must be non-negative")
        if self.batch_size is not None and self.loss_estimator.kind.needs_population and self.batch_size < 8:
            raise DomainError("batch size must be at least 8 for population-level estimators")
        if not 0 < self.holdout_fraction < 1:
            raise DomainError("holdout fraction must lie in (0, 1)")

    @classmethod
    def for_ingested(cls, **overrides) -> "TrainConfig":
        base = dict(hidden=(32, 32, 32), learning_rate=1e-4, batch_size=256, epochs=200)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return {
            "loss_estimator": self.loss_estimator.to_dict(),
            "scoring_rule": self.scoring_rule.value,
            "gamma": self.gamma,
            "hidden": list(self.hidden),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "patience": self.patience,
            "holdout_fraction": self.holdout_fraction,
            "seed": self.seed,
        }


def combined_loss(net: WeightNet, features, predictions, labels, scoring: CalEstimatorKind,
                  penalty: CalEstimatorKind, gamma: float, with_grad: bool = False):
    """Scoring rule plus ``gamma`` times calibration penalty of the combined predictor.

    Returns ``(value, grads)`` where ``grads`` follows :meth:`WeightNet.params`
    ordering (``None`` unless ``with_grad``).
    """
    lam, acts = net._forward(features)
    F = combine_dataset(predictions, lam)
    score = scoring(F, labels, with_grad=with_grad)
    value = score.value
    dF = score.gradient
    if gamma > 0:
        pen = penalty(F, labels, with_grad=with_grad)
        value = value + gamma * pen.value
        if with_grad:
            dF = dF + gamma * pen.gradient
    if not with_grad:
        return value, None
    d_lam = np.einsum("nk,nmk->nm", dF, predictions)
    return value, net._backward(lam, acts, d_lam)


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.beta1**self.t
        c2 = 1 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train_weight_net(opt_data: CredalDataset, config: TrainConfig = TrainConfig()) -> WeightNet:
    """Fit a weight network on labelled optimisation data.

    The last ``holdout_fraction`` of the rows is held out for early stopping;
    the parameters with the lowest held-out combined loss are returned.
    Training history is attached as ``net.history``.
    """
    if opt_data.labels is None:
        raise DomainError("training needs labelled optimisation data")
    n = opt_data.n_instances
    n_hold = max(int(round(config.holdout_fraction * n)), 2)
    n_train = n - n_hold
    if n_train < 2:
        raise DomainError("optimisation set too small")
    if config.batch_size is not None and n < 2 * config.batch_size:
        raise DomainError(f"need at least {2 * config.batch_size} rows for batch size {config.batch_size}")

    X, P, y = opt_data.features, opt_data.predictions, opt_data.labels
    Xt, Pt, yt = X[:n_train], P[:n_train], y[:n_train]
    Xh, Ph, yh = X[n_train:], P[n_train:], y[n_train:]

    root = RngStream(config.seed)
    shift = Xt.mean(axis=0)
    scale = Xt.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    sizes = (X.shape[1], *config.hidden, opt_data.n_members)
    net = WeightNet.initialize(sizes, root.spawn(0), shift, scale)

    scoring = CalEstimatorKind(config.scoring_rule)
    penalty = config.loss_estimator.resolve(Pt.mean(axis=1), yt)

    def holdout_loss(candidate):
        return combined_loss(candidate, Xh, Ph, yh, scoring, penalty, config.gamma)[0]

    params = net.params()
    opt = _Adam(params, config.learning_rate)
    best_loss = holdout_loss(net)
    best_params = [p.copy() for p in params]
    best_epoch, since_best = 0, 0
    history = {"train_loss": [], "holdout_loss": [best_loss], "best_epoch": 0}
    batch = n_train if config.batch_size is None else config.batch_size
    n_batches = max(n_train // batch, 1)

    for epoch in range(1, config.epochs + 1):
        if n_batches == 1:
            batches = [np.arange(n_train)]
        else:
            order = root.spawn(1, epoch).generator().permutation(n_train)
            batches = np.array_split(order, n_batches)
        epoch_loss = 0.0
        for idx in batches:
            value, grads = combined_loss(net, Xt[idx], Pt[idx], yt[idx], scoring, penalty, config.gamma,
                                         with_grad=True)
            if not np.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads):
                raise NumericError(f"non-finite loss or gradient at epoch {epoch} (loss={value!r})")
            opt.step(params, grads)
            epoch_loss += value * len(idx)
        history["train_loss"].append(epoch_loss / n_train)
        h = holdout_loss(net)
        if not np.isfinite(h):
            raise NumericError(f"non-finite held-out loss at epoch {epoch}")
        history["holdout_loss"].append(h)
        if h < best_loss:
            best_loss, best_epoch, since_best = h, epoch, 0
            best_params = [p.copy() for p in params]
        else:
            since_best += 1
            if since_best >= config.patience:
                break
    history["best_epoch"] = best_epoch
    history["penalty"] = penalty.to_dict()
    trained = net.with_params(best_params)
    trained.history = history
    return trained


# ---------------------------------------------------------------------------
# Constant-weight oracle
# ---------------------------------------------------------------------------
def simplex_lattice(n_members: int, step: float) -> np.ndarray:
    """All points of the (M-1)-simplex whose coordinates are multiples of ``step``."""
    parts = int(round(1.0 / step))
    if parts < 1 or abs(parts * step - 1.0) > 1e-9:
        raise DomainError("step must divide 1")
    if n_members == 1:
        return np.ones((1, 1))
    rows = []
    for cuts in itertools.combinations(range(parts + n_members - 1), n_members - 1):
        bounds = (-1, *cuts, parts + n_members - 1)
        rows.append([bounds[i + 1] - bounds[i] - 1 for i in range(n_members)])
    return np.array(rows, dtype=float) / parts


def grid_search_constant_lambda(data: CredalDataset, estimator: CalEstimatorKind, step: float = 0.01):
    """Exhaustive search for the constant mixture weight minimizing ``estimator``.

    Unresolved smoothing parameters are fixed once from the mean predictor so
    every grid point is scored by the same estimator.
    """
    if data.labels is None:
        raise DomainError("grid search needs labels")
    M = data.n_members
    if M > 4:
        raise UnsupportedError(f"grid search supports at most 4 members, got {M}")
    est = estimator.resolve(data.mean_predictor(), data.labels)
    grid = simplex_lattice(M, step)
    best_w, best_v = None, np.inf
    for w in grid:
        F = np.tensordot(data.predictions, w, axes=([1], [0]))
        v = est(F, data.labels).value
        if v < best_v:
            best_w, best_v = w, v
    return best_w, float(best_v)
