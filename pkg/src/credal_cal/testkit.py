"""
Consistency-resampling bootstrap tests for calibration of convex combinations.

The proposed test learns instance-dependent mixture weights on an
optimisation split, then asks whether the combined predictor is calibrated on
a disjoint validation split.  Under the null hypothesis labels are redrawn
from the combined predictor itself, which gives the reference distribution of
the calibration statistic.

Two comparison procedures are included: the same bootstrap applied to a
fixed predictor (typically the ensemble mean), and a sampling baseline that
minimizes the statistic over random constant weight vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .estimators import CalEstimatorKind, Kind
from .metalearner import TrainConfig, WeightNet, evaluate_weights, train_weight_net
from .simplex import (
    CredalDataset,
    DimensionError,
    DomainError,
    RngStream,
    as_prob_rows,
    combine_dataset,
    sample_categorical_rows,
    sample_weight_simplex,
)

MIN_BOOTSTRAP = 20


@dataclass(frozen=True)
class TestConfig:
    """Settings of one bootstrap test.

    ``resample_instances`` selects the bootstrap flavour: when true each round
    draws instances with replacement and then labels from the predictor at
    the drawn instances; when false only labels are redrawn.
    """

    __test__ = False

    alpha: float = 0.05
    n_bootstrap: int = 100
    estimator: CalEstimatorKind = CalEstimatorKind(Kind.CE2)
    seed: int = 0
    resample_instances: bool = True

    def __post_init__(self):
        if isinstance(self.estimator, (str, Kind)):
            object.__setattr__(self, "estimator", CalEstimatorKind(Kind(self.estimator)))
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_bootstrap < MIN_BOOTSTRAP:
            raise DomainError(f"need at least {MIN_BOOTSTRAP} bootstrap rounds, got {self.n_bootstrap}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "D": self.n_bootstrap,
            "estimator": self.estimator.to_dict(),
            "seed": self.seed,
            "resample_instances": self.resample_instances,
        }


def null_quantile(null_samples, alpha: float) -> float:
    """Empirical ``1 - alpha`` quantile with linear interpolation (type 7)."""
    return float(np.quantile(np.asarray(null_samples, dtype=float), 1.0 - alpha, method="linear"))


def bootstrap_p_value(statistic: float, null_samples) -> float:
    null = np.asarray(null_samples, dtype=float)
    return float((1 + np.count_nonzero(null >= statistic)) / (null.size + 1))


@dataclass(frozen=True, eq=False)
class TestResult:
    """Outcome of a bootstrap calibration test.

    ``null_samples`` are stored sorted.  ``reject`` is ``statistic > quantile``.
    """

    __test__ = False

    statistic: float
    null_samples: np.ndarray
    quantile: float
    p_value: float
    alpha: float
    reject: bool
    estimator: str
    seed: int

    @property
    def n_bootstrap(self) -> int:
        return int(self.null_samples.size)

    @classmethod
    def from_samples(cls, statistic: float, null_samples, alpha: float, estimator: str, seed: int) -> "TestResult":
        null = np.sort(np.asarray(null_samples, dtype=float))
        q = null_quantile(null, alpha)
        return cls(float(statistic), null, q, bootstrap_p_value(statistic, null), float(alpha),
                   bool(statistic > q), estimator, int(seed))

    def rejects_at(self, alpha: float) -> bool:
        return bool(self.statistic > null_quantile(self.null_samples, alpha))

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "quantile": self.quantile,
            "alpha": self.alpha,
            "reject": self.reject,
            "estimator": self.estimator,
            "D": self.n_bootstrap,
            "seed": self.seed,
            "null_samples": self.null_samples.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TestResult):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    @classmethod
    def from_dict(cls, doc: dict) -> "TestResult":
        return cls(float(doc["statistic"]), np.array(doc["null_samples"], dtype=float), float(doc["quantile"]),
                   float(doc["p_value"]), float(doc["alpha"]), bool(doc["reject"]), doc["estimator"],
                   int(doc["seed"]))


# ---------------------------------------------------------------------------
# Bootstrap core
# ---------------------------------------------------------------------------
def _resample(n: int, stream: RngStream, resample_instances: bool):
    gen = stream.generator()
    idx = gen.integers(0, n, size=n) if resample_instances else np.arange(n)
    return idx, gen


def consistency_bootstrap(preds, estimator: CalEstimatorKind, n_bootstrap: int, rng: RngStream,
                          resample_instances: bool = True) -> np.ndarray:
    """Null samples of ``estimator`` for a fixed predictor under consistency resampling.

    Round ``d`` uses the child stream ``rng.spawn(d)``, so every round is
    reproducible on its own.  ``estimator`` should already be resolved; the
    same smoothing parameters are then used in every round.
    """
    F = as_prob_rows(preds)
    n = F.shape[0]
    out = np.empty(n_bootstrap)
    for d in range(n_bootstrap):
        idx, gen = _resample(n, rng.spawn(d), resample_instances)
        Fd = F[idx]
        yd = sample_categorical_rows(Fd, gen)
        out[d] = estimator(Fd, yd).value
    return np.sort(out)


def run_bootstrap_test(preds, labels, config: TestConfig) -> TestResult:
    """Bootstrap calibration test of one fixed predictor."""
    F = as_prob_rows(preds)
    labels = np.asarray(labels)
    if labels.shape != (F.shape[0],):
        raise DimensionError("labels and predictions disagree in length")
    est = config.estimator.resolve(F, labels)
    t = est(F, labels).value
    null = consistency_bootstrap(F, est, config.n_bootstrap, RngStream(config.seed), config.resample_instances)
    return TestResult.from_samples(t, null, config.alpha, est.name, config.seed)


def run_npbe_on_fixed_predictor(preds, labels, config: TestConfig = TestConfig()) -> TestResult:
    """Bootstrap test applied to a given predictor, e.g. the ensemble mean."""
    if labels is None:
        raise DomainError("the test needs labels")
    return run_bootstrap_test(preds, labels, config)


def _check_pair(opt_data: CredalDataset, val_data: CredalDataset):
    for name, data in (("optimisation", opt_data), ("validation", val_data)):
        if data.labels is None:
            raise DomainError(f"{name} data has no labels")
    if opt_data.predictions.shape[1:] != val_data.predictions.shape[1:]:
        raise DimensionError("optimisation and validation data differ in M or K")
    if opt_data.features.shape[1] != val_data.features.shape[1]:
        raise DimensionError("optimisation and validation data differ in feature dimension")


def run_credal_test(opt_data: CredalDataset, val_data: CredalDataset, train_config: TrainConfig = TrainConfig(),
                    test_config: TestConfig = TestConfig()) -> tuple[TestResult, WeightNet]:
    """Test whether some instance-dependent convex combination is calibrated.

    Weights are learned on ``opt_data``; the combined predictor on
    ``val_data`` is then tested with :func:`run_bootstrap_test`.
    """
    _check_pair(opt_data, val_data)
    net = train_weight_net(opt_data, train_config)
    combined = combine_dataset(val_data, evaluate_weights(net, val_data))
    return run_bootstrap_test(combined, val_data.labels, test_config), net


# ---------------------------------------------------------------------------
# Sampling baseline
# ---------------------------------------------------------------------------
def _min_over_weights(P, labels, weights, estimator):
    values = np.array([estimator(np.tensordot(P, w, axes=([1], [0])), labels).value for w in weights])
    j = int(np.argmin(values))
    return values[j], j


def run_mortier_baseline(val_data: CredalDataset, config: TestConfig = TestConfig(),
                         sample_count: int = 1000, null: str = "sampled") -> TestResult:
    """Sampling baseline: minimum statistic over random constant weights.

    ``sample_count`` weight vectors are drawn from the flat Dirichlet and the
    statistic is the smallest calibration estimate among the combined
    predictors.

    ``null`` selects the reference distribution.  With ``"sampled"`` every
    bootstrap round draws a fresh constant weight vector, resamples labels
    from that combination and records its estimate, so the null describes a
    randomly chosen member of the credal set.  Comparing a minimum against it
    makes the test conservative.  With ``"reminimized"`` labels are resampled
    from the minimizing combination and the minimization over the sampled
    weights is repeated in every round.
    """
    if val_data.labels is None:
        raise DomainError("the test needs labels")
    if sample_count < 100:
        raise DomainError("sample_count must be at least 100")
    if null not in ("sampled", "reminimized"):
        raise DomainError(f"unknown null construction {null!r}")
    P, y = val_data.predictions, val_data.labels
    M = val_data.n_members
    if M == 1:
        return run_npbe_on_fixed_predictor(P[:, 0], y, config)
    root = RngStream(config.seed)
    weights = sample_weight_simplex(M, sample_count, root.spawn(0))
    est = config.estimator.resolve(val_data.mean_predictor(), y)
    t, j = _min_over_weights(P, y, weights, est)
    boot = root.spawn(1)
    out = np.empty(config.n_bootstrap)
    if null == "sampled":
        round_weights = sample_weight_simplex(M, config.n_bootstrap, root.spawn(2))
        for d in range(config.n_bootstrap):
            idx, gen = _resample(len(y), boot.spawn(d), config.resample_instances)
            Fd = np.tensordot(P[idx], round_weights[d], axes=([1], [0]))
            out[d] = est(Fd, sample_categorical_rows(Fd, gen)).value
    else:
        F = np.tensordot(P, weights[j], axes=([1], [0]))
        for d in range(config.n_bootstrap):
            idx, gen = _resample(len(y), boot.spawn(d), config.resample_instances)
            yd = sample_categorical_rows(F[idx], gen)
            out[d] = _min_over_weights(P[idx], yd, weights, est)[0]
    return TestResult.from_samples(t, out, config.alpha, est.name, config.seed)
