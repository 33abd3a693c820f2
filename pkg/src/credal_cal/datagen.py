"""
Synthetic credal-set scenarios with known ground truth.

Two families:

* ``binary`` - two members whose class-1 probabilities are min-max scaled
  Gaussian-process paths over ``x ~ U(0, 5)``.
* ``multiclass`` - per instance a prior ``p ~ Dir(1)`` and M members drawn
  from ``Dir(p * K / u)``.

Null cases (``H01`` constant weights, ``H02`` polynomial weights) put the
true conditional distribution inside the members' hull; alternative cases
(``H11``-``H13``) put it outside at increasing distance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .simplex import (
    CredalDataset,
    DomainError,
    NumericError,
    RngStream,
    as_generator,
    combine_dataset,
    project_to_hull,
    sample_categorical_rows,
)

X_RANGE = (0.0, 5.0)
JITTERS = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


class Family(str, enum.Enum):
    BINARY = "binary"
    MULTICLASS = "multiclass"


class Case(str, enum.Enum):
    H01 = "H01"
    H02 = "H02"
    H11 = "H11"
    H12 = "H12"
    H13 = "H13"

    @property
    def is_null(self) -> bool:
        return self in (Case.H01, Case.H02)


DEFAULT_DELTA = {Case.H11: 0.01, Case.H12: 0.1, Case.H13: 0.2}
# maximum exceedance of the binary H12/H13 truth beyond the members' interval
DEFAULT_EXCEEDANCE = {Case.H12: 0.05, Case.H13: 0.15}


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of one synthetic scenario.

    ``delta`` and ``max_exceedance`` default to the per-case values when left
    as ``None``.  ``exceedance_relative`` scales the binary exceedance by the
    local gap between the two members instead of using probability units.
    """

    family: Family = Family.BINARY
    case: Case = Case.H01
    n: int = 400
    m: int | None = None
    k: int | None = None
    u: float = 0.5
    delta: float | None = None
    epsilon_max: float = 0.02
    max_exceedance: float | None = None
    exceedance_relative: bool = False
    poly_degree: int = 2
    length_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "case", Case(self.case))
        if self.family is Family.BINARY:
            if self.m not in (None, 2) or self.k not in (None, 2):
                raise DomainError("the binary family has exactly M=2 members and K=2 classes")
            object.__setattr__(self, "m", 2)
            object.__setattr__(self, "k", 2)
        else:
            m = 10 if self.m is None else self.m
            k = 5 if self.k is None else self.k
            if k < 3:
                raise DomainError("the multiclass family needs K >= 3")
            if m < 1:
                raise DomainError("need at least one member")
            object.__setattr__(self, "m", m)
            object.__setattr__(self, "k", k)
        if self.n < 2:
            raise DomainError("need at least two instances")
        if not self.u > 0:
            raise DomainError("u must be positive")
        if self.delta is not None and not 0 <= self.delta <= 1:
            raise DomainError("delta must lie in [0, 1]")
        if self.poly_degree < 0:
            raise DomainError("polynomial degree must be non-negative")

    @property
    def resolved_delta(self) -> float:
        return DEFAULT_DELTA.get(self.case, 0.0) if self.delta is None else self.delta

    @property
    def resolved_exceedance(self) -> float:
        return DEFAULT_EXCEEDANCE.get(self.case, 0.0) if self.max_exceedance is None else self.max_exceedance

    def to_dict(self) -> dict:
        return {
            "family": self.family.value, "case": self.case.value, "n": self.n, "m": self.m, "k": self.k,
            "u": self.u, "delta": self.resolved_delta, "epsilon_max": self.epsilon_max,
            "max_exceedance": self.resolved_exceedance, "exceedance_relative": self.exceedance_relative,
            "poly_degree": self.poly_degree, "length_scale": self.length_scale, "seed": self.seed,
        }


@dataclass
class GroundTruth:
    f_star: np.ndarray
    lambda_star: np.ndarray | None = None

    def subset(self, index) -> "GroundTruth":
        lam = None if self.lambda_star is None else self.lambda_star[index]
        return GroundTruth(self.f_star[index], lam)


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------
def rbf_covariance(xs, length_scale: float) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    d = xs[:, None] - xs[None, :]
    return np.exp(-(d * d) / (2.0 * length_scale**2))


def gp_path(xs, length_scale: float, rng) -> np.ndarray:
    """Unscaled draw from a zero-mean GP with RBF covariance (Cholesky with jitter escalation)."""
    xs = np.asarray(xs, dtype=float)
    if xs.shape[0] < 2:
        raise DomainError("need at least two inputs")
    cov = rbf_covariance(xs, length_scale)
    eye = np.eye(xs.shape[0])
    for jitter in JITTERS:
        try:
            chol = np.linalg.cholesky(cov + jitter * eye)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise NumericError("Cholesky factorization failed even with jitter 1e-4")
    return chol @ as_generator(rng).standard_normal(xs.shape[0])


def minmax_scale(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full_like(values, 0.5)
    return (values - lo) / (hi - lo)


def gp_sample(xs, length_scale: float, rng) -> np.ndarray:
    """GP path min-max scaled onto [0, 1]."""
    return minmax_scale(gp_path(xs, length_scale, rng))


def random_scaled_polynomials(n_members: int, degree: int, xs, rng) -> np.ndarray:
    """Row-stochastic weights whose columns are shifted random polynomials of ``xs``."""
    if degree < 0:
        raise DomainError("degree must be non-negative")
    xs = np.asarray(xs, dtype=float)
    beta = as_generator(rng).uniform(-1.0, 1.0, size=(n_members, degree + 1))
    powers = xs[:, None] ** np.arange(degree + 1)[None, :]
    vals = powers @ beta.T
    vals = vals - vals.min(axis=0, keepdims=True) + 1e-6
    return vals / vals.sum(axis=1, keepdims=True)


def _two_member_predictions(p1, p2) -> np.ndarray:
    probs = np.stack([p1, p2], axis=1)
    return np.stack([probs, 1.0 - probs], axis=2)


def _outside_interval(lo, hi, exceed, upper) -> np.ndarray:
    """Place a point ``exceed`` beyond the requested endpoint of ``[lo, hi]``.

    Where [0, 1] leaves less room than ``exceed`` the point goes halfway into
    the remaining room; only where the requested side has no room at all does
    it move to the other side.  The result is strictly outside the interval
    whenever the interval is not all of [0, 1].
    """
    lo, hi, exceed = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float), np.asarray(exceed, float))
    upper = np.broadcast_to(np.asarray(upper, bool), lo.shape)
    room_up, room_down = 1.0 - hi, lo
    up_val = hi + np.minimum(exceed, 0.5 * room_up)
    down_val = lo - np.minimum(exceed, 0.5 * room_down)
    go_up = np.where(upper, room_up > 0, room_down <= 0)
    return np.where(go_up, up_val, down_val)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------
def generate_binary(spec: ScenarioSpec) -> tuple[CredalDataset, GroundTruth]:
    if spec.family is not Family.BINARY:
        raise DomainError("generate_binary needs the binary family")
    root = RngStream(spec.seed)
    n = spec.n
    xs = root.spawn(0).generator().uniform(*X_RANGE, size=n)
    p1 = gp_sample(xs, spec.length_scale, root.spawn(1))
    p2 = gp_sample(xs, spec.length_scale, root.spawn(2))
    preds = _two_member_predictions(p1, p2)
    lo, hi = np.minimum(p1, p2), np.maximum(p1, p2)
    case_rng = root.spawn(3)
    lam = None
    if spec.case is Case.H01:
        c = case_rng.generator().uniform(0.0, 1.0)
        lam = np.tile([c, 1.0 - c], (n, 1))
    elif spec.case is Case.H02:
        lam = random_scaled_polynomials(2, spec.poly_degree, xs, case_rng)
    if lam is not None:
        f_pos = lam[:, 0] * p1 + lam[:, 1] * p2
    elif spec.case is Case.H11:
        gen = case_rng.generator()
        eps = spec.epsilon_max * (1.0 - gen.random(n))
        upper = np.full(n, gen.random() < 0.5)
        f_pos = _outside_interval(lo, hi, eps, upper)
    else:
        # a continuous path outside the band [lo, hi] stays on one side of it
        gen = case_rng.generator()
        upper = np.full(n, gen.random() < 0.5)
        magnitude = gp_sample(xs, spec.length_scale, case_rng.spawn(1))
        cap = spec.resolved_exceedance * ((hi - lo) if spec.exceedance_relative else 1.0)
        exceed = cap * (0.1 + 0.9 * magnitude)
        f_pos = _outside_interval(lo, hi, exceed, upper)
    f_pos = np.clip(f_pos, 0.0, 1.0)
    f_star = np.stack([f_pos, 1.0 - f_pos], axis=1)
    labels = sample_categorical_rows(f_star, root.spawn(4))
    return CredalDataset(xs[:, None], preds, labels), GroundTruth(f_star, lam)


def _dirichlet_rows(alpha: np.ndarray, rng) -> np.ndarray:
    """Independent Dirichlet draws for every row of ``alpha`` (last axis = classes)."""
    gen = as_generator(rng)
    g = gen.standard_gamma(alpha)
    total = g.sum(axis=-1, keepdims=True)
    while np.any(total <= 0):
        bad = total[..., 0] <= 0
        g[bad] = gen.standard_gamma(alpha[bad])
        total = g.sum(axis=-1, keepdims=True)
    return g / total


def generate_multiclass(spec: ScenarioSpec) -> tuple[CredalDataset, GroundTruth]:
    if spec.family is not Family.MULTICLASS:
        raise DomainError("generate_multiclass needs the multiclass family")
    root = RngStream(spec.seed)
    n, m, k = spec.n, spec.m, spec.k
    xs = root.spawn(0).generator().uniform(*X_RANGE, size=n)
    prior = _dirichlet_rows(np.ones((n, k)), root.spawn(1))
    conc = prior * k / spec.u
    preds = _dirichlet_rows(np.broadcast_to(conc[:, None, :], (n, m, k)).copy(), root.spawn(2))
    case_rng = root.spawn(3)
    lam = None
    if spec.case is Case.H01:
        c = case_rng.generator().dirichlet(np.ones(m))
        lam = np.tile(c, (n, 1))
    elif spec.case is Case.H02:
        lam = random_scaled_polynomials(m, spec.poly_degree, xs, case_rng)
    if lam is not None:
        f_star = combine_dataset(preds, lam)
    else:
        delta = spec.resolved_delta
        gen = case_rng.generator()
        f_star = np.empty((n, k))
        eye = np.eye(k)
        for i in range(n):
            for corner in gen.permutation(k):
                proj = project_to_hull(eye[corner], preds[i])
                if proj.distance > 1e-9:
                    break
            else:
                # every corner is a member: the hull is the whole simplex
                raise DomainError(f"instance {i}: member hull covers every simplex corner")
            f_star[i] = delta * eye[corner] + (1.0 - delta) * proj.nearest
        f_star = np.clip(f_star, 0.0, None)
        f_star /= f_star.sum(axis=1, keepdims=True)
    labels = sample_categorical_rows(f_star, root.spawn(4))
    return CredalDataset(xs[:, None], preds, labels), GroundTruth(f_star, lam)


def generate(spec: ScenarioSpec) -> tuple[CredalDataset, GroundTruth]:
    if spec.family is Family.BINARY:
        return generate_binary(spec)
    return generate_multiclass(spec)


def generate_split(spec: ScenarioSpec, n_opt: int | None = None):
    """Draw one scenario of ``n_opt + spec.n`` instances and split it.

    Both parts share the same member functions and ground truth, so weights
    learned on the optimisation part transfer to the validation part.

    Returns ``(opt_data, val_data, opt_truth, val_truth)``.
    """
    n_opt = spec.n if n_opt is None else n_opt
    data, truth = generate(replace(spec, n=n_opt + spec.n))
    opt_idx, val_idx = np.arange(n_opt), np.arange(n_opt, n_opt + spec.n)
    return data.subset(opt_idx), data.subset(val_idx), truth.subset(opt_idx), truth.subset(val_idx)
