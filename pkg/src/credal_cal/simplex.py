"""
Probability-simplex primitives.

Validation of probability vectors and prediction tensors, convex
combination of ensemble members, nearest-point projection onto the convex
hull of a few simplex points, and seeded samplers built on splittable
random streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RENORM_TOL = 1e-6
SUM_TOL = 1e-9


class DimensionError(ValueError):
    """Array shapes do not agree."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class SimplexError(DomainError):
    """A vector is not a probability vector (beyond renormalization tolerance)."""


class NumericError(ArithmeticError):
    """A numerical routine produced non-finite values or failed to factorize."""


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream)``.

    ``stream`` is a path of non-negative integers; child streams append to it,
    so every bootstrap round or repetition can own an independent generator
    whose draws do not depend on scheduling order.
    """

    seed: int
    stream: tuple[int, ...] = field(default=())

    def spawn(self, *ids: int) -> "RngStream":
        return RngStream(self.seed, self.stream + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(seq))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator, or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).generator()
    raise TypeError(f"cannot make a generator from {type(rng).__name__}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------
def as_prob_vector(values, tol: float = RENORM_TOL) -> np.ndarray:
    """Validate a probability vector, renormalizing small drift.

    Entries must be non-negative and sum to one within ``tol``; within that
    tolerance the vector is rescaled so the sum is 1 to machine precision.
    """
    p = np.array(values, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise SimplexError(f"probability vector needs shape (K,), K >= 2; got {p.shape}")
    return as_prob_rows(p[None, :], tol)[0]


def as_prob_rows(array, tol: float = RENORM_TOL) -> np.ndarray:
    """Validate (and renormalize) every vector along the last axis of ``array``."""
    p = np.array(array, dtype=float)
    if p.shape[-1] < 2:
        raise SimplexError("probability vectors need at least two classes")
    if not np.all(np.isfinite(p)):
        raise SimplexError("probability vectors contain non-finite entries")
    if np.any(p < -tol) or np.any(p > 1 + tol):
        bad = np.argwhere((p < -tol) | (p > 1 + tol))[0]
        raise SimplexError(f"entry out of [0, 1] at index {tuple(bad)}")
    sums = p.sum(axis=-1)
    drift = np.abs(sums - 1.0)
    if np.any(drift > tol):
        bad = np.unravel_index(np.argmax(drift), drift.shape)
        raise SimplexError(f"probabilities sum to {sums[bad]!r} at index {tuple(int(b) for b in bad)}")
    p = np.clip(p, 0.0, 1.0)
    return p / p.sum(axis=-1, keepdims=True)


def check_weight_matrix(weights, n_rows: int | None = None, n_members: int | None = None) -> np.ndarray:
    """Validate an N x M row-stochastic weight matrix."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise DimensionError(f"weight matrix must be 2-D, got shape {w.shape}")
    if n_rows is not None and w.shape[0] != n_rows:
        raise DimensionError(f"weight matrix has {w.shape[0]} rows, expected {n_rows}")
    if n_members is not None and w.shape[1] != n_members:
        raise DimensionError(f"weight matrix has {w.shape[1]} columns, expected {n_members}")
    if np.any(w < -SUM_TOL) or np.any(w > 1 + SUM_TOL):
        raise SimplexError("weights must lie in [0, 1]")
    if np.any(np.abs(w.sum(axis=1) - 1.0) > SUM_TOL):
        raise SimplexError("weight rows must sum to 1")
    return w


@dataclass
class CredalDataset:
    """Predictions of M ensemble members on N instances with K classes.

    Attributes
    ----------
    features : ndarray, shape (N, d)
    predictions : ndarray, shape (N, M, K)
        Each ``predictions[i, m]`` is a probability vector.
    labels : ndarray of int, shape (N,), optional
        Zero-based class indices.
    """

    features: np.ndarray
    predictions: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        preds = np.asarray(self.predictions, dtype=float)
        if preds.ndim != 3:
            raise DimensionError(f"predictions must be (N, M, K), got {preds.shape}")
        n, m, k = preds.shape
        if n < 1 or m < 1:
            raise DimensionError("need N >= 1 and M >= 1")
        self.predictions = as_prob_rows(preds)
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim == 1:
            feats = feats[:, None]
        if feats.ndim != 2 or feats.shape[0] != n:
            raise DimensionError(f"features must be (N, d) with N={n}, got {feats.shape}")
        self.features = feats
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise DimensionError(f"labels must have shape ({n},), got {labels.shape}")
            if not np.issubdtype(labels.dtype, np.integer):
                if np.any(labels != np.round(labels)):
                    raise DomainError("labels must be integers")
                labels = labels.astype(np.int64)
            if np.any(labels < 0) or np.any(labels >= k):
                raise DomainError(f"labels must lie in 0..{k - 1}")
            self.labels = labels.astype(np.int64)

    @property
    def n_instances(self) -> int:
        return self.predictions.shape[0]

    @property
    def n_members(self) -> int:
        return self.predictions.shape[1]

    @property
    def n_classes(self) -> int:
        return self.predictions.shape[2]

    def subset(self, index) -> "CredalDataset":
        index = np.asarray(index)
        labels = None if self.labels is None else self.labels[index]
        return CredalDataset(self.features[index], self.predictions[index], labels)

    def mean_predictor(self) -> np.ndarray:
        return self.predictions.mean(axis=1)


# ---------------------------------------------------------------------------
# Convex combinations
# ---------------------------------------------------------------------------
def convex_combine(preds, weights) -> np.ndarray:
    """Weighted average ``sum_m w_m p_m`` of M probability vectors."""
    preds = np.asarray(preds, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if preds.ndim != 2 or preds.shape[0] == 0:
        raise DimensionError("preds must be a non-empty (M, K) array")
    if weights.shape != (preds.shape[0],):
        raise DimensionError(f"weights must have shape ({preds.shape[0]},), got {weights.shape}")
    return weights @ preds


def combine_dataset(data: CredalDataset | np.ndarray, weights) -> np.ndarray:
    """Row-wise convex combination ``f_i = sum_m weights[i, m] * predictions[i, m]``."""
    preds = data.predictions if isinstance(data, CredalDataset) else np.asarray(data, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != preds.shape[:2]:
        raise DimensionError(f"weights shape {weights.shape} does not match predictions {preds.shape[:2]}")
    return np.einsum("nm,nmk->nk", weights, preds)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------
def sample_dirichlet(alpha, rng, size: int | None = None) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or np.any(~(alpha > 0)):
        raise DomainError("Dirichlet parameters must be positive")
    return as_generator(rng).dirichlet(alpha, size=size)


def sample_categorical(p, rng, size: int | None = None):
    """Draw class indices from one probability vector."""
    p = as_prob_vector(p)
    gen = as_generator(rng)
    u = gen.random(size)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, u, side="right")


def sample_categorical_rows(probs, rng) -> np.ndarray:
    """One categorical draw per row of an (N, K) probability matrix (inverse CDF)."""
    probs = np.asarray(probs, dtype=float)
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    u = as_generator(rng).random(probs.shape[0])
    return (u[:, None] >= cdf).sum(axis=1)


def sample_weight_simplex(n_members: int, count: int, rng) -> np.ndarray:
    """``count`` i.i.d. draws from the flat Dirichlet on the (M-1)-simplex."""
    if n_members < 2:
        raise DomainError("need at least two members to sample mixture weights")
    return sample_dirichlet(np.ones(n_members), rng, size=count)


# ---------------------------------------------------------------------------
# Hull projection
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class HullProjection:
    inside: bool
    distance: float
    weights: np.ndarray
    nearest: np.ndarray


def _affine_min_norm(P: np.ndarray) -> np.ndarray:
    """Weights (summing to 1) of the min-norm point in the affine hull of the rows of P.

    Solved as least squares on the edge vectors rather than through the Gram
    matrix, which would square the condition number.
    """
    s = P.shape[0]
    if s == 1:
        return np.ones(1)
    D = (P[1:] - P[0]).T
    z = np.linalg.lstsq(D, -P[0], rcond=None)[0]
    return np.concatenate([[1.0 - z.sum()], z])


def project_to_hull(point, vertices, tol: float = 1e-12, max_iter: int = 1000) -> HullProjection:
    """Euclidean projection of ``point`` onto ``conv(vertices)`` (Wolfe's min-norm-point method).

    Exact active-set algorithm: the iterate is always a convex combination of a
    corral of affinely independent vertices, and the loop stops when no vertex
    improves the Wolfe gap ``|x|^2 - min_j <x, v_j>`` by more than
    ``tol * |x| * diam`` or the norm stops decreasing.  Scaling the gap by
    ``|x|`` keeps the test meaningful for nearly flat hulls, where the plain
    quadratic gap drops below rounding long before the distance does.
    """
    point = np.asarray(point, dtype=float)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    if V.shape[1] != point.shape[0]:
        raise DimensionError("point and vertices have different dimension")
    P = V - point
    diam = max(float(np.sqrt(np.max(np.sum(P * P, axis=1)))), 1e-300)
    m = P.shape[0]

    start = int(np.argmin(np.sum(P * P, axis=1)))
    corral = [start]
    lam = np.ones(1)
    x = P[start].copy()
    for _ in range(max_iter):
        j = int(np.argmin(P @ x))
        if x @ x - x @ P[j] <= tol * np.sqrt(x @ x) * diam or j in corral:
            break
        prev = (x.copy(), corral[:], lam.copy())
        corral.append(j)
        lam = np.append(lam, 0.0)
        while True:
            v = _affine_min_norm(P[corral])
            if np.all(v > tol):
                lam = v
                break
            mask = v <= tol
            denom = lam[mask] - v[mask]
            theta = np.min(np.where(denom > 0, lam[mask] / np.where(denom > 0, denom, 1.0), 1.0))
            theta = min(max(theta, 0.0), 1.0)
            lam = lam + theta * (v - lam)
            keep = lam > tol
            corral = [c for c, k in zip(corral, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x_new = lam @ P[corral]
        if x_new @ x_new >= x @ x:
            x, corral, lam = prev
            break
        x = x_new

    weights = np.zeros(m)
    weights[corral] = lam
    weights = np.clip(weights, 0.0, None)
    weights /= weights.sum()
    nearest = weights @ V
    distance = float(np.linalg.norm(nearest - point))
    return HullProjection(distance <= 1e-9, distance, weights, nearest)


def point_in_hull(point, vertices, tol: float = 1e-9) -> HullProjection:
    """Membership of ``point`` in the hull of ``vertices`` with its L2 distance."""
    proj = project_to_hull(point, vertices)
    return HullProjection(proj.distance <= tol, proj.distance, proj.weights, proj.nearest)


def hull_distances(points, vertex_sets) -> np.ndarray:
    """Row-wise hull distance: ``points`` (N, K) against ``vertex_sets`` (N, M, K)."""
    return np.array([project_to_hull(p, v).distance for p, v in zip(points, vertex_sets)])


def one_hot(labels: Sequence[int], n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
