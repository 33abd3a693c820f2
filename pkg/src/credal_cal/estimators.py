"""
Calibration-error estimators and proper scoring rules.

Every estimator takes an (N, K) matrix of predicted probability vectors and
N zero-based labels and returns a :class:`CalEstimate`.  With
``with_grad=True`` the estimate also carries the analytic gradient of the
value with respect to every entry of the prediction matrix, which is what the
weight network backpropagates through.

Kernel-density estimators use a Dirichlet kernel ``Dir(u; c / h + 1)``
centred at the query point ``c`` and evaluated at the other predictions,
with leave-one-out weights.  The two kernel estimators (``cek`` and
``cemmd``) are unbiased U-statistics of a squared calibration error and can
be negative.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import gammaln, logsumexp

from .simplex import DimensionError, DomainError, one_hot

EPS = 1e-12
BANDWIDTH_GRID = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0)
DEFAULT_BANDWIDTH = 0.1


class Kind(str, enum.Enum):
    BRIER = "brier"
    LOG_LOSS = "logloss"
    CE2 = "ce2"
    CEKL = "cekl"
    CEK = "cek"
    CEMMD = "cemmd"

    @property
    def uses_bandwidth(self) -> bool:
        return self in (Kind.CE2, Kind.CEKL)

    @property
    def uses_kernel_scale(self) -> bool:
        return self in (Kind.CEK, Kind.CEMMD)

    @property
    def needs_population(self) -> bool:
        return self not in (Kind.BRIER, Kind.LOG_LOSS)


@dataclass(frozen=True)
class CalEstimate:
    value: float
    gradient: np.ndarray | None = None
    fallback: bool = False


def _check(preds, labels, min_n: int = 1):
    F = np.asarray(preds, dtype=float)
    y = np.asarray(labels, dtype=np.int64)
    if F.ndim != 2:
        raise DimensionError(f"predictions must be (N, K), got {F.shape}")
    if y.shape != (F.shape[0],):
        raise DimensionError(f"labels must have shape ({F.shape[0]},), got {y.shape}")
    if F.shape[0] < min_n:
        raise DomainError(f"need at least {min_n} instances, got {F.shape[0]}")
    return F, y


# ---------------------------------------------------------------------------
# Proper scoring rules
# ---------------------------------------------------------------------------
def brier_score(preds, labels, with_grad: bool = False) -> CalEstimate:
    """Mean over instances of the squared L2 distance to the one-hot label."""
    F, y = _check(preds, labels)
    diff = F - one_hot(y, F.shape[1])
    n = F.shape[0]
    value = float(np.sum(diff * diff) / n)
    return CalEstimate(value, 2.0 * diff / n if with_grad else None)


def log_loss(preds, labels, with_grad: bool = False) -> CalEstimate:
    """Mean negative log-probability of the observed class, clamped at 1e-12."""
    F, y = _check(preds, labels)
    n = F.shape[0]
    p = F[np.arange(n), y]
    value = float(-np.mean(np.log(np.maximum(p, EPS))))
    grad = None
    if with_grad:
        grad = np.zeros_like(F)
        grad[np.arange(n), y] = np.where(p > EPS, -1.0 / (n * np.maximum(p, EPS)), 0.0)
    return CalEstimate(value, grad)


# ---------------------------------------------------------------------------
# Dirichlet kernel regression
# ---------------------------------------------------------------------------
@dataclass
class _KDEState:
    F: np.ndarray
    Y: np.ndarray
    S: np.ndarray
    E: np.ndarray
    logF: np.ndarray
    unclamped: np.ndarray
    bandwidth: float
    fallback: np.ndarray


def _kde_forward(F: np.ndarray, y: np.ndarray, bandwidth: float, leave_one_out: bool = False) -> _KDEState:
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    n, k = F.shape
    unclamped = F > EPS
    logF = np.log(np.maximum(F, EPS))
    # L[j, i] = log Dir(f_i; f_j / h + 1) up to a term constant in i
    L = (F @ logF.T) / bandwidth
    # the density is exactly zero where f_i has a zero coordinate that f_j does not
    zero = F == 0
    if np.any(zero):
        L[((F > 0).astype(float) @ zero.T.astype(float)) > 0] = -np.inf
    if leave_one_out:
        np.fill_diagonal(L, -np.inf)
    Lmax = L.max(axis=1, keepdims=True)
    fallback = ~np.isfinite(Lmax[:, 0])
    W = np.exp(L - np.where(np.isfinite(Lmax), Lmax, 0.0))
    total = W.sum(axis=1, keepdims=True)
    fallback |= ~(total[:, 0] > 0)
    S = W / np.where(total > 0, total, 1.0)
    Y = one_hot(y, k)
    if np.any(fallback):
        S[fallback] = 0.0
    E = (W @ Y) / np.where(total > 0, total, 1.0)
    if np.any(fallback):
        E[fallback] = Y.mean(axis=0)
    return _KDEState(F, Y, S, E, logF, unclamped, bandwidth, fallback)


def _kde_backward(state: _KDEState, dE: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. the conditional means back onto the predictions."""
    S, Y, E, F = state.S, state.Y, state.E, state.F
    B = S * (dE @ Y.T - np.sum(dE * E, axis=1, keepdims=True))
    grad = B @ state.logF
    grad += (B.T @ F) * np.where(state.unclamped, 1.0 / np.maximum(F, EPS), 0.0)
    return grad / state.bandwidth


def kde_conditional_means(preds, labels, bandwidth: float,
                          leave_one_out: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Nadaraya-Watson estimates of E[y | f(x_j)] for every j.

    Each point's own label enters its estimate unless ``leave_one_out`` is
    set, in which case the sum runs over ``i != j`` only.

    Returns
    -------
    means : ndarray, shape (N, K)
    fallback : ndarray of bool, shape (N,)
        Rows whose kernel weights all underflowed; those rows hold the global
        label frequency instead.
    """
    F, y = _check(preds, labels, min_n=2)
    state = _kde_forward(F, y, bandwidth, leave_one_out)
    return state.E, state.fallback


def kde_conditional_mean(preds, labels, bandwidth: float, at: int,
                         leave_one_out: bool = False) -> tuple[np.ndarray, bool]:
    means, fallback = kde_conditional_means(preds, labels, bandwidth, leave_one_out)
    return means[at], bool(fallback[at])


def ce2_kde(preds, labels, bandwidth: float, with_grad: bool = False,
            leave_one_out: bool = False) -> CalEstimate:
    """Root mean squared distance between predictions and their KDE conditional means."""
    F, y = _check(preds, labels, min_n=2)
    st = _kde_forward(F, y, bandwidth, leave_one_out)
    n = F.shape[0]
    R = st.E - F
    sq = float(np.sum(R * R) / n)
    value = float(np.sqrt(sq))
    grad = None
    if with_grad:
        if value > 0:
            d_sq_dE = 2.0 * R / n
            g_sq = -d_sq_dE + _kde_backward(st, d_sq_dE)
            grad = g_sq / (2.0 * value)
        else:
            grad = np.zeros_like(F)
    return CalEstimate(value, grad, bool(np.any(st.fallback)))


def cekl_kde(preds, labels, bandwidth: float, with_grad: bool = False,
             leave_one_out: bool = False) -> CalEstimate:
    """Mean KL divergence from the KDE conditional mean to the prediction."""
    F, y = _check(preds, labels, min_n=2)
    st = _kde_forward(F, y, bandwidth, leave_one_out)
    n = F.shape[0]
    E = st.E
    logE = np.log(np.maximum(E, EPS))
    value = float(np.sum(E * (logE - st.logF)) / n)
    grad = None
    if with_grad:
        dE = (logE - st.logF + (E > EPS)) / n
        grad = -np.where(st.unclamped, E / np.maximum(F, EPS), 0.0) / n
        grad += _kde_backward(st, dE)
    # clamping can push the divergence a hair below zero
    return CalEstimate(max(value, 0.0), grad, bool(np.any(st.fallback)))


def select_bandwidth(preds, labels=None, grid=BANDWIDTH_GRID) -> float:
    """Bandwidth maximizing the leave-one-out log-likelihood of the Dirichlet KDE.

    ``labels`` are accepted for interface symmetry with the estimators; the
    likelihood only involves the predictions.
    """
    grid = tuple(float(h) for h in grid)
    if len(grid) == 1:
        return grid[0]
    F = np.asarray(preds, dtype=float)
    if F.ndim != 2 or F.shape[0] < 2:
        raise DomainError("bandwidth selection needs an (N, K) matrix with N >= 2")
    if np.all(np.ptp(F, axis=0) == 0):
        warnings.warn("all predictions identical; using the largest bandwidth", RuntimeWarning, stacklevel=2)
        return max(grid)
    n = F.shape[0]
    logF = np.log(np.maximum(F, EPS))
    best, best_ll = grid[0], -np.inf
    for h in grid:
        alpha = F / h + 1.0
        log_beta = gammaln(alpha).sum(axis=1) - gammaln(alpha.sum(axis=1))
        # dens[j, i] = log Dir(f_j; alpha_i)
        dens = logF @ (alpha - 1.0).T - log_beta[None, :]
        np.fill_diagonal(dens, -np.inf)
        ll = float(np.sum(logsumexp(dens, axis=1)) - n * np.log(n - 1))
        if ll > best_ll:
            best, best_ll = h, ll
    return best


# ---------------------------------------------------------------------------
# Kernel calibration errors
# ---------------------------------------------------------------------------
def median_l1_distance(preds) -> float:
    F = np.asarray(preds, dtype=float)
    if F.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(F, "cityblock")))
    return med if med > 0 else 1.0


def median_l2_distance(preds) -> float:
    F = np.asarray(preds, dtype=float)
    if F.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(F, "euclidean")))
    return med if med > 0 else 1.0


def cek_unbiased(preds, labels, kernel_scale: float, with_grad: bool = False) -> CalEstimate:
    """Linear-time unbiased estimate of the squared kernel calibration error.

    Consecutive instances (0, 1), (2, 3), ... form the pairs; the matrix
    kernel is ``exp(-||p - q||_1 / kernel_scale)`` times the identity.
    """
    F, y = _check(preds, labels, min_n=2)
    if not kernel_scale > 0:
        raise DomainError("kernel scale must be positive")
    n_pairs = F.shape[0] // 2
    R = one_hot(y, F.shape[1]) - F
    a, b = slice(0, 2 * n_pairs, 2), slice(1, 2 * n_pairs, 2)
    d = F[a] - F[b]
    kap = np.exp(-np.abs(d).sum(axis=1) / kernel_scale)
    dot = np.sum(R[a] * R[b], axis=1)
    value = float(np.mean(kap * dot))
    grad = None
    if with_grad:
        grad = np.zeros_like(F)
        dk = (kap * dot)[:, None] * np.sign(d) / kernel_scale
        grad[a] = (-kap[:, None] * R[b] - dk) / n_pairs
        grad[b] = (-kap[:, None] * R[a] + dk) / n_pairs
    return CalEstimate(value, grad)


def cemmd(preds, labels, kernel_scale: float, with_grad: bool = False) -> CalEstimate:
    """Unbiased estimate of the squared MMD between (label, prediction) and
    (simulated label, prediction) pairs.

    The joint kernel is ``[y == y'] * exp(-||z - z'||^2 / (2 s^2))`` with the
    conditioning variable ``z`` taken as the prediction itself, so the
    pairwise term reduces to ``kappa(f_i, f_j) * (e_i - f_i) . (e_j - f_j)``.
    """
    F, y = _check(preds, labels, min_n=2)
    if not kernel_scale > 0:
        raise DomainError("kernel scale must be positive")
    n = F.shape[0]
    sq = np.sum(F * F, axis=1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (F @ F.T), 0.0)
    Kmat = np.exp(-D2 / (2.0 * kernel_scale**2))
    np.fill_diagonal(Kmat, 0.0)
    R = one_hot(y, F.shape[1]) - F
    P = R @ R.T
    c = n * (n - 1)
    value = float(np.sum(Kmat * P) / c)
    grad = None
    if with_grad:
        W = P * Kmat
        grad = -(2.0 / c) * (Kmat @ R)
        grad -= (2.0 / (c * kernel_scale**2)) * (W.sum(axis=1)[:, None] * F - W @ F)
    return CalEstimate(value, grad)


# ---------------------------------------------------------------------------
# Estimator selection
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CalEstimatorKind:
    """An estimator choice plus its smoothing parameter.

    ``bandwidth`` applies to the KDE estimators, ``kernel_scale`` to the
    kernel estimators.  Unset values are filled in by :meth:`resolve`: the
    bandwidth defaults to ``DEFAULT_BANDWIDTH`` (``"auto"`` selects it by
    leave-one-out likelihood instead) and kernel scales follow the median
    heuristic.
    """

    kind: Kind
    bandwidth: float | str | None = None
    kernel_scale: float | None = None
    leave_one_out: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "auto":
                object.__setattr__(self, "bandwidth", float(self.bandwidth))
        if self.bandwidth not in (None, "auto") and not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive")
        if self.kernel_scale is not None and not self.kernel_scale > 0:
            raise DomainError("kernel scale must be positive")

    @classmethod
    def parse(cls, text: str) -> "CalEstimatorKind":
        """``"ce2"``, ``"ce2:0.05"``, ``"ce2:auto"`` or ``"cek:0.3"`` (smoothing after the colon)."""
        name, _, param = text.strip().lower().partition(":")
        kind = Kind(name)
        if not param:
            return cls(kind)
        if kind.uses_bandwidth:
            return cls(kind, bandwidth=param if param == "auto" else float(param))
        if kind.uses_kernel_scale:
            return cls(kind, kernel_scale=float(param))
        raise DomainError(f"{kind.value} takes no smoothing parameter")

    @property
    def name(self) -> str:
        return self.kind.value

    def resolve(self, preds, labels=None) -> "CalEstimatorKind":
        """Fill in data-driven defaults (bandwidth or median-heuristic kernel scale)."""
        if self.kind.uses_bandwidth and self.bandwidth is None:
            return replace(self, bandwidth=DEFAULT_BANDWIDTH)
        if self.kind.uses_bandwidth and self.bandwidth == "auto":
            return replace(self, bandwidth=select_bandwidth(preds, labels))
        if self.kind is Kind.CEK and self.kernel_scale is None:
            return replace(self, kernel_scale=median_l1_distance(preds))
        if self.kind is Kind.CEMMD and self.kernel_scale is None:
            return replace(self, kernel_scale=median_l2_distance(preds))
        return self

    def __call__(self, preds, labels, with_grad: bool = False) -> CalEstimate:
        est = self if self.is_resolved else self.resolve(preds, labels)
        kind = est.kind
        if kind is Kind.BRIER:
            return brier_score(preds, labels, with_grad)
        if kind is Kind.LOG_LOSS:
            return log_loss(preds, labels, with_grad)
        if kind is Kind.CE2:
            return ce2_kde(preds, labels, est.bandwidth, with_grad, est.leave_one_out)
        if kind is Kind.CEKL:
            return cekl_kde(preds, labels, est.bandwidth, with_grad, est.leave_one_out)
        if kind is Kind.CEK:
            return cek_unbiased(preds, labels, est.kernel_scale, with_grad)
        return cemmd(preds, labels, est.kernel_scale, with_grad)

    @property
    def is_resolved(self) -> bool:
        if self.kind.uses_bandwidth:
            return self.bandwidth not in (None, "auto")
        if self.kind.uses_kernel_scale:
            return self.kernel_scale is not None
        return True

    def to_dict(self) -> dict:
        doc = {"kind": self.kind.value, "bandwidth": self.bandwidth, "kernel_scale": self.kernel_scale}
        if self.leave_one_out:
            doc["leave_one_out"] = True
        return doc


CALIBRATION_KINDS = (Kind.CE2, Kind.CEKL, Kind.CEK, Kind.CEMMD)
