import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from credal_cal.estimators import (
    CalEstimatorKind,
    DEFAULT_BANDWIDTH,
    Kind,
    brier_score,
    ce2_kde,
    cek_unbiased,
    cekl_kde,
    cemmd,
    kde_conditional_mean,
    log_loss,
    select_bandwidth,
)
from credal_cal.simplex import DomainError, sample_categorical_rows, RngStream

ALL_KINDS = (Kind.BRIER, Kind.LOG_LOSS, Kind.CE2, Kind.CEKL, Kind.CEK, Kind.CEMMD)

# (description, estimator call, expected value)
HAND_VALUES = [
    ("brier one-hot correct", lambda: brier_score([[1, 0], [0, 1]], [0, 1]), 0.0),
    ("brier (0.3,0.7) y=2", lambda: brier_score([[0.3, 0.7]], [1]), 0.18),
    ("brier (0.5,0.5)", lambda: brier_score([[0.5, 0.5]], [0]), 0.5),
    ("logloss one-hot correct", lambda: log_loss([[1, 0], [0, 1]], [0, 1]), 0.0),
    ("logloss (0.5,0.5)", lambda: log_loss([[0.5, 0.5]], [0]), np.log(2)),
    ("logloss clamped", lambda: log_loss([[1.0, 0.0]], [1]), -np.log(1e-12)),
    ("ce2 degenerate calibrated", lambda: ce2_kde([[1, 0]] * 4, [0] * 4, 0.1), 0.0),
    ("ce2 (0.9,0.1) all class 2", lambda: ce2_kde([[0.9, 0.1]] * 4, [1] * 4, 0.1), np.sqrt(1.62)),
    ("ce2 half/half", lambda: ce2_kde([[0.5, 0.5]] * 4, [0, 1, 0, 1], 0.1), 0.0),
    ("cekl half/half", lambda: cekl_kde([[0.5, 0.5]] * 4, [0, 1, 0, 1], 0.1), 0.0),
    ("cekl all class 1", lambda: cekl_kde([[0.5, 0.5]] * 4, [0] * 4, 0.1), np.log(2)),
    ("cekl one-hot correct", lambda: cekl_kde([[1, 0]] * 4, [0] * 4, 0.1), 0.0),
    ("cek one-hot correct", lambda: cek_unbiased([[1, 0], [0, 1]], [0, 1], 1.0), 0.0),
    ("cek opposite labels", lambda: cek_unbiased([[0.5, 0.5]] * 2, [0, 1], 1.0), -0.5),
    ("cek zero residual", lambda: cek_unbiased([[1, 0], [0, 1]], [0, 0], 1.0), 0.0),
    ("cemmd confident calibrated", lambda: cemmd([[1, 0]] * 3, [0] * 3, 1.0), 0.0),
    ("cemmd same labels", lambda: cemmd([[0.5, 0.5]] * 2, [0, 0], 1.0), 0.5),
    ("cemmd opposite labels", lambda: cemmd([[0.5, 0.5]] * 2, [0, 1], 1.0), -0.5),
]


@pytest.mark.parametrize("name,call,expected", HAND_VALUES, ids=[h[0] for h in HAND_VALUES])
def test_hand_values(name, call, expected):
    assert abs(call().value - expected) <= 1e-9


def test_empty_and_short_inputs_raise():
    with pytest.raises(DomainError):
        brier_score(np.zeros((0, 2)), np.zeros(0, dtype=int))
    with pytest.raises(DomainError):
        cek_unbiased([[0.5, 0.5]], [0], 1.0)
    with pytest.raises(DomainError):
        cemmd([[0.5, 0.5]], [0], 1.0)


# -- kernel regression ------------------------------------------------------
def test_conditional_mean_identical_predictions():
    F = np.full((6, 3), 1 / 3)
    est, _ = kde_conditional_mean(F, np.zeros(6, dtype=int), 0.1, at=2)
    np.testing.assert_allclose(est, [1, 0, 0], atol=1e-12)
    half = np.full((6, 2), 0.5)
    est, _ = kde_conditional_mean(half, np.array([0, 1] * 3), 0.1, at=1)
    np.testing.assert_allclose(est, [0.5, 0.5], atol=1e-12)
    # leaving row 1 out leaves 3 of class 1 and 2 of class 2
    est, _ = kde_conditional_mean(half, np.array([0, 1] * 3), 0.1, at=1, leave_one_out=True)
    np.testing.assert_allclose(est, [0.6, 0.4], atol=1e-12)


def test_conditional_mean_far_clusters_matches_brute_force():
    from scipy.stats import dirichlet

    A = np.tile([0.9, 0.05, 0.05], (5, 1))
    B = np.tile([0.05, 0.05, 0.9], (5, 1))
    F = np.vstack([A, B])
    y = np.array([0, 0, 1, 0, 2, 2, 2, 1, 2, 2])
    h = 0.001
    for loo in (False, True):
        est, fallback = kde_conditional_mean(F, y, h, at=0, leave_one_out=loo)
        assert not fallback
        rows = np.arange(1 if loo else 0, 10)
        logw = np.array([dirichlet.logpdf(F[i], F[0] / h + 1) for i in rows])
        w = np.exp(logw - logw.max())
        brute = (w[:, None] * np.eye(3)[y[rows]]).sum(axis=0) / w.sum()
        np.testing.assert_allclose(est, brute, atol=1e-6)
        cluster = rows[rows < 5]
        np.testing.assert_allclose(est, np.bincount(y[cluster], minlength=3) / cluster.size, atol=1e-6)


# -- gradients --------------------------------------------------------------
def _random_instance(seed, n=32, k=3):
    rng = np.random.default_rng(seed)
    F = rng.dirichlet(np.full(k, 2.0), size=n)
    y = rng.integers(0, k, size=n)
    return F, y


def fd_gradient(fn, F, step=1e-5):
    """Richardson-extrapolated central differences, error O(step^4)."""
    def central(h):
        G = np.zeros_like(F)
        for idx in np.ndindex(F.shape):
            up, down = F.copy(), F.copy()
            up[idx] += h
            down[idx] -= h
            G[idx] = (fn(up) - fn(down)) / (2 * h)
        return G

    return (4 * central(step / 2) - central(step)) / 3


def rel_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


GRADIENT_KINDS = [CalEstimatorKind(k) for k in ALL_KINDS] + [
    CalEstimatorKind(Kind.CE2, leave_one_out=True), CalEstimatorKind(Kind.CEKL, leave_one_out=True)]


@pytest.mark.parametrize("kind", GRADIENT_KINDS, ids=lambda k: k.name + ("-loo" if k.leave_one_out else ""))
@pytest.mark.parametrize("seed", range(3))
def test_gradient_matches_finite_differences(kind, seed):
    F, y = _random_instance(seed)
    est = kind.resolve(F, y)
    analytic = est(F, y, with_grad=True).gradient
    numeric = fd_gradient(lambda G: est(G, y).value, F)
    assert rel_error(analytic, numeric) <= 1e-4


# -- invariants -------------------------------------------------------------
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 40), st.integers(2, 4))
def test_nonnegative_estimators(seed, n, k):
    rng = np.random.default_rng(seed)
    F = rng.dirichlet(np.full(k, 0.5), size=n)
    y = rng.integers(0, k, size=n)
    for fn in (brier_score, log_loss):
        assert fn(F, y).value >= 0
    assert ce2_kde(F, y, DEFAULT_BANDWIDTH).value >= 0
    assert cekl_kde(F, y, DEFAULT_BANDWIDTH).value >= 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    F, y = _random_instance(seed, n=20)
    perm = np.random.default_rng(seed + 1).permutation(20)
    for kind in (Kind.BRIER, Kind.LOG_LOSS, Kind.CE2, Kind.CEKL, Kind.CEMMD):
        est = CalEstimatorKind(kind).resolve(F, y)
        assert abs(est(F, y).value - est(F[perm], y[perm]).value) <= 1e-12
    # the pairing estimator is invariant under swaps within pairs and reordering of pairs
    est = CalEstimatorKind(Kind.CEK).resolve(F, y)
    pair_perm = np.random.default_rng(seed + 2).permutation(10)
    idx = np.stack([2 * pair_perm + 1, 2 * pair_perm], axis=1).ravel()
    assert abs(est(F, y).value - est(F[idx], y[idx]).value) <= 1e-12


def _calibrated_sample(seed, n, k=3):
    stream = RngStream(seed)
    F = stream.spawn(0).generator().dirichlet(np.ones(k), size=n)
    y = sample_categorical_rows(F, stream.spawn(1))
    return F, y


def test_brier_decomposition_bound():
    for seed in range(5):
        F, y = _calibrated_sample(seed, 1000)
        assert brier_score(F, y).value >= ce2_kde(F, y, DEFAULT_BANDWIDTH).value ** 2 - 0.05


def test_two_distinct_calibrated_predictors():
    """Marginal and Bayes predictors on a three-point example are both calibrated."""
    rng = np.random.default_rng(0)
    x = rng.integers(0, 3, size=2000)
    y = x.copy()  # Y = X deterministically
    marginal = np.full((2000, 3), 1 / 3)
    bayes = np.eye(3)[x]
    assert ce2_kde(marginal, y, DEFAULT_BANDWIDTH).value <= 0.05
    assert ce2_kde(bayes, y, DEFAULT_BANDWIDTH).value <= 0.05
    assert not np.allclose(marginal, bayes)


def test_unbiased_estimators_center_on_zero():
    F, _ = _calibrated_sample(11, 300)
    gen = RngStream(12)
    values = {Kind.CEK: [], Kind.CEMMD: []}
    for r in range(200):
        y = sample_categorical_rows(F, gen.spawn(r))
        for kind in values:
            values[kind].append(CalEstimatorKind(kind).resolve(F)(F, y).value)
    for v in values.values():
        v = np.asarray(v)
        assert abs(v.mean()) <= 2 * v.std(ddof=1) / np.sqrt(v.size)


# -- bandwidth selection and estimator parsing -------------------------------
def test_select_bandwidth_properties():
    rng = np.random.default_rng(3)
    tight = rng.dirichlet([200, 200, 200], size=200)
    wide = rng.dirichlet([1, 1, 1], size=200)
    assert select_bandwidth(tight) <= select_bandwidth(wide)
    assert select_bandwidth(wide, grid=(0.07,)) == 0.07
    assert select_bandwidth(wide) == select_bandwidth(wide)
    with pytest.warns(RuntimeWarning):
        assert select_bandwidth(np.full((20, 3), 1 / 3)) == 1.0


def test_estimator_kind_parse_and_resolve():
    assert CalEstimatorKind.parse("ce2").resolve(None).bandwidth == DEFAULT_BANDWIDTH
    assert CalEstimatorKind.parse("CE2:0.05").bandwidth == 0.05
    assert CalEstimatorKind.parse("cekl:auto").bandwidth == "auto"
    assert CalEstimatorKind.parse("cek:0.3").kernel_scale == 0.3
    with pytest.raises(DomainError):
        CalEstimatorKind.parse("brier:0.1")
    with pytest.raises(ValueError):
        CalEstimatorKind.parse("ece")
    with pytest.raises(DomainError):
        CalEstimatorKind(Kind.CE2, bandwidth=-1.0)
