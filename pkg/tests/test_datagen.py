import numpy as np
import pytest

from credal_cal.datagen import (
    Case,
    ScenarioSpec,
    generate,
    generate_split,
    gp_path,
    gp_sample,
    random_scaled_polynomials,
)
from credal_cal.estimators import DEFAULT_BANDWIDTH, ce2_kde
from credal_cal.simplex import DomainError, RngStream, convex_combine, point_in_hull
from credal_cal.testkit import TestConfig, run_npbe_on_fixed_predictor


def test_scenario_validation_and_defaults():
    spec = ScenarioSpec(family="binary", case="H12")
    assert (spec.m, spec.k) == (2, 2)
    assert ScenarioSpec(family="multiclass", case="H11").resolved_delta == 0.01
    assert ScenarioSpec(family="multiclass", case="H13").resolved_delta == 0.2
    assert ScenarioSpec(family="multiclass").u == 0.5
    with pytest.raises(DomainError):
        ScenarioSpec(family="binary", m=3)
    with pytest.raises(DomainError):
        ScenarioSpec(family="multiclass", k=2)
    with pytest.raises(DomainError):
        ScenarioSpec(delta=1.5)


# -- Gaussian-process members ---------------------------------------------------
def test_gp_sample_scaling_and_determinism():
    xs = np.random.default_rng(0).uniform(0, 5, 300)
    a = gp_sample(xs, 1.0, RngStream(3))
    assert a.min() == 0.0 and a.max() == 1.0
    np.testing.assert_array_equal(a, gp_sample(xs, 1.0, RngStream(3)))


def test_gp_path_flat_for_huge_length_scale():
    xs = np.random.default_rng(1).uniform(0, 5, 200)
    path = gp_path(xs, 1e6, RngStream(4))
    # the path is a random constant plus jitter noise
    assert np.std(path) < 1e-2


# -- binary family --------------------------------------------------------------
def _member_interval(data):
    p = data.predictions[:, :, 0]
    return p.min(axis=1), p.max(axis=1)


@pytest.mark.parametrize("case", ["H01", "H02"])
def test_binary_null_truth_is_a_member_mixture(case):
    data, truth = generate(ScenarioSpec(family="binary", case=case, seed=11))
    lo, hi = _member_interval(data)
    f = truth.f_star[:, 0]
    assert np.all((f >= lo - 1e-12) & (f <= hi + 1e-12))
    for i in range(0, data.n_instances, 37):
        np.testing.assert_allclose(convex_combine(data.predictions[i], truth.lambda_star[i]), truth.f_star[i],
                                   atol=1e-9)
    if case == "H01":
        assert np.all(truth.lambda_star == truth.lambda_star[0])


def test_binary_h11_distance_within_epsilon():
    for seed in range(5):
        data, truth = generate(ScenarioSpec(family="binary", case="H11", seed=seed))
        lo, hi = _member_interval(data)
        f = truth.f_star[:, 0]
        for i in range(data.n_instances):
            # the truth can only leave the interval where there is room on the chosen side
            if lo[i] <= 1e-12 and hi[i] >= 1 - 1e-12:
                continue
            res = point_in_hull(truth.f_star[i], data.predictions[i])
            if res.inside:
                assert lo[i] <= 1e-12 or hi[i] >= 1 - 1e-12
                continue
            # hull distance in the 2-vector embedding is sqrt(2) times the 1-D gap
            gap = res.distance / np.sqrt(2)
            assert 0 < gap <= 0.02 + 1e-12
            assert f[i] < lo[i] or f[i] > hi[i]


@pytest.mark.parametrize("case", ["H12", "H13"])
def test_binary_alternatives_leave_the_interval(case):
    data, truth = generate(ScenarioSpec(family="binary", case=case, seed=21))
    lo, hi = _member_interval(data)
    f = truth.f_star[:, 0]
    outside = (f < lo - 1e-12) | (f > hi + 1e-12)
    has_room = (lo > 0) & (hi < 1)
    assert np.all(outside[has_room])
    cap = 0.05 if case == "H12" else 0.15
    excess = np.maximum(lo - f, f - hi)
    assert np.all(excess <= cap + 1e-12)


def test_binary_split_shares_the_members():
    opt, val, opt_truth, val_truth = generate_split(ScenarioSpec(family="binary", case="H01", seed=3))
    assert opt.n_instances == val.n_instances == 400
    np.testing.assert_array_equal(opt_truth.lambda_star[0], val_truth.lambda_star[0])


def test_labels_follow_the_truth():
    hits, probs = [], []
    for seed in range(10):
        data, truth = generate(ScenarioSpec(family="binary", case="H02", n=2000, seed=seed))
        hits.append(data.labels == 0)
        probs.append(truth.f_star[:, 0])
    hits, probs = np.concatenate(hits), np.concatenate(probs)
    # label frequencies match the true probabilities within Monte-Carlo error, overall and by decile
    assert abs(hits.mean() - probs.mean()) <= 4 * 0.5 / np.sqrt(hits.size)
    edges = np.quantile(probs, np.linspace(0, 1, 11))
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (probs >= a) & (probs <= b)
        assert abs(hits[sel].mean() - probs[sel].mean()) <= 4 * 0.5 / np.sqrt(sel.sum())


def _oracle_case(family, case):
    return generate(ScenarioSpec(family=family, case=case, n=2000, k=None if family == "binary" else 3,
                                 m=None if family == "binary" else 4, seed=5))


@pytest.mark.parametrize("family", ["binary", "multiclass"])
@pytest.mark.parametrize("case", ["H01", "H02"])
def test_oracle_combination_passes_its_own_test(family, case):
    data, truth = _oracle_case(family, case)
    res = run_npbe_on_fixed_predictor(truth.f_star, data.labels, TestConfig(alpha=0.01, seed=5))
    assert not res.reject


_BIAS = pytest.mark.xfail(strict=True, reason="kernel bias of ce2 at N=2000 exceeds 0.05 here")


@pytest.mark.parametrize("family,case", [
    ("binary", "H01"),
    pytest.param("binary", "H02", marks=_BIAS),
    pytest.param("multiclass", "H01", marks=_BIAS),
    pytest.param("multiclass", "H02", marks=_BIAS),
])
def test_oracle_combination_estimate_within_bias_budget(family, case):
    data, truth = _oracle_case(family, case)
    assert ce2_kde(truth.f_star, data.labels, DEFAULT_BANDWIDTH).value <= 0.05


# -- multiclass family --------------------------------------------------------------
def test_multiclass_constant_weights():
    data, truth = generate(ScenarioSpec(family="multiclass", case="H01", n=50, seed=2))
    assert np.all(truth.lambda_star == truth.lambda_star[0])
    assert abs(truth.lambda_star[0].sum() - 1) <= 1e-12


@pytest.mark.parametrize("case", ["H11", "H12", "H13"])
def test_multiclass_alternative_truth_outside_hull(case):
    data, truth = generate(ScenarioSpec(family="multiclass", case=case, n=60, seed=4))
    for i in range(data.n_instances):
        assert not point_in_hull(truth.f_star[i], data.predictions[i]).inside


def test_member_spread_grows_with_u():
    spreads = []
    for u in (0.1, 0.5, 2.0):
        data, _ = generate(ScenarioSpec(family="multiclass", case="H01", n=300, u=u, seed=6))
        P = data.predictions
        diff = P[:, :, None, :] - P[:, None, :, :]
        spreads.append(np.linalg.norm(diff, axis=-1).mean())
    assert spreads[0] < spreads[1] < spreads[2]


# -- polynomial weights ------------------------------------------------------------
def test_random_polynomials():
    xs = np.linspace(0, 5, 50)
    const = random_scaled_polynomials(3, 0, xs, RngStream(0))
    assert np.allclose(const, const[0])
    varying = 0
    for seed in range(100):
        lam = random_scaled_polynomials(2, 2, xs, RngStream(seed))
        np.testing.assert_allclose(lam.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(lam >= 0)
        varying += np.ptp(lam[:, 0]) > 1e-9
    assert varying >= 99


def test_generation_is_deterministic():
    for family, case in (("binary", "H13"), ("multiclass", "H12")):
        a, ta = generate(ScenarioSpec(family=family, case=case, n=40, seed=9))
        b, tb = generate(ScenarioSpec(family=family, case=case, n=40, seed=9))
        np.testing.assert_array_equal(a.predictions, b.predictions)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(ta.f_star, tb.f_star)
    assert Case.H01.is_null and not Case.H13.is_null
