import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tada.errors import DimensionError, LevelError, TooFewSamplesError
from tada.scoring import (ScoreModel, auto_ridge, calibrate_threshold, center_scores, fit_mcd, fit_plain,
                          score, subset_size)

from .oracles import brute_mcd_logdet


def test_plain_two_points():
    m = fit_plain([[0, 0], [2, 2]])
    assert m.mu.tolist() == [1, 1]
    assert m.sigma.tolist() == [[1, 1], [1, 1]]
    assert m.ridge == auto_ridge(m.sigma)


def test_identical_vectors_are_regularized():
    m = fit_plain(np.ones((5, 3)))
    assert np.all(m.sigma == 0)
    assert m.ridge == 1e-12
    assert score(m, np.ones(3)) == 0.0
    assert math.isfinite(score(m, np.zeros(3)))


def test_shifted_scaled_identity_gives_diagonal_covariance():
    x = np.sqrt(2) * np.eye(3)
    m = fit_plain(x - x.mean(axis=0))
    off = m.sigma[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, -2 / 9, rtol=1e-12)   # 1/n covariance of the centered rows
    np.testing.assert_allclose(np.diag(m.sigma), 4 / 9, rtol=1e-12)


@pytest.mark.parametrize("sigma, v, expected", [
    (np.eye(2), [0, 0], 0.0),
    (np.eye(2), [3, 4], 5.0),
    (np.diag([4.0, 1.0]), [2, 0], 1.0),
])
def test_score_examples(sigma, v, expected):
    # the default ridge perturbs scores by a relative 1e-9 at most
    assert score(ScoreModel.from_moments([0, 0], sigma), v) == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert score(ScoreModel.from_moments([0, 0], sigma, ridge=0.0), v) == pytest.approx(expected, abs=1e-15)


def test_center_scores_example():
    m = ScoreModel.from_moments([0, 0], np.diag([4.0, 1.0]))
    np.testing.assert_allclose(center_scores(m, [2, 3]), [1, 3], atol=1e-9)
    assert center_scores(m, [0, 0]).tolist() == [0, 0]


def test_doubling_sigma_scales_scores():
    base = ScoreModel.from_moments([0, 0], np.diag([4.0, 1.0]), ridge=0)
    doubled = ScoreModel.from_moments([0, 0], np.diag([8.0, 2.0]), ridge=0)
    assert score(doubled, [2, 3]) == pytest.approx(score(base, [2, 3]) / math.sqrt(2), rel=1e-14)


def test_score_matrix_and_dimension_check(rng):
    m = fit_plain(rng.standard_normal((20, 3)))
    x = rng.standard_normal((4, 3))
    np.testing.assert_allclose(score(m, x), [score(m, r) for r in x], rtol=1e-15)
    with pytest.raises(DimensionError):
        score(m, np.zeros(2))


@given(st.integers(0, 2**32 - 1))
def test_affine_equivariance(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    x = rng.standard_normal((30, k))
    a = rng.standard_normal((k, k)) + 3 * np.eye(k)
    b = rng.standard_normal(k)
    v = rng.standard_normal(k)
    m0 = fit_plain(x, ridge=0.0)
    m1 = fit_plain(x @ a.T + b, ridge=0.0)
    assert score(m1, a @ v + b) == pytest.approx(score(m0, v), rel=1e-6)


def test_mcd_toy():
    m = fit_mcd([[0], [0], [0], [0], [100]], h=0.2)
    assert m.mu.tolist() == [0.0]
    assert m.estimator == "mcd"


def test_mcd_without_contamination_is_plain(rng):
    x = rng.standard_normal((40, 3))
    m, p = fit_mcd(x, h=0.0), fit_plain(x)
    assert np.array_equal(m.mu, p.mu) and np.array_equal(m.sigma, p.sigma)
    m2 = fit_mcd(x, h=0.0, c0=2.0)
    np.testing.assert_allclose(m2.sigma, 2 * p.sigma, rtol=1e-15)


def test_mcd_clean_normal_mean():
    x = np.random.default_rng(2024).standard_normal((400, 3))
    m = fit_mcd(x, h=0.1)
    assert np.all(np.abs(m.mu) < 4 / math.sqrt(400))


def test_mcd_matches_exhaustive_subset_search():
    hits = 0
    for trial in range(20):
        rng = np.random.default_rng(trial)
        x = rng.standard_normal((9, 2))
        x[:2] += 6 * rng.standard_normal((2, 2))
        h = 0.25
        size = subset_size(9, h)
        m = fit_mcd(x, h=h, seed=trial)
        lam = auto_ridge(np.cov(x.T, bias=True))
        got = np.linalg.slogdet(m.sigma + lam * np.eye(2))[1]
        hits += abs(got - brute_mcd_logdet(x, size, lam)) <= 1e-9
    assert hits >= 18


def test_mcd_robust_against_far_outliers():
    closer = 0
    for trial in range(20):
        rng = np.random.default_rng(500 + trial)
        clean = rng.standard_normal((90, 2))
        outliers = rng.standard_normal((6, 2)) + [25, -25]
        x = np.vstack([clean, outliers])
        truth = clean.mean(axis=0)
        closer += np.linalg.norm(fit_mcd(x, h=0.1, seed=trial).mu - truth) < np.linalg.norm(x.mean(axis=0) - truth)
    assert closer == 20


def test_mcd_errors():
    with pytest.raises(TooFewSamplesError):
        fit_mcd([[0.0]], h=0.1)
    with pytest.raises(LevelError):
        fit_mcd(np.zeros((5, 1)), h=1.0)
    with pytest.raises(TooFewSamplesError):
        fit_mcd(np.random.default_rng(0).standard_normal((4, 4)), h=0.1)


@pytest.mark.filterwarnings("ignore:delta=")
def test_threshold_counts_exceedances():
    th = calibrate_threshold(np.arange(1, 101), alpha=0.15, delta=0.05)
    assert th.t_hat == 90.0


@pytest.mark.filterwarnings("ignore:delta=")
def test_threshold_constant_scores():
    assert calibrate_threshold(np.full(50, 2.5), alpha=0.1, delta=0.05).t_hat == 2.5


def test_threshold_level_errors():
    for alpha, delta in ((0.05, 0.05), (1.2, 0.1), (0.05, 0.0)):
        with pytest.raises(LevelError):
            calibrate_threshold(np.arange(10.0), alpha=alpha, delta=delta)
    with pytest.raises(TooFewSamplesError):
        calibrate_threshold([], alpha=0.1)


def test_threshold_margin_warning():
    with pytest.warns(UserWarning, match="dependent-sample margin"):
        calibrate_threshold(np.arange(50.0), alpha=0.1, delta=0.01)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=300), st.floats(0.02, 0.9), st.floats(0.05, 0.95))
def test_threshold_postcondition(scores, alpha, frac):
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        th = calibrate_threshold(scores, alpha=alpha, delta=alpha * frac)
    s = np.asarray(scores)
    assert np.mean(s > th.t_hat) <= alpha - alpha * frac + 1e-12
    assert th.t_hat in s
