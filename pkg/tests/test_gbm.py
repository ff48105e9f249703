from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xhold import MarketParams, cholesky, sample_terminal_assets
from xhold.errors import InvalidMarket, NotPSD, NotSymmetric
from xhold.gbm import block_layout, normals_for_paths, standard_normals


def test_identity_factor():
    assert np.array_equal(cholesky(np.eye(2)), np.eye(2))


def test_two_by_two_hand_value():
    s1, s2, rho = 0.2, 0.4, 0.5
    cov = np.array([[s1 * s1, rho * s1 * s2], [rho * s1 * s2, s2 * s2]])
    L = cholesky(cov)
    assert np.allclose(L, [[0.2, 0.0], [0.2, 0.2 * np.sqrt(3.0)]], atol=1e-15)
    # correlation recovered from the factor's second row
    assert L[1, 0] / np.hypot(L[1, 0], L[1, 1]) == pytest.approx(rho)


@pytest.mark.parametrize("rho", [1.0, -1.0])
def test_perfect_correlation_gives_zero_column(rho):
    L = cholesky([[1.0, rho], [rho, 1.0]])
    assert L[1, 1] == 0.0
    assert np.allclose(L @ L.T, [[1.0, rho], [rho, 1.0]], atol=1e-15)


def test_not_psd_and_not_symmetric():
    with pytest.raises(NotPSD):
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotSymmetric):
        cholesky([[1.0, 0.2], [0.3, 1.0]])


def test_small_negative_pivot_tolerated():
    eps = 1e-12
    L = cholesky([[1.0, 1.0 + eps], [1.0 + eps, 1.0]])
    assert L[1, 1] == 0.0


@given(st.integers(1, 8), st.integers(0, 10**6))
def test_reconstruction(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n + 2))
    S = B @ B.T
    L = cholesky(S)
    assert np.allclose(L, np.tril(L))
    assert np.all(np.diag(L) >= 0)
    assert np.linalg.norm(L @ L.T - S) <= 1e-12 * max(1.0, np.linalg.norm(S))


def test_reconstruction_matches_numpy():
    rng = np.random.default_rng(3)
    B = rng.normal(size=(5, 5))
    S = B @ B.T + 5 * np.eye(5)
    assert np.allclose(cholesky(S), np.linalg.cholesky(S), atol=1e-13)


def test_market_validation():
    with pytest.raises(InvalidMarket):
        MarketParams.two_asset(0.2, -0.1, 0.0)
    with pytest.raises(InvalidMarket):
        MarketParams(0.0, [0.2, 0.2], [[1.0, 0.1], [0.1, 0.9]])
    with pytest.raises(InvalidMarket):
        MarketParams(0.0, [0.2], [[1.0]], t=1.0, maturity=1.0)
    p = MarketParams(0.03, [0.2], [[1.0]], t=0.5, maturity=2.0)
    assert p.tau == 1.5 and p.discount == pytest.approx(np.exp(-0.045))


def test_zero_draw_is_drift_only():
    p = MarketParams.two_asset(0.2, 0.3, 0.4, rate=0.05, tau=2.0)
    A = sample_terminal_assets(p, [1.0, 2.0], np.zeros(2))
    assert np.allclose(A, [np.exp((0.05 - 0.02) * 2), 2 * np.exp((0.05 - 0.045) * 2)])


def test_tiny_vol_grows_at_rate():
    p = MarketParams.two_asset(1e-9, 1e-9, 0.0, rate=0.04)
    Z = normals_for_paths(0, 100, 2)
    A = sample_terminal_assets(p, [1.0, 3.0], Z)
    assert np.allclose(A / [1.0, 3.0], np.exp(0.04), rtol=1e-7)


def test_discounted_martingale_and_log_moments():
    p = MarketParams(0.03, [0.2, 0.5, 0.3],
                     [[1.0, 0.4, -0.2], [0.4, 1.0, 0.1], [-0.2, 0.1, 1.0]], maturity=1.5)
    N = 1_000_000
    a = np.array([1.0, 2.0, 0.5])
    A = sample_terminal_assets(p, a, normals_for_paths(11, N, 3))
    assert np.all(A > 0)
    ratio = A / a
    se = ratio.std(axis=0, ddof=1) / np.sqrt(N)
    assert np.all(np.abs(ratio.mean(axis=0) - np.exp(p.rate * p.tau)) <= 3 * se)
    logs = np.log(ratio)
    mean_target = (p.rate - 0.5 * p.sigma**2) * p.tau
    sd = np.sqrt(np.diag(p.covariance) * p.tau)
    assert np.all(np.abs(logs.mean(axis=0) - mean_target) <= 4 * sd / np.sqrt(N))
    cov_target = p.covariance * p.tau
    rel = 4 / np.sqrt(N)
    assert np.allclose(np.cov(logs.T), cov_target, rtol=0, atol=rel * np.max(np.abs(cov_target)))


def test_block_streams_reproducible_and_prefix_stable():
    a = normals_for_paths(7, 70_000, 2)
    b = normals_for_paths(7, 70_000, 2)
    assert np.array_equal(a, b)
    c = normals_for_paths(7, 40_000, 2)
    assert np.array_equal(a[:32768], c[:32768])
    assert not np.array_equal(a, normals_for_paths(8, 70_000, 2))
    assert not standard_normals(7, 0, 10, 2).flags.writeable


def test_block_layout():
    assert block_layout(10, 4) == [(0, 4), (1, 4), (2, 2)]
    with pytest.raises(ValueError):
        block_layout(0)
