from __future__ import annotations

import numpy as np
import pytest
from scipy import integrate, stats

from xhold import (
    ConditioningDegenerate,
    FirmNetwork,
    MarketParams,
    conditional_asset_expectation,
    merton_call,
    merton_put,
    price_claims,
    solve_clearing,
)
from xhold.gbm import normals_for_paths, sample_terminal_assets
from xhold.valuation import merton_debt, merton_delta, merton_equity_vol


def lognormal(a, r, sigma, tau):
    return stats.lognorm(s=sigma * np.sqrt(tau), scale=a * np.exp((r - 0.5 * sigma**2) * tau))


@pytest.mark.parametrize("a,K,r,sigma,tau", [(1.0, 0.8, 0.02, 0.2, 1.0), (0.5, 1.0, 0.0, 0.4, 2.0),
                                             (3.0, 1.0, 0.05, 0.1, 0.5)])
def test_call_and_put_against_quadrature(a, K, r, sigma, tau):
    law = lognormal(a, r, sigma, tau)
    call = np.exp(-r * tau) * integrate.quad(lambda x: (x - K) * law.pdf(x), K, np.inf)[0]
    put = np.exp(-r * tau) * integrate.quad(lambda x: (K - x) * law.pdf(x), 0, K)[0]
    assert merton_call(a, K, r, sigma, tau) == pytest.approx(call, rel=1e-8)
    assert merton_put(a, K, r, sigma, tau) == pytest.approx(put, rel=1e-7, abs=1e-12)
    assert merton_call(a, K, r, sigma, tau) + merton_debt(a, K, r, sigma, tau) == pytest.approx(a)


def test_textbook_black_scholes_value():
    # S=100, K=100, r=5%, vol=20%, T=1: call 10.4506
    assert merton_call(100.0, 100.0, 0.05, 0.2, 1.0) == pytest.approx(10.4506, abs=1e-4)
    assert merton_delta(100.0, 100.0, 0.05, 0.2, 1.0) == pytest.approx(0.6368, abs=1e-4)


def test_equity_vol_exceeds_asset_vol():
    v = merton_equity_vol(1.0, 0.8, 0.02, 0.2, 1.0)
    assert v > 0.2
    assert v == pytest.approx(merton_delta(1.0, 0.8, 0.02, 0.2, 1.0) / merton_call(1.0, 0.8, 0.02, 0.2, 1.0) * 0.2)


def test_conditional_expectation_against_quadrature():
    a, K, r, sigma, tau = 1.0, 1.2, 0.03, 0.25, 1.0
    law = lognormal(a, r, sigma, tau)
    num = integrate.quad(lambda x: x * law.pdf(x), K, np.inf)[0]
    assert conditional_asset_expectation(a, K, r, sigma, tau) == pytest.approx(num / law.sf(K), rel=1e-8)


def test_conditional_expectation_degenerate():
    with pytest.raises(ConditioningDegenerate):
        conditional_asset_expectation(1e-3, 1e3, 0.0, 0.05, 1.0)


def test_invalid_closed_form_inputs():
    with pytest.raises(ValueError):
        merton_call(1.0, 0.8, 0.0, 0.0, 1.0)


def test_single_firm_price_matches_black_scholes():
    net = FirmNetwork.unconnected([0.8])
    p = MarketParams(0.02, [0.2], [[1.0]])
    est = price_claims(net, p, [1.0], 200_000, seed=4)
    assert abs(est.equity[0] - merton_call(1.0, 0.8, 0.02, 0.2, 1.0)) <= 3 * est.equity_se[0]
    assert abs(est.recovery[0] - merton_debt(1.0, 0.8, 0.02, 0.2, 1.0)) <= 3 * est.recovery_se[0]


def test_network_prices_satisfy_conservation_in_expectation():
    net = FirmNetwork.two_firm(1.0, 1.5, m12s=0.2, m21s=0.1, m12d=0.3, m21d=0.4)
    p = MarketParams.two_asset(0.3, 0.2, 0.25, rate=0.03)
    a = np.array([1.1, 1.4])
    N, seed = 100_000, 9
    est = price_claims(net, p, a, N, seed)
    A = sample_terminal_assets(p, a, normals_for_paths(seed, N, 2))
    disc_assets = p.discount * A.mean(axis=0)
    lhs = est.equity + est.recovery
    rhs = disc_assets + net.eq_hold @ est.equity + net.debt_hold @ est.recovery
    assert np.allclose(lhs, rhs, atol=1e-12)
    assert np.all(est.recovery <= p.discount * net.debt)


def test_prices_reproducible_across_workers():
    net = FirmNetwork.two_firm(1.0, 1.0, m12d=0.5, m21d=0.5)
    p = MarketParams.two_asset(0.2, 0.2, 0.0)
    one = price_claims(net, p, [1.0, 1.0], 100_000, seed=1)
    four = price_claims(net, p, [1.0, 1.0], 100_000, seed=1, workers=4)
    assert np.array_equal(one.x_t.stacked, four.x_t.stacked)
    assert np.array_equal(one.se, four.se)


def test_larger_network_matches_per_path_solves():
    rng = np.random.default_rng(0)
    n = 4
    md = rng.uniform(0, 0.3, (n, n))
    ms = rng.uniform(0, 0.2, (n, n))
    np.fill_diagonal(md, 0)
    np.fill_diagonal(ms, 0)
    net = FirmNetwork(np.ones(n), ms, md)
    p = MarketParams(0.01, np.full(n, 0.3), np.eye(n))
    a = np.full(n, 0.9)
    N, seed = 3000, 2
    est = price_claims(net, p, a, N, seed)
    A = sample_terminal_assets(p, a, normals_for_paths(seed, N, n))
    ref = np.mean([solve_clearing(row, net)[0].stacked for row in A], axis=0) * p.discount
    assert np.allclose(est.x_t.stacked, ref, atol=1e-12)


def test_price_input_checks():
    net = FirmNetwork.unconnected([1.0, 1.0])
    p = MarketParams.two_asset(0.2, 0.2, 0.0)
    with pytest.raises(ValueError):
        price_claims(net, p, [1.0, -1.0], 100)
    with pytest.raises(ValueError):
        price_claims(net, p, [1.0, 1.0], 1)
