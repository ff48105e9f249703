from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_two_firm, two_firm_networks
from xhold import (
    FirmNetwork,
    NotTwoFirms,
    SuzukiRegion,
    classify_region,
    closed_form_payoff,
    solve_clearing,
)
from xhold.network import total_value
from xhold.suzuki import closed_form_batch, region_candidate, self_consistent_region

DEBT_HALF = FirmNetwork.two_firm(1.0, 1.0, m12d=0.5, m21d=0.5)


def test_solvent_corner():
    assert classify_region([10.0, 10.0], DEBT_HALF) is SuzukiRegion.SS
    x = closed_form_payoff([2.0, 2.0], DEBT_HALF)
    assert np.allclose(x.equity, [1.5, 1.5])
    assert np.allclose(x.recovery, [1.0, 1.0])


def test_default_corner():
    assert classify_region([0.01, 0.01], DEBT_HALF) is SuzukiRegion.DD
    x = closed_form_payoff([0.4, 0.4], DEBT_HALF)
    assert np.allclose(x.equity, [0.0, 0.0])
    assert np.allclose(x.recovery, [0.8, 0.8])


def test_mixed_regions():
    net = FirmNetwork.two_firm(1.0, 1.0, m12d=0.3, m21d=0.3)
    assert classify_region([3.0, 0.2], net) is SuzukiRegion.SD
    assert classify_region([0.2, 3.0], net) is SuzukiRegion.DS


def test_region_solvency_flags():
    assert SuzukiRegion.SD.solvent == (True, False)
    assert SuzukiRegion.from_solvency([0, 1]) is SuzukiRegion.DS


def test_requires_two_firms():
    with pytest.raises(NotTwoFirms):
        closed_form_payoff([1.0, 1.0, 1.0], FirmNetwork.unconnected([1.0, 1.0, 1.0]))


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.1, 5), st.floats(0.1, 5))
def test_no_network_reduces_to_merton(a1, a2, d1, d2):
    x = closed_form_payoff([a1, a2], FirmNetwork.unconnected([d1, d2]))
    assert np.array_equal(x.equity, [max(a1 - d1, 0.0), max(a2 - d2, 0.0)])
    assert np.array_equal(x.recovery, [min(a1, d1), min(a2, d2)])


@given(two_firm_networks(), st.integers(0, 10**6))
def test_closed_form_matches_iteration(net, seed):
    a = np.random.default_rng(seed).uniform(0.05, 10.0, 2)
    x_cf = closed_form_payoff(a, net)
    x_it, _ = solve_clearing(a, net)
    assert np.max(np.abs(x_cf.stacked - x_it.stacked)) <= 1e-10
    assert self_consistent_region(a, net) is classify_region(a, net)


def test_oracle_equivalence_batch(rng):
    for _ in range(200):
        net, _ = random_two_firm(rng)
        A = rng.uniform(0.05, 10.0, (50, 2))
        X, codes = closed_form_batch(A, net)
        for row, x, code in zip(A, X, codes):
            ref, _ = solve_clearing(row, net)
            assert np.max(np.abs(x - ref.stacked)) <= 1e-10
            assert code == classify_region(row, net).value


@given(two_firm_networks(), st.integers(0, 10**6))
def test_denominators_positive(net, _seed):
    h = net.eq_hold[0, 1], net.eq_hold[1, 0], net.debt_hold[0, 1], net.debt_hold[1, 0]
    m12s, m21s, m12d, m21d = h
    for den in (1 - m12s * m21s, 1 - m12d * m21s, 1 - m12s * m21d, 1 - m12d * m21d):
        assert den > 0


def _boundary_point(net, firm, other, lo=1e-6, hi=50.0):
    """Own asset where v_firm = d_firm, by bisection on the iterative solution."""
    def gap(own):
        a = np.empty(2)
        a[firm], a[1 - firm] = own, other
        x, _ = solve_clearing(a, net)
        return total_value(a, x, net)[firm] - net.debt[firm]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if gap(mid) < 0 else (lo, mid)
    a = np.empty(2)
    a[firm], a[1 - firm] = 0.5 * (lo + hi), other
    return a


@pytest.mark.parametrize("firm", [0, 1])
@pytest.mark.parametrize("other", [0.3, 2.0])
def test_branches_agree_on_boundary(firm, other):
    net = FirmNetwork.two_firm(1.0, 1.5, m12s=0.2, m21s=0.3, m12d=0.4, m21d=0.6)
    a = _boundary_point(net, firm, other)
    eps = 1e-7
    below = a.copy()
    below[firm] -= eps
    above = a.copy()
    above[firm] += eps
    r_lo, r_hi = classify_region(below, net), classify_region(above, net)
    assert r_lo is not r_hi
    gap = region_candidate(r_lo, a, net) - region_candidate(r_hi, a, net)
    assert np.max(np.abs(gap)) <= 1e-12


def test_region_boundaries_piecewise_linear():
    # along the firm-1 boundary the crossing point moves linearly within one region of firm 2
    net = FirmNetwork.two_firm(1.0, 1.0, m12d=0.6, m21d=0.6)
    others = np.array([2.0, 2.5, 3.0])
    pts = np.array([_boundary_point(net, 0, o)[0] for o in others])
    assert np.allclose(np.diff(pts, 2), 0.0, atol=1e-9)
