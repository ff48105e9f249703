"""Risk-neutral prices of network equity and debt, plus single-firm Merton formulas."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from ._engine import clear_batch, run_blocks
from .errors import ConditioningDegenerate, DimensionMismatch
from .gbm import MarketParams
from .network import DEFAULT_MAX_ITER, DEFAULT_TOL, ClaimVector, FirmNetwork, require_valid


@dataclass(frozen=True)
class PriceEstimate:
    x_t: ClaimVector
    se: np.ndarray
    n_paths: int
    seed: int

    @property
    def equity(self) -> np.ndarray:
        return self.x_t.equity

    @property
    def recovery(self) -> np.ndarray:
        return self.x_t.recovery

    @property
    def equity_se(self) -> np.ndarray:
        return self.se[: self.se.shape[0] // 2]

    @property
    def recovery_se(self) -> np.ndarray:
        return self.se[self.se.shape[0] // 2:]


def check_inputs(net: FirmNetwork, params: MarketParams, a_t) -> np.ndarray:
    require_valid(net)
    a_t = np.atleast_1d(np.asarray(a_t, dtype=float))
    if a_t.shape != (net.n,) or params.n != net.n:
        raise DimensionMismatch(
            f"network has {net.n} firms, market {params.n} assets, spot vector {a_t.shape}"
        )
    if np.any(a_t <= 0):
        raise ValueError("spot asset values must be positive")
    return a_t


def price_claims(net: FirmNetwork, params: MarketParams, a_t, n_paths: int = 100_000,
                 seed: int = 0, *, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                 workers: int = 1) -> PriceEstimate:
    """Monte-Carlo time-t prices ``E[exp(-r tau) x*(A_T)]`` of all 2n claims.

    One clearing solve per path prices every claim; the same ``seed`` gives
    the same draws for any parameters, so comparisons use common random numbers.
    """
    a_t = check_inputs(net, params, a_t)
    disc = params.discount

    def block(A, Z):
        X, _ = clear_batch(A, net, tol, max_iter)
        return disc * X

    mom = run_blocks(params, a_t, n_paths, seed, block, workers=workers)
    return PriceEstimate(ClaimVector.from_stacked(mom.mean), mom.se, int(n_paths), int(seed))


def d_plus_minus(a_t, K, r, sigma, tau):
    """Black-Scholes ``(d+, d-)``."""
    vol = sigma * np.sqrt(tau)
    d_plus = (np.log(a_t / K) + (r + 0.5 * sigma**2) * tau) / vol
    return d_plus, d_plus - vol


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if not np.all(np.asarray(value) > 0):
            raise ValueError(f"{name} must be positive")


def merton_call(a_t, K, r, sigma, tau):
    """Equity of a stand-alone firm: a European call on its assets struck at the debt."""
    _check_positive(a_t=a_t, K=K, sigma=sigma, tau=tau)
    dp, dm = d_plus_minus(a_t, K, r, sigma, tau)
    return a_t * ndtr(dp) - K * np.exp(-r * tau) * ndtr(dm)


def merton_put(a_t, K, r, sigma, tau):
    _check_positive(a_t=a_t, K=K, sigma=sigma, tau=tau)
    dp, dm = d_plus_minus(a_t, K, r, sigma, tau)
    return K * np.exp(-r * tau) * ndtr(-dm) - a_t * ndtr(-dp)


def merton_debt(a_t, K, r, sigma, tau):
    """Price of the recovery ``min(K, A_T) = K - (K - A_T)^+``."""
    return K * np.exp(-r * tau) - merton_put(a_t, K, r, sigma, tau)


def merton_delta(a_t, K, r, sigma, tau):
    _check_positive(a_t=a_t, K=K, sigma=sigma, tau=tau)
    return ndtr(d_plus_minus(a_t, K, r, sigma, tau)[0])


def merton_equity_vol(a_t, K, r, sigma, tau):
    """Equity volatility ``Phi(d+) * a_t / call * sigma`` of a stand-alone firm."""
    return merton_delta(a_t, K, r, sigma, tau) * a_t / merton_call(a_t, K, r, sigma, tau) * sigma


def conditional_asset_expectation(a_t, K, r, sigma, tau):
    """``E[A_T | A_T >= K] = a_t exp(r tau) Phi(d+) / Phi(d-)`` under the risk-neutral measure."""
    _check_positive(a_t=a_t, K=K, sigma=sigma, tau=tau)
    dp, dm = d_plus_minus(a_t, K, r, sigma, tau)
    p_exceed = ndtr(dm)
    if np.any(p_exceed < np.finfo(float).tiny):
        raise ConditioningDegenerate(
            "P(A_T >= K) underflows; conditional expectation is not computable"
        )
    return a_t * np.exp(r * tau) * ndtr(dp) / p_exceed
