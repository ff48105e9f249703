"""Equity volatility and correlation implied by the network Delta.

Equity prices are smooth functions of the spot assets, so by Ito's lemma
their diffusion loadings are ``L_s = diag(s)^-1 Delta diag(a) diag(sigma) L``
with ``L`` the Cholesky factor of the asset correlation. For two firms the
resulting correlation has the closed form implemented in
:func:`equity_correlation_closed_form`, which is never below the asset
correlation when the cross-Deltas are non-negative.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotTwoFirms, PreconditionViolated, ZeroEquity
from .gbm import MarketParams, cholesky
from .greeks import price_delta_moments
from .network import FirmNetwork

EQUITY_FLOOR = 1e-10


def _equity_floor(a_t) -> float:
    return EQUITY_FLOOR * float(np.max(a_t))


def equity_vol_matrix(delta_eq, s_t, a_t, params: MarketParams) -> np.ndarray:
    """Equity loading matrix ``l_ij = sum_k Delta_ik a_k / s_i * l_kj`` (not triangular)."""
    delta_eq = np.atleast_2d(np.asarray(delta_eq, dtype=float))
    s_t = np.atleast_1d(np.asarray(s_t, dtype=float))
    a_t = np.atleast_1d(np.asarray(a_t, dtype=float))
    if np.any(s_t <= _equity_floor(a_t)):
        raise ZeroEquity(f"equity {s_t.tolist()} too close to zero; leverage undefined")
    asset_loading = params.sigma[:, None] * cholesky(params.corr)
    return (delta_eq * a_t[None, :] / s_t[:, None]) @ asset_loading


def equity_covariance(delta_eq, s_t, a_t, params: MarketParams) -> np.ndarray:
    """Instantaneous covariance of equity returns per unit time."""
    L_s = equity_vol_matrix(delta_eq, s_t, a_t, params)
    return L_s @ L_s.T


def correlation_from_covariance(cov) -> np.ndarray:
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def equity_correlation_closed_form(delta_eq, a_t, s_t, sigma, rho):
    """Two-firm equity correlation ``rho_s`` and the sign that fixes it.

    Returns ``(rho_s, sign)``. The magnitude comes from

        1 / rho_s^2 = 1 + ((1 - q) sqrt(1 - rho^2) / y)^2,
        q = D12 D21 / (D11 D22),
        y = D21 a1 s1 / (D22 a2 s2) + (1 + q) rho + D12 a2 s2 / (D11 a1 s1)

    (``s1, s2`` here the asset vols) and the sign is that of the equity
    covariance ``l11 l21 + l12 l22``. A vanishing covariance gives 0.
    Equity levels cancel, so ``s_t`` only enters through that sign.
    """
    D = np.asarray(delta_eq, dtype=float)
    a1, a2 = (float(v) for v in a_t)
    s1, s2 = (float(v) for v in s_t)
    v1, v2 = (float(v) for v in sigma)
    rho = float(rho)
    if not (D[0, 0] > 0 and D[1, 1] > 0):
        raise PreconditionViolated("own-asset equity Deltas must be positive")
    q = D[0, 1] * D[1, 0] / (D[0, 0] * D[1, 1])
    root = np.sqrt(max(1.0 - rho * rho, 0.0))
    cov_term = (D[0, 0] * a1 * D[1, 0] * a1 * v1 * v1
                + (D[0, 0] * a1 * D[1, 1] * a2 + D[0, 1] * a2 * D[1, 0] * a1) * v1 * v2 * rho
                + D[0, 1] * a2 * D[1, 1] * a2 * v2 * v2) / (s1 * s2)
    sign = float(np.sign(cov_term))
    if sign == 0.0:
        return 0.0, 0.0
    y = (D[1, 0] * a1 * v1 / (D[1, 1] * a2 * v2) + (1.0 + q) * rho
         + D[0, 1] * a2 * v2 / (D[0, 0] * a1 * v1))
    if y == 0.0:
        return 0.0, sign
    # 1 / sqrt(1 + (b / y)^2) written as |y| / hypot(y, b) to avoid overflow for tiny y
    return sign * abs(y) / float(np.hypot(y, (1.0 - q) * root)), sign


@dataclass(frozen=True)
class CorrelationReport:
    L_s: np.ndarray
    Sigma_s: np.ndarray
    rho_s: float
    rho: float
    sign_source: float
    se: dict = field(default_factory=dict)
    delta_eq: np.ndarray | None = None
    s_t: np.ndarray | None = None
    a_t: np.ndarray | None = None
    n_paths: int = 0
    seed: int = 0

    @property
    def rho_s_se(self) -> float:
        return float(self.se.get("rho_s", 0.0))


def _two_firm_outputs(theta, a_t, params: MarketParams):
    """Map ``(s1, s2, D11, D12, D21, D22)`` to ``[rho_s, L_s.ravel(), Sigma_s.ravel()]``."""
    s_t = theta[:2]
    D = theta[2:].reshape(2, 2)
    rho = params.corr[0, 1]
    rho_s, _ = equity_correlation_closed_form(D, a_t, s_t, params.sigma, rho)
    L_s = equity_vol_matrix(D, s_t, a_t, params)
    return np.concatenate([[rho_s], L_s.ravel(), (L_s @ L_s.T).ravel()])


def _delta_method_se(f, theta, cov, rel_step=1e-6):
    base = f(theta)
    jac = np.empty((base.shape[0], theta.shape[0]))
    for k in range(theta.shape[0]):
        h = rel_step * max(abs(theta[k]), 1e-8)
        up = theta.copy()
        dn = theta.copy()
        up[k] += h
        dn[k] -= h
        jac[:, k] = (f(up) - f(dn)) / (2 * h)
    var = np.einsum("ij,jk,ik->i", jac, cov, jac)
    return base, np.sqrt(np.maximum(var, 0.0))


def equity_correlation_mc(net: FirmNetwork, params: MarketParams, a_t, n_paths: int = 100_000,
                          seed: int = 0, *, workers: int = 1) -> CorrelationReport:
    """Monte-Carlo equity correlation of two firms with delta-method standard errors.

    Prices and pathwise Deltas come from one simulation; their joint sample
    covariance is propagated through the closed form to first order.
    """
    if net.n != 2:
        raise NotTwoFirms("closed-form equity correlation needs two firms")
    a_t = np.atleast_1d(np.asarray(a_t, dtype=float))
    mom = price_delta_moments(net, params, a_t, n_paths, seed, full=True, workers=workers)
    idx = np.array([0, 1, 4, 5, 6, 7])  # s1, s2, then equity rows of D (row-major)
    theta = mom.mean[idx].copy()
    cov = mom.mean_covariance[np.ix_(idx, idx)]
    s_t = theta[:2]
    if np.any(s_t <= _equity_floor(a_t)):
        raise ZeroEquity(f"equity prices {s_t.tolist()} are numerically zero at spot {a_t.tolist()}")
    D = theta[2:].reshape(2, 2)
    rho = float(params.corr[0, 1])
    rho_s, sign = equity_correlation_closed_form(D, a_t, s_t, params.sigma, rho)
    out, out_se = _delta_method_se(lambda th: _two_firm_outputs(th, a_t, params), theta, cov)
    L_s = out[1:5].reshape(2, 2)
    Sigma_s = out[5:9].reshape(2, 2)
    se = {
        "rho_s": float(out_se[0]),
        "L_s": out_se[1:5].reshape(2, 2),
        "Sigma_s": out_se[5:9].reshape(2, 2),
        "s_t": np.sqrt(np.diag(cov)[:2]),
        "delta_eq": np.sqrt(np.diag(cov)[2:]).reshape(2, 2),
    }
    return CorrelationReport(L_s, Sigma_s, float(rho_s), rho, sign, se, D, s_t, a_t,
                             int(n_paths), int(seed))


@dataclass(frozen=True)
class DominanceCheck:
    passed: bool
    margin: float
    allowance: float


def check_theorem_dominance(report: CorrelationReport, n_se: float = 3.0) -> DominanceCheck:
    """Equity correlation must not fall below the asset correlation (up to ``n_se`` s.e.)."""
    allowance = n_se * report.rho_s_se
    margin = report.rho_s - report.rho
    return DominanceCheck(bool(margin >= -allowance), float(margin), float(allowance))
