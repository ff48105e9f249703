"""Network Delta: sensitivities of equity and debt prices to spot asset values.

On every solvency region the clearing map is linear, so by the implicit
function theorem

    dx*/da = (I - dg/dx)^{-1} [diag(xi); diag(1 - xi)]

is constant there. Differentiating along each simulated path then gives the
pathwise estimator ``exp(-r tau) J(xi(A_T)) diag(A_T / a_t)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._engine import Moments, clear_batch, run_blocks
from .errors import EmptyRegion, NotTwoFirms, SingularSystem
from .gbm import MarketParams
from .network import DEFAULT_MAX_ITER, DEFAULT_TOL, FirmNetwork, k_matrix
from .suzuki import SuzukiRegion
from .valuation import check_inputs


@dataclass(frozen=True)
class DeltaMatrix:
    """``D[i, j] = d x_{i,t} / d a_{j,t}``; equity rows first, then debt rows."""

    D: np.ndarray
    se: np.ndarray
    n_paths: int = 0
    seed: int = 0

    @property
    def n(self) -> int:
        return self.D.shape[1]

    @property
    def equity(self) -> np.ndarray:
        return self.D[: self.n]

    @property
    def debt(self) -> np.ndarray:
        return self.D[self.n:]

    @property
    def equity_se(self) -> np.ndarray:
        return self.se[: self.n]


def region_jacobian(xi, net: FirmNetwork) -> np.ndarray:
    """``dx*/da`` (shape ``(2n, n)``) on the solvency region ``xi``."""
    xi = np.asarray(xi, dtype=float)
    n = net.n
    lhs = np.eye(2 * n) - k_matrix(xi, net)
    rhs = np.vstack([np.diag(xi), np.diag(1.0 - xi)])
    try:
        J = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"I - dg/dx singular for pattern {xi.tolist()}") from exc
    if not np.all(np.isfinite(J)):
        raise SingularSystem(f"non-finite Jacobian for pattern {xi.tolist()}")
    return J


def two_bank_solvent_jacobian(net: FirmNetwork) -> np.ndarray:
    """All-solvent two-firm Jacobian via the block (Schur complement) inverse."""
    if net.n != 2:
        raise NotTwoFirms("Schur-complement form is written for two firms")
    m12, m21 = net.eq_hold[0, 1], net.eq_hold[1, 0]
    equity = np.array([[1.0, m12], [m21, 1.0]]) / (1.0 - m12 * m21)
    return np.vstack([equity, np.zeros((2, 2))])


class JacobianCache:
    """Region Jacobians keyed by solvency pattern; at most ``2^n`` entries."""

    def __init__(self, net: FirmNetwork):
        self.net = net
        self._cache = {}

    def __getitem__(self, xi) -> np.ndarray:
        key = bytes(np.asarray(xi, dtype=np.int8))
        J = self._cache.get(key)
        if J is None:
            J = region_jacobian(np.asarray(xi), self.net)
            self._cache[key] = J
        return J

    def stack(self, patterns) -> np.ndarray:
        return np.stack([self[p] for p in patterns])

    def per_path(self, xi) -> np.ndarray:
        """Jacobian of every row's pattern, shape ``(N, 2n, n)``."""
        n = self.net.n
        if n > 20:
            patterns, inverse = np.unique(xi, axis=0, return_inverse=True)
            return self.stack(patterns)[inverse.reshape(-1)]
        codes = xi.astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))
        present = np.flatnonzero(np.bincount(codes, minlength=1 << n))
        table = np.zeros((int(present[-1]) + 1, 2 * n, n))
        for c in present:
            table[c] = self[(c >> np.arange(n)) & 1]
        return table[codes]


def price_delta_block(net, params, a_t, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Per-block callback yielding ``[x (2n), D.ravel() (2n*n)]`` discounted, per path."""
    disc = params.discount
    cache = JacobianCache(net)
    a_t = np.asarray(a_t, dtype=float)

    def block(A, Z):
        X, xi = clear_batch(A, net, tol, max_iter)
        J = cache.per_path(xi)
        growth = A / a_t
        D = disc * J * growth[:, None, :]
        return np.hstack([disc * X, D.reshape(A.shape[0], -1)])

    return block


def price_delta_moments(net, params, a_t, n_paths, seed, *, full=False, workers=1,
                        tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER) -> Moments:
    a_t = check_inputs(net, params, a_t)
    block = price_delta_block(net, params, a_t, tol, max_iter)
    return run_blocks(params, a_t, n_paths, seed, block, full=full, workers=workers)


def pathwise_delta(net: FirmNetwork, params: MarketParams, a_t, n_paths: int = 100_000,
                   seed: int = 0, *, workers: int = 1, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> DeltaMatrix:
    """Pathwise Monte-Carlo estimate of the network Delta matrix.

    Paths sitting exactly on a default boundary take the solvent branch.
    """
    n = net.n
    mom = price_delta_moments(net, params, a_t, n_paths, seed, workers=workers,
                              tol=tol, max_iter=max_iter)
    D = mom.mean[2 * n:].reshape(2 * n, n)
    se = mom.se[2 * n:].reshape(2 * n, n)
    return DeltaMatrix(D, se, int(n_paths), int(seed))


def finite_difference_delta(net: FirmNetwork, params: MarketParams, a_t, bump: float = 1e-4,
                            n_paths: int = 100_000, seed: int = 0, *, workers: int = 1,
                            tol: float = DEFAULT_TOL,
                            max_iter: int = DEFAULT_MAX_ITER) -> DeltaMatrix:
    """Central finite differences of Monte-Carlo prices under common random numbers.

    Terminal assets scale linearly with the spot, so the bumped runs reuse
    each path's draws; the standard error is that of the per-path differences.
    """
    if not 0 < bump <= 0.1:
        raise ValueError("bump must lie in (0, 0.1]")
    a_t = check_inputs(net, params, a_t)
    n = net.n
    disc = params.discount
    h = bump * a_t

    def block(A, Z):
        cols = []
        for j in range(n):
            up = A.copy()
            dn = A.copy()
            up[:, j] *= (a_t[j] + h[j]) / a_t[j]
            dn[:, j] *= (a_t[j] - h[j]) / a_t[j]
            X_up, _ = clear_batch(up, net, tol, max_iter)
            X_dn, _ = clear_batch(dn, net, tol, max_iter)
            cols.append(disc * (X_up - X_dn) / (2.0 * h[j]))
        return np.stack(cols, axis=2).reshape(A.shape[0], -1)  # row-major (2n, n)

    mom = run_blocks(params, a_t, n_paths, seed, block, workers=workers)
    return DeltaMatrix(mom.mean.reshape(2 * n, n), mom.se.reshape(2 * n, n),
                       int(n_paths), int(seed))


_REGIONS = (SuzukiRegion.SS, SuzukiRegion.SD, SuzukiRegion.DS, SuzukiRegion.DD)


@dataclass(frozen=True)
class RegionDecomposition:
    """Region probabilities, conditional asset growth and the reassembled equity Delta."""

    pi: dict
    pi_se: dict
    condexp: dict
    condexp_se: dict
    delta: np.ndarray
    delta_se: np.ndarray
    empty_regions: list = field(default_factory=list)

    def condexp_for(self, region: SuzukiRegion, firm: int) -> float:
        """``E[A_{firm,T} / a_firm | region]``; raises ``EmptyRegion`` if unobserved."""
        if region in self.empty_regions:
            raise EmptyRegion(f"no simulated path fell in region {region.name}")
        return self.condexp[(region, firm)]


def _decomposition_weights(net: FirmNetwork) -> np.ndarray:
    """Coefficients mapping ``E[g_i 1_R]`` columns to the four equity Deltas.

    Column layout of the per-path samples: for each region R in
    (SS, SD, DS, DD): ``1_R, g_1 1_R, g_2 1_R``.
    """
    m12s, m21s = net.eq_hold[0, 1], net.eq_hold[1, 0]
    m12d, m21d = net.debt_hold[0, 1], net.debt_hold[1, 0]
    c_ss = 1.0 / (1.0 - m12s * m21s)
    c_sd = 1.0 / (1.0 - m12d * m21s)
    c_ds = 1.0 / (1.0 - m12s * m21d)
    W = np.zeros((4, 12))
    col = {r: 3 * k for k, r in enumerate(_REGIONS)}
    ss, sd, ds = col[SuzukiRegion.SS], col[SuzukiRegion.SD], col[SuzukiRegion.DS]
    # delta_11
    W[0, ss + 1] = c_ss
    W[0, sd + 1] = c_sd
    # delta_12
    W[1, ss + 2] = c_ss * m12s
    W[1, sd + 2] = c_sd * m12d
    # delta_21
    W[2, ss + 1] = c_ss * m21s
    W[2, ds + 1] = c_ds * m21d
    # delta_22
    W[3, ss + 2] = c_ss
    W[3, ds + 2] = c_ds
    return W


def two_bank_decomposition(net: FirmNetwork, params: MarketParams, a_t, n_paths: int = 100_000,
                           seed: int = 0, *, workers: int = 1) -> RegionDecomposition:
    """Equity Delta of two firms rebuilt from region probabilities and conditional means.

    Uses the same draws as :func:`pathwise_delta` for equal ``seed``. The
    reassembled Delta carries the discount factor ``exp(-r tau)``.
    """
    if net.n != 2:
        raise NotTwoFirms("the region decomposition is defined for two firms")
    a_t = check_inputs(net, params, a_t)

    def block(A, Z):
        _, xi = clear_batch(A, net)
        code = xi[:, 0] + 2 * xi[:, 1]
        g = A / a_t
        cols = []
        for region in _REGIONS:
            ind = (code == region.value).astype(float)
            cols.extend([ind, g[:, 0] * ind, g[:, 1] * ind])
        return np.stack(cols, axis=1)

    mom = run_blocks(params, a_t, n_paths, seed, block, full=True, workers=workers)
    mean = mom.mean
    cov = mom.mean_covariance
    pi, pi_se, cond, cond_se, empty = {}, {}, {}, {}, []
    for k, region in enumerate(_REGIONS):
        i = 3 * k
        p = mean[i]
        pi[region] = float(p)
        pi_se[region] = float(np.sqrt(max(cov[i, i], 0.0)))
        if p == 0.0:
            empty.append(region)
            continue
        for firm in (1, 2):
            j = i + firm
            mu = mean[j] / p
            # ratio estimator, first-order delta method
            var = (cov[j, j] - 2 * mu * cov[i, j] + mu * mu * cov[i, i]) / (p * p)
            cond[(region, firm)] = float(mu)
            cond_se[(region, firm)] = float(np.sqrt(max(var, 0.0)))

    m12s, m21s = net.eq_hold[0, 1], net.eq_hold[1, 0]
    m12d, m21d = net.debt_hold[0, 1], net.debt_hold[1, 0]

    def term(region, firm, coef):
        if region in empty or coef == 0.0:
            return 0.0
        return pi[region] * coef * cond[(region, firm)]

    c_ss = 1.0 / (1.0 - m12s * m21s)
    c_sd = 1.0 / (1.0 - m12d * m21s)
    c_ds = 1.0 / (1.0 - m12s * m21d)
    SS, SD, DS = SuzukiRegion.SS, SuzukiRegion.SD, SuzukiRegion.DS
    disc = params.discount
    delta = disc * np.array([
        [term(SS, 1, c_ss) + term(SD, 1, c_sd),
         term(SS, 2, c_ss * m12s) + term(SD, 2, c_sd * m12d)],
        [term(SS, 1, c_ss * m21s) + term(DS, 1, c_ds * m21d),
         term(SS, 2, c_ss) + term(DS, 2, c_ds)],
    ])
    W = disc * _decomposition_weights(net)
    delta_se = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", W, cov, W), 0.0)).reshape(2, 2)
    return RegionDecomposition(pi, pi_se, cond, cond_se, delta, delta_se, empty)
