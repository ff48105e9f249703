"""Correlated geometric Brownian motion under the risk-neutral measure.

Terminal values are sampled exactly::

    A_T = a_t * exp((r - sigma^2 / 2) tau + sqrt(tau) * sigma * (L Z))

with ``L`` the (semi-definite) Cholesky factor of the correlation matrix.

Random numbers come in fixed-size blocks. Block ``b`` of a run with seed
``seed`` is drawn from its own Philox stream keyed by ``(seed, b)``, so path
``k`` always sees the same normals no matter how blocks are scheduled or how
many paths the run has in total.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, InvalidMarket, NotPSD, NotSymmetric

BLOCK_SIZE = 1 << 15
PSD_TOL = 1e-10


@dataclass(frozen=True)
class MarketParams:
    rate: float
    sigma: np.ndarray
    corr: np.ndarray
    t: float = 0.0
    maturity: float = 1.0

    def __post_init__(self):
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        corr = np.atleast_2d(np.asarray(self.corr, dtype=float))
        sigma.setflags(write=False)
        corr.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "corr", corr)
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "maturity", float(self.maturity))
        self.validate()

    @classmethod
    def two_asset(cls, sigma1, sigma2, rho, rate=0.0, tau=1.0):
        return cls(rate=rate, sigma=[sigma1, sigma2], corr=[[1.0, rho], [rho, 1.0]],
                   t=0.0, maturity=tau)

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    @property
    def tau(self) -> float:
        return self.maturity - self.t

    @property
    def discount(self) -> float:
        return float(np.exp(-self.rate * self.tau))

    @property
    def covariance(self) -> np.ndarray:
        """Instantaneous asset log-return covariance per unit time."""
        return self.sigma[:, None] * self.corr * self.sigma[None, :]

    def validate(self) -> None:
        n = self.n
        if self.corr.shape != (n, n):
            raise DimensionMismatch(f"correlation must be {n}x{n}, got {self.corr.shape}")
        if np.any(self.sigma <= 0) or not np.all(np.isfinite(self.sigma)):
            raise InvalidMarket("volatilities must be positive and finite")
        if not np.allclose(np.diag(self.corr), 1.0, rtol=0, atol=1e-12):
            raise InvalidMarket("correlation matrix needs a unit diagonal")
        if np.any(np.abs(self.corr) > 1 + 1e-12):
            raise InvalidMarket("correlations must lie in [-1, 1]")
        if not self.maturity > self.t:
            raise InvalidMarket("maturity must exceed valuation time")
        cholesky(self.corr)  # raises NotSymmetric / NotPSD

    def replace(self, **changes) -> "MarketParams":
        fields = dict(rate=self.rate, sigma=self.sigma, corr=self.corr, t=self.t,
                      maturity=self.maturity)
        fields.update(changes)
        return MarketParams(**fields)


def cholesky(matrix) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == matrix`` for symmetric PSD input.

    Rank-deficient matrices are allowed: a pivot within ``PSD_TOL`` of zero
    gives a zero column instead of an error (e.g. perfectly correlated assets).
    """
    S = np.atleast_2d(np.asarray(matrix, dtype=float))
    n = S.shape[0]
    if S.shape != (n, n):
        raise DimensionMismatch(f"expected a square matrix, got {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if not np.allclose(S, S.T, rtol=0, atol=1e-12 * scale):
        raise NotSymmetric("matrix is not symmetric")
    L = np.zeros((n, n))
    for j in range(n):
        pivot = S[j, j] - L[j, :j] @ L[j, :j]
        if pivot < -PSD_TOL * scale:
            raise NotPSD(f"negative pivot {pivot:.3g} at index {j}")
        if pivot <= PSD_TOL * scale:
            # semidefinite direction: remaining entries of the column must vanish too
            for i in range(j + 1, n):
                resid = S[i, j] - L[i, :j] @ L[j, :j]
                if abs(resid) > 1e-8 * scale:
                    raise NotPSD(f"matrix not PSD: zero pivot at {j} with coupling {resid:.3g}")
            continue
        L[j, j] = np.sqrt(pivot)
        for i in range(j + 1, n):
            L[i, j] = (S[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return L


def _block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


@lru_cache(maxsize=64)
def _block_normals(seed: int, block: int, rows: int, n: int) -> np.ndarray:
    z = _block_rng(seed, block).standard_normal((rows, n))
    z.setflags(write=False)
    return z


def block_layout(n_paths: int, block_size: int = BLOCK_SIZE) -> list:
    """``[(block_index, rows), ...]`` covering ``n_paths`` paths."""
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    full, rest = divmod(int(n_paths), block_size)
    layout = [(b, block_size) for b in range(full)]
    if rest:
        layout.append((full, rest))
    return layout


def standard_normals(seed: int, block: int, rows: int, n: int) -> np.ndarray:
    """Independent N(0, 1) draws for one block, shape ``(rows, n)`` (read-only, cached)."""
    return _block_normals(int(seed), int(block), int(rows), int(n))


def normals_for_paths(seed: int, n_paths: int, n: int, block_size: int = BLOCK_SIZE) -> np.ndarray:
    """All draws of a run stacked into one ``(n_paths, n)`` array."""
    return np.concatenate([standard_normals(seed, b, rows, n)
                           for b, rows in block_layout(n_paths, block_size)])


def sample_terminal_assets(params: MarketParams, a_t, Z, chol=None) -> np.ndarray:
    """Map standard normal draws ``Z`` (shape ``(n,)`` or ``(N, n)``) to terminal assets."""
    a_t = np.atleast_1d(np.asarray(a_t, dtype=float))
    Z = np.asarray(Z, dtype=float)
    if a_t.shape != (params.n,) or Z.shape[-1] != params.n:
        raise DimensionMismatch("asset vector / draws do not match the market dimension")
    L = cholesky(params.corr) if chol is None else chol
    tau = params.tau
    drift = (params.rate - 0.5 * params.sigma**2) * tau
    shocks = np.sqrt(tau) * params.sigma * (Z @ L.T)
    return a_t * np.exp(drift + shocks)
