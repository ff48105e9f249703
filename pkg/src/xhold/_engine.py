"""Block-parallel Monte-Carlo driver shared by pricing, Greeks and correlations.

Each block of paths draws its own normals (see :mod:`xhold.gbm`), maps them to
terminal assets and hands them to a per-block callback that returns one row of
samples per path. Block statistics are merged strictly in block order with
Chan's pairwise update, so results are bitwise identical for any worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import NonConvergence
from .gbm import BLOCK_SIZE, MarketParams, block_layout, cholesky, sample_terminal_assets, standard_normals
from .network import DEFAULT_MAX_ITER, DEFAULT_TOL, FirmNetwork


@dataclass
class Moments:
    """Count, mean and centred second moments of a stream of sample vectors."""

    count: int
    mean: np.ndarray
    m2: np.ndarray  # (p, p) when full, else (p,)
    full: bool

    @classmethod
    def from_samples(cls, samples, full=False) -> "Moments":
        samples = np.asarray(samples, dtype=float)
        mean = samples.mean(axis=0)
        dev = samples - mean
        m2 = dev.T @ dev if full else np.einsum("ij,ij->j", dev, dev)
        return cls(samples.shape[0], mean, m2, full)

    def combine(self, other: "Moments") -> "Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        w = self.count * other.count / n
        if self.full:
            m2 = self.m2 + other.m2 + np.outer(delta, delta) * w
        else:
            m2 = self.m2 + other.m2 + delta * delta * w
        return Moments(n, mean, m2, self.full)

    @property
    def variance(self) -> np.ndarray:
        m2 = np.diag(self.m2) if self.full else self.m2
        return m2 / max(self.count - 1, 1)

    @property
    def covariance(self) -> np.ndarray:
        """Sample covariance of single-path samples (requires ``full``)."""
        if not self.full:
            raise ValueError("moments were accumulated without cross terms")
        return self.m2 / max(self.count - 1, 1)

    @property
    def mean_covariance(self) -> np.ndarray:
        """Covariance of the sample mean estimator."""
        return self.covariance / self.count

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)


def clear_batch(A, net: FirmNetwork, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Clearing values and solvency patterns for every row of ``A``.

    Two-firm networks use the closed forms, larger ones batched Picard.
    Returns ``(X, xi)`` with ``xi`` an int8 array of shape ``(N, n)``.
    """
    n = net.n
    if n == 2:
        from .suzuki import closed_form_batch

        X, codes = closed_form_batch(A, net)
        xi = np.stack([codes & 1, (codes >> 1) & 1], axis=1).astype(np.int8)
        return X, xi
    X, iters, conv = kernels.picard_batch(A, net.eq_hold, net.debt_hold, net.debt,
                                          float(tol), int(max_iter))
    if not np.all(conv):
        k = int(np.flatnonzero(~conv)[0])
        raise NonConvergence(
            f"clearing did not converge for path with terminal assets {A[k].tolist()}",
            assets=np.array(A[k]), iterations=int(iters[k]),
        )
    v = A + X[:, :n] @ net.eq_hold.T + X[:, n:] @ net.debt_hold.T
    xi = (v >= net.debt).astype(np.int8)
    return X, xi


def run_blocks(params: MarketParams, a_t, n_paths: int, seed: int, block_fn, *,
               full: bool = False, workers: int = 1, block_size: int = BLOCK_SIZE) -> Moments:
    """Accumulate ``block_fn(A_T, Z)`` sample rows over ``n_paths`` paths."""
    if n_paths < 2:
        raise ValueError("need at least two paths for a standard error")
    a_t = np.atleast_1d(np.asarray(a_t, dtype=float))
    chol = cholesky(params.corr)
    n = params.n

    def one(block):
        b, rows = block
        Z = standard_normals(seed, b, rows, n)
        A = sample_terminal_assets(params, a_t, Z, chol=chol)
        return Moments.from_samples(block_fn(A, Z), full=full)

    layout = block_layout(n_paths, block_size)
    if workers > 1 and len(layout) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, layout))
    else:
        parts = [one(block) for block in layout]
    total = parts[0]
    for part in parts[1:]:
        total = total.combine(part)
    return total
