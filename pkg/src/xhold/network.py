"""Cross-holding firm networks and their clearing fixed point.

Each firm ``i`` owns an external asset ``a_i``, owes a zero-coupon debt
``debt_i`` and holds fractions of the other firms' equity and debt. Equity
and debt recovery values solve ``x = g(a, x)`` with ``x = (s; r)``::

    v_i = a_i + sum_j eq_hold[i, j] s_j + sum_j debt_hold[i, j] r_j
    s_i = max(0, v_i - debt_i)
    r_i = min(debt_i, v_i)
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DimensionMismatch, InvalidNetwork, NonConvergence

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class FirmNetwork:
    """Nominal debts plus equity and debt cross-holding matrices.

    ``eq_hold[i, j]`` is the fraction of firm ``j``'s equity owned by firm
    ``i``; ``debt_hold`` likewise for debt. Column sums below one mean part of
    every firm's claims is held outside the network.
    """

    debt: np.ndarray
    eq_hold: np.ndarray
    debt_hold: np.ndarray

    def __post_init__(self):
        debt = np.atleast_1d(np.asarray(self.debt, dtype=float))
        n = debt.shape[0]
        eq = np.zeros((n, n)) if self.eq_hold is None else np.asarray(self.eq_hold, dtype=float)
        dh = np.zeros((n, n)) if self.debt_hold is None else np.asarray(self.debt_hold, dtype=float)
        eq = eq.reshape(eq.shape if eq.ndim == 2 else (n, n))
        dh = dh.reshape(dh.shape if dh.ndim == 2 else (n, n))
        if eq.shape != (n, n) or dh.shape != (n, n):
            raise DimensionMismatch(
                f"holding matrices must be {n}x{n}, got {eq.shape} and {dh.shape}"
            )
        for arr in (debt, eq, dh):
            arr.setflags(write=False)
        object.__setattr__(self, "debt", debt)
        object.__setattr__(self, "eq_hold", eq)
        object.__setattr__(self, "debt_hold", dh)

    @property
    def n(self) -> int:
        return self.debt.shape[0]

    @classmethod
    def two_firm(cls, d1=1.0, d2=1.0, *, m12s=0.0, m21s=0.0, m12d=0.0, m21d=0.0):
        """Build a two-firm network from the four off-diagonal holdings."""
        return cls(
            debt=[d1, d2],
            eq_hold=[[0.0, m12s], [m21s, 0.0]],
            debt_hold=[[0.0, m12d], [m21d, 0.0]],
        )

    @classmethod
    def unconnected(cls, debt):
        debt = np.atleast_1d(np.asarray(debt, dtype=float))
        n = debt.shape[0]
        return cls(debt=debt, eq_hold=np.zeros((n, n)), debt_hold=np.zeros((n, n)))

    def to_dict(self) -> dict:
        return {
            "debt": self.debt.tolist(),
            "equity_holdings": self.eq_hold.tolist(),
            "debt_holdings": self.debt_hold.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FirmNetwork":
        debt = data["debt"]
        n = len(debt)
        zeros = [[0.0] * n for _ in range(n)]
        return cls(
            debt=debt,
            eq_hold=data.get("equity_holdings", zeros),
            debt_hold=data.get("debt_holdings", zeros),
        )


@dataclass(frozen=True)
class ClaimVector:
    """Equity values ``s`` and debt recovery values ``r`` of all firms."""

    equity: np.ndarray
    recovery: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.equity, self.recovery])

    @classmethod
    def from_stacked(cls, x) -> "ClaimVector":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] % 2:
            raise DimensionMismatch(f"stacked claim vector must have even length, got {x.shape}")
        n = x.shape[0] // 2
        return cls(equity=x[:n].copy(), recovery=x[n:].copy())


@dataclass(frozen=True)
class ValidationReport:
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok


def validate_network(net: FirmNetwork) -> ValidationReport:
    """List every violated admissibility constraint (empty list = valid)."""
    problems = []
    if not np.all(np.isfinite(net.debt)) or np.any(net.debt <= 0):
        bad = np.flatnonzero(~(net.debt > 0)).tolist()
        problems.append(f"non-positive debt for firms {bad}")
    for name, m in (("equity", net.eq_hold), ("debt", net.debt_hold)):
        if not np.all(np.isfinite(m)):
            problems.append(f"non-finite {name} holdings")
            continue
        diag = np.flatnonzero(np.diag(m) != 0).tolist()
        if diag:
            problems.append(f"self-holding of {name} for firms {diag}")
        if np.any(m < 0):
            problems.append(f"negative {name} holding (short position)")
        if np.any(m > 1):
            problems.append(f"{name} holding fraction above 1")
        cols = np.flatnonzero(m.sum(axis=0) >= 1.0).tolist()
        if cols:
            problems.append(f"{name} holdings of firms {cols} sum to >= 1 (column sum)")
    return ValidationReport(problems)


def require_valid(net: FirmNetwork) -> None:
    report = validate_network(net)
    if not report.ok:
        raise InvalidNetwork(report.problems)


def _as_assets(a, n: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape != (n,):
        raise DimensionMismatch(f"asset vector must have shape ({n},), got {a.shape}")
    return a


def _as_stacked(x, n: int) -> np.ndarray:
    if isinstance(x, ClaimVector):
        x = x.stacked
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (2 * n,):
        raise DimensionMismatch(f"claim vector must have shape ({2 * n},), got {x.shape}")
    return x


def total_value(a, x, net: FirmNetwork) -> np.ndarray:
    """Gross asset value ``v`` of every firm given claim values ``x``."""
    n = net.n
    a = _as_assets(a, n)
    x = _as_stacked(x, n)
    return a + net.eq_hold @ x[:n] + net.debt_hold @ x[n:]


def payoff_map(a, x, net: FirmNetwork) -> ClaimVector:
    """One application of the clearing map ``g(a, x)``."""
    v = total_value(a, x, net)
    return ClaimVector(equity=np.maximum(v - net.debt, 0.0), recovery=np.minimum(v, net.debt))


def upper_start(a, net: FirmNetwork) -> np.ndarray:
    """A super-solution ``x_hi >= g(a, x_hi)``: every firm solvent, debts paid in full.

    Picard iteration started here decreases monotonically to the fixed point.
    """
    n = net.n
    a = _as_assets(a, n)
    s_hi = np.linalg.solve(np.eye(n) - net.eq_hold, a + net.debt_hold @ net.debt)
    return np.concatenate([np.maximum(s_hi, 0.0), net.debt])


def solve_clearing(a, net: FirmNetwork, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER, x0=None, *, validate: bool = True):
    """Clearing equity and debt values by Picard iteration.

    Parameters
    ----------
    a : array_like, shape (n,)
        External asset values, strictly positive.
    net : FirmNetwork
    tol : float
        Stop once the sup-norm change between iterates is at most ``tol``;
        the returned point then has residual ``|x - g(a, x)|_inf <= tol``.
    max_iter : int
    x0 : array_like, optional
        Start point, default zero (monotone non-decreasing iterates).

    Returns
    -------
    (ClaimVector, int)
        The fixed point and the number of map evaluations used.

    Notes
    -----
    The contraction rate is bounded by the largest holding column sum, so
    networks with column sums near one converge slowly.
    """
    if validate:
        require_valid(net)
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = _as_assets(a, net.n)
    if x0 is not None:
        x0 = _as_stacked(x0, net.n)
    X, iters, conv = kernels.picard_batch(
        a[None, :], net.eq_hold, net.debt_hold, net.debt, float(tol), int(max_iter), x0
    )
    if not conv[0]:
        raise NonConvergence(
            f"Picard iteration did not reach tol={tol} within {max_iter} iterations",
            assets=a, iterations=int(iters[0]),
        )
    return ClaimVector.from_stacked(X[0]), int(iters[0])


def picard_iterates(a, net: FirmNetwork, n_steps: int, x0=None) -> np.ndarray:
    """The first ``n_steps`` Picard iterates as rows (row 0 is the start point)."""
    n = net.n
    x = np.zeros(2 * n) if x0 is None else _as_stacked(x0, n)
    out = [x]
    for _ in range(n_steps):
        x = payoff_map(a, x, net).stacked
        out.append(x)
    return np.array(out)


def solvency_state(a, x, net: FirmNetwork) -> np.ndarray:
    """Solvency indicator per firm: 1 when ``v_i >= debt_i`` (boundary counts as solvent)."""
    v = total_value(a, x, net)
    return (v >= net.debt).astype(np.int8)


def k_matrix(xi, net: FirmNetwork) -> np.ndarray:
    """Derivative ``dg/dx`` of the clearing map on the solvency region ``xi``."""
    xi = np.asarray(xi, dtype=float)
    top = np.hstack([xi[:, None] * net.eq_hold, xi[:, None] * net.debt_hold])
    bot = np.hstack([(1 - xi)[:, None] * net.eq_hold, (1 - xi)[:, None] * net.debt_hold])
    return np.vstack([top, bot])


def lipschitz_bound(net: FirmNetwork) -> float:
    """Lipschitz constant ``1 / (1 - max_xi |K_xi|_1)`` of ``a -> x*(a)`` in the 1-norm.

    With non-negative holdings, column ``j`` of ``K_xi`` always sums to the
    column sum of the corresponding holding matrix (each row lands in exactly
    one of the two blocks), so the maximum over all ``2^n`` solvency patterns
    is attained by every pattern and equals the largest holding column sum.
    """
    require_valid(net)
    colmax = max(net.eq_hold.sum(axis=0).max(), net.debt_hold.sum(axis=0).max())
    return 1.0 / (1.0 - colmax)
