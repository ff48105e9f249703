"""Closed-form clearing values for two firms, region by region.

The terminal asset plane splits into four solvency regions (SS, SD, DS, DD:
firm 1 solvent/defaulted x firm 2 solvent/defaulted). Inside each region
the fixed point is linear in the assets, which gives an exact oracle for the
iterative solver and the building block of the two-firm Delta decomposition.
"""
from __future__ import annotations

import enum

import numpy as np

from ._backend import kernels
from .errors import NotTwoFirms
from .network import ClaimVector, FirmNetwork, require_valid, solve_clearing, solvency_state


class SuzukiRegion(enum.Enum):
    SS = 3
    SD = 1
    DS = 2
    DD = 0

    @property
    def solvent(self) -> tuple:
        return bool(self.value & 1), bool(self.value & 2)

    @classmethod
    def from_solvency(cls, xi) -> "SuzukiRegion":
        return cls(int(xi[0]) + 2 * int(xi[1]))


def _check_two(net: FirmNetwork) -> None:
    if net.n != 2:
        raise NotTwoFirms(f"closed forms need exactly two firms, got {net.n}")


def holdings(net: FirmNetwork) -> dict:
    """The four off-diagonal holding fractions and both debts as keyword args."""
    _check_two(net)
    return dict(
        m12s=float(net.eq_hold[0, 1]),
        m21s=float(net.eq_hold[1, 0]),
        m12d=float(net.debt_hold[0, 1]),
        m21d=float(net.debt_hold[1, 0]),
        d1=float(net.debt[0]),
        d2=float(net.debt[1]),
    )


def closed_form_batch(assets, net: FirmNetwork):
    """Vectorised closed form over rows of ``assets`` (shape ``(N, 2)``).

    Returns ``(X, codes)``: ``X`` has columns ``(s1, s2, r1, r2)`` and
    ``codes`` holds ``SuzukiRegion`` values as int8.
    """
    h = holdings(net)
    A = np.ascontiguousarray(assets, dtype=float).reshape(-1, 2)
    return kernels.closed_form2_batch(
        A, h["m12s"], h["m21s"], h["m12d"], h["m21d"], h["d1"], h["d2"]
    )


def closed_form_payoff(a_T, net: FirmNetwork) -> ClaimVector:
    """Terminal equity and recovery values of both firms in closed form."""
    _check_two(net)
    require_valid(net)
    X, _ = closed_form_batch(np.asarray(a_T, dtype=float)[None, :], net)
    return ClaimVector.from_stacked(X[0])


def self_consistent_region(a_T, net: FirmNetwork) -> SuzukiRegion:
    """Region whose own closed-form candidate satisfies its solvency conditions."""
    _check_two(net)
    _, codes = closed_form_batch(np.asarray(a_T, dtype=float)[None, :], net)
    return SuzukiRegion(int(codes[0]))


def classify_region(a_T, net: FirmNetwork, tol: float = 1e-12) -> SuzukiRegion:
    """Solvency region of the terminal asset pair, read off the iterative fixed point."""
    _check_two(net)
    x, _ = solve_clearing(a_T, net, tol=tol)
    return SuzukiRegion.from_solvency(solvency_state(a_T, x, net))


def region_candidate(region: SuzukiRegion, a_T, net: FirmNetwork) -> np.ndarray:
    """Stacked ``(s1, s2, r1, r2)`` from one region's formulas, whether or not it applies.

    Used to evaluate neighbouring branches at a region boundary.
    """
    h = holdings(net)
    m12s, m21s, m12d, m21d, d1, d2 = (h[k] for k in ("m12s", "m21s", "m12d", "m21d", "d1", "d2"))
    a1, a2 = (float(v) for v in a_T)
    if region is SuzukiRegion.SS:
        den = 1 - m12s * m21s
        return np.array([
            (a1 - d1 + m12d * d2 + m12s * (a2 - d2 + m21d * d1)) / den,
            (a2 - d2 + m21d * d1 + m21s * (a1 - d1 + m12d * d2)) / den,
            d1,
            d2,
        ])
    if region is SuzukiRegion.SD:
        den = 1 - m12d * m21s
        return np.array([
            (a1 - d1 + m12d * d2 + m12d * (a2 - d2 + m21d * d1)) / den,
            0.0,
            d1,
            (a2 + m21d * d1 + m21s * (a1 - d1)) / den,
        ])
    if region is SuzukiRegion.DS:
        den = 1 - m12s * m21d
        return np.array([
            0.0,
            (a2 - d2 + m21d * d1 + m21d * (a1 - d1 + m12d * d2)) / den,
            (a1 + m12d * d2 + m12s * (a2 - d2)) / den,
            d2,
        ])
    den = 1 - m12d * m21d
    return np.array([0.0, 0.0, (a1 + m12d * a2) / den, (a2 + m21d * a1) / den])
