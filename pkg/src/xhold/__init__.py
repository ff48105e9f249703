"""Valuation of firms linked by equity and debt cross-holdings.

Clearing fixed points, Monte-Carlo prices under correlated GBM, pathwise
network Deltas and the equity correlations they induce.
"""
from ._backend import BACKEND
from .correlation import (
    CorrelationReport,
    check_theorem_dominance,
    equity_correlation_closed_form,
    equity_correlation_mc,
    equity_covariance,
    equity_vol_matrix,
)
from .errors import (
    ConditioningDegenerate,
    EmptyRegion,
    InvalidNetwork,
    NonConvergence,
    NotTwoFirms,
    ZeroEquity,
)
from .gbm import MarketParams, cholesky, sample_terminal_assets
from .greeks import (
    DeltaMatrix,
    finite_difference_delta,
    pathwise_delta,
    region_jacobian,
    two_bank_decomposition,
)
from .network import (
    ClaimVector,
    FirmNetwork,
    lipschitz_bound,
    payoff_map,
    solve_clearing,
    solvency_state,
    validate_network,
)
from .suzuki import SuzukiRegion, classify_region, closed_form_payoff
from .valuation import (
    PriceEstimate,
    conditional_asset_expectation,
    merton_call,
    merton_put,
    price_claims,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ClaimVector",
    "ConditioningDegenerate",
    "CorrelationReport",
    "DeltaMatrix",
    "EmptyRegion",
    "FirmNetwork",
    "InvalidNetwork",
    "MarketParams",
    "NonConvergence",
    "NotTwoFirms",
    "PriceEstimate",
    "SuzukiRegion",
    "ZeroEquity",
    "check_theorem_dominance",
    "cholesky",
    "classify_region",
    "closed_form_payoff",
    "conditional_asset_expectation",
    "equity_correlation_closed_form",
    "equity_correlation_mc",
    "equity_covariance",
    "equity_vol_matrix",
    "finite_difference_delta",
    "lipschitz_bound",
    "merton_call",
    "merton_put",
    "pathwise_delta",
    "payoff_map",
    "price_claims",
    "region_jacobian",
    "sample_terminal_assets",
    "solve_clearing",
    "solvency_state",
    "two_bank_decomposition",
    "validate_network",
]
