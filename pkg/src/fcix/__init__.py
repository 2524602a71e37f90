"""Financial chaos index (FCIX) from reciprocal pairwise comparison tensors.

Price panel -> lag-l returns -> tensor of comparison slices ``r_i / r_j`` ->
rank-1 consensus decomposition -> per-slice inconsistency ``(lambda_max - N)/(N - 1)``,
plus segmentation, entropy, long-memory and dynamical-system analytics of the
resulting series.
"""

__version__ = "0.1.0"

from .panel import PricePanel, ReturnsPanel, lag_returns, load_prices
from .rpct import (
    ComparisonTensor,
    FcixSeries,
    Rank1Factors,
    aggregate,
    build_rpct,
    compute_fcix,
    consensus_decompose,
    fcix_series,
)

__all__ = [
    "ComparisonTensor",
    "FcixSeries",
    "PricePanel",
    "Rank1Factors",
    "ReturnsPanel",
    "aggregate",
    "build_rpct",
    "compute_fcix",
    "consensus_decompose",
    "fcix_series",
    "lag_returns",
    "load_prices",
]
