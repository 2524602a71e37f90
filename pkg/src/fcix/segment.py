"""Kernel change-point detection with a fixed number of change points.

The cost of a segment is the within-segment scatter of the kernel-embedded
samples, computed with the kernel trick from a precomputed Gram matrix; the
optimal partition is found by dynamic programming over 2D prefix sums.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateSeries, DegenerateWarning, EmptySegment, InfeasiblePartition

MAX_BANDWIDTH_PAIRS = 1_000_000

Kernel = Callable[[NDArray, float], NDArray]


def gaussian_kernel(sq_dist: NDArray, gamma: float) -> NDArray:
    return np.exp(-gamma * sq_dist)


@dataclass(frozen=True)
class SegmentationResult:
    changepoints: tuple[int, ...]
    segment_costs: tuple[float, ...]
    total_cost: float
    bandwidth: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["changepoints"] = list(self.changepoints)
        d["segment_costs"] = list(self.segment_costs)
        return d


def _as_samples(series) -> NDArray[np.float64]:
    x = np.asarray(series, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _sq_dists(x: NDArray) -> NDArray:
    diff = x[:, None, :] - x[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def median_bandwidth(series: ArrayLike) -> float:
    """``1 / median`` of pairwise squared distances.

    When there are more than a million pairs an evenly strided, deterministic
    subset of them is used. Falls back to 1.0 with a warning if the median is 0.
    """
    x = _as_samples(series)
    n = x.shape[0]
    if n < 2:
        raise DegenerateSeries("bandwidth needs at least two samples")
    i, j = np.triu_indices(n, k=1)
    if i.size > MAX_BANDWIDTH_PAIRS:
        pick = np.linspace(0, i.size - 1, MAX_BANDWIDTH_PAIRS).astype(np.int64)
        i, j = i[pick], j[pick]
    d = x[i] - x[j]
    med = float(np.median(np.einsum("ij,ij->i", d, d)))
    if med <= 0:
        warnings.warn("degenerate series: median squared distance is 0, using gamma = 1.0",
                      DegenerateWarning, stacklevel=2)
        return 1.0
    return 1.0 / med


class _Scatter:
    """Segment costs ``(b - a) - sum(K[a:b, a:b]) / (b - a)`` in O(1) each."""

    def __init__(self, series, gamma: float, kernel: Kernel = gaussian_kernel):
        x = _as_samples(series)
        gram = kernel(_sq_dists(x), gamma)
        n = gram.shape[0]
        self.n = n
        self.diag = np.concatenate([[0.0], np.cumsum(np.diag(gram))])
        self.cum = np.zeros((n + 1, n + 1))
        self.cum[1:, 1:] = gram.cumsum(axis=0).cumsum(axis=1)

    def cost(self, a: int, b: int) -> float:
        c = self.cum
        block = c[b, b] - c[a, b] - c[b, a] + c[a, a]
        return (self.diag[b] - self.diag[a]) - block / (b - a)

    def cost_matrix(self) -> NDArray:
        """``J[a, b]`` for all ``0 <= a < b <= n``; ``inf`` elsewhere."""
        n = self.n
        a = np.arange(n + 1)[:, None]
        b = np.arange(n + 1)[None, :]
        c = self.cum
        with np.errstate(divide="ignore", invalid="ignore"):
            block = c[b, b] - c[a, b] - c[b, a] + c[a, a]
            j = (self.diag[b] - self.diag[a]) - block / (b - a)
        j[b <= a] = np.inf
        # float cancellation can leave tiny negatives on constant stretches
        return np.maximum(j, 0.0)


def segment_cost(series, a: int, b: int, gamma: float, kernel: Kernel = gaussian_kernel) -> float:
    """Scatter cost of ``series[a:b]`` (a exclusive start, b inclusive end, 1-based)."""
    if not 0 <= a < b:
        raise EmptySegment(f"segment ({a}, {b}] is empty")
    x = _as_samples(series)
    if b > x.shape[0]:
        raise EmptySegment(f"segment end {b} beyond series length {x.shape[0]}")
    return max(_Scatter(x[a:b], gamma, kernel).cost(0, b - a), 0.0)


def _solve(j: NDArray, n: int, k_star: int, min_len: int):
    """Suffix DP: ``best[k, a]`` = optimal cost of ``[a, n)`` split into k + 1 segments."""
    best = np.full((k_star + 1, n + 1), np.inf)
    best[0, : n - min_len + 1] = j[: n - min_len + 1, n]
    for k in range(1, k_star + 1):
        for a in range(0, n - (k + 1) * min_len + 1):
            cand = j[a, a + min_len : n + 1] + best[k - 1, a + min_len : n + 1]
            best[k, a] = cand.min()
    return best


def detect_changepoints(
    series,
    k_star: int,
    gamma: float | None = None,
    *,
    min_size: int = 2,
    kernel: Kernel = gaussian_kernel,
) -> SegmentationResult:
    """Globally optimal partition into ``k_star + 1`` segments of length >= ``min_size``.

    Among equal-cost optima the lexicographically smallest change-point vector
    is returned. ``gamma=None`` selects the median heuristic.
    """
    x = _as_samples(series)
    n = x.shape[0]
    if k_star < 1:
        raise ValueError("k_star must be >= 1")
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    if n < (k_star + 1) * min_size:
        raise InfeasiblePartition(
            f"{n} samples cannot hold {k_star + 1} segments of length >= {min_size}"
        )
    if gamma is None:
        gamma = median_bandwidth(x)
    j = _Scatter(x, gamma, kernel).cost_matrix()
    best = _solve(j, n, k_star, min_size)

    cps = []
    a = 0
    for k in range(k_star, 0, -1):
        ends = np.arange(a + min_size, n - k * min_size + 1)
        cand = j[a, ends] + best[k - 1, ends]
        a = int(ends[np.argmin(cand)])
        cps.append(a)
    bounds = [0, *cps, n]
    costs = tuple(float(j[s, e]) for s, e in zip(bounds, bounds[1:]))
    return SegmentationResult(tuple(cps), costs, float(sum(costs)), float(gamma))


def elbow_report(series, k_max: int, gamma: float | None = None, *, min_size: int = 2) -> list[dict]:
    """Optimal total cost for each K in 1..k_max (no automatic selection)."""
    out = []
    for k in range(1, k_max + 1):
        try:
            res = detect_changepoints(series, k, gamma, min_size=min_size)
        except InfeasiblePartition:
            break
        out.append({"k": k, "total_cost": res.total_cost, "changepoints": list(res.changepoints)})
    return out


def segment_labels(n: int, changepoints) -> NDArray[np.int64]:
    """Segment index of every sample, for plotting overlays."""
    labels = np.zeros(n, dtype=np.int64)
    for cp in changepoints:
        labels[cp:] += 1
    return labels
