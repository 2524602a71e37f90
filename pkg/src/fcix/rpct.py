"""Reciprocal comparison tensors, rank-1 consensus decomposition and the FCIX series."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from datetime import date as _date
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from . import entropy, rpcm
from .errors import (
    DataError,
    DegenerateFactor,
    IndexOutOfRange,
    NonPositivePrice,
    NoConvergence,
    NumericError,
)
from .panel import PricePanel, ReturnsPanel, lag_returns

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComparisonTensor:
    """T frontal N x N slices; slice t is built from the returns row labelled ``dates[t]``."""

    slices: NDArray[np.float64]
    lag: int = 1
    dates: tuple[str, ...] = ()

    def __post_init__(self):
        s = np.array(self.slices, dtype=float, copy=True)
        if s.ndim != 3 or s.shape[1] != s.shape[2] or s.shape[0] == 0:
            raise DataError(f"expected a T x N x N stack, got shape {s.shape}")
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise NonPositivePrice("comparison tensor entries must be finite and > 0")
        s.setflags(write=False)
        object.__setattr__(self, "slices", s)
        object.__setattr__(self, "dates", tuple(self.dates))

    @property
    def horizon(self) -> int:
        return self.slices.shape[0]

    @property
    def n(self) -> int:
        return self.slices.shape[1]

    def slice(self, t: int) -> rpcm.ComparisonMatrix:
        return rpcm.ComparisonMatrix(self.slices[t])

    def is_reciprocal(self) -> bool:
        s = self.slices
        diag = np.diagonal(s, axis1=1, axis2=2)
        prod = s * np.swapaxes(s, 1, 2)
        return bool(
            np.allclose(diag, 1.0, rtol=0, atol=rpcm.RECIPROCAL_RTOL)
            and np.allclose(prod, 1.0, rtol=0, atol=rpcm.RECIPROCAL_RTOL)
        )


@dataclass(frozen=True)
class Rank1Factors:
    """Consensus tensor ``z_t * x y^T`` with unit-norm positive x, y."""

    x: NDArray[np.float64]
    y: NDArray[np.float64]
    z: NDArray[np.float64]
    rel_error: float
    iterations: int = 0
    converged: bool = True
    objective_history: tuple[float, ...] = ()

    def reconstruct(self, t: int | None = None) -> NDArray[np.float64]:
        outer = np.outer(self.x, self.y)
        if t is None:
            return self.z[:, None, None] * outer[None]
        return self.z[t] * outer


@dataclass(frozen=True)
class FcixSeries:
    dates: tuple[str, ...]
    psi: NDArray[np.float64]
    aggregation: str = "daily"
    negatives_clamped: int = 0

    @property
    def psi_clamped(self) -> NDArray[np.float64]:
        return np.maximum(self.psi, 0.0)


@dataclass(frozen=True)
class RegimeDiagnostics:
    sensitivity_stat: float | None
    consistency_stat: float
    discrepancy_stat: float | None
    homogeneity_stat: float
    notes: tuple[str, ...] = field(default=())


def build_rpct(returns: ReturnsPanel) -> ComparisonTensor:
    """Slice t holds ``a_ij = r_i / r_j`` for the returns row t."""
    r = np.asarray(returns.returns, dtype=float)
    if np.any(~(r > 0)):
        raise NonPositivePrice("returns must be strictly positive to build comparisons")
    return ComparisonTensor(r[:, :, None] / r[:, None, :], returns.lag, returns.dates)


def _objective(slices: NDArray, x, y, z) -> float:
    resid = slices - z[:, None, None] * np.outer(x, y)[None]
    return float(np.einsum("tij,tij->", resid, resid))


def consensus_decompose(
    tensor: ComparisonTensor,
    *,
    tol: float = 1e-10,
    max_iters: int = 500,
    seed: int = 0,
) -> Rank1Factors:
    """Best rank-1 approximation ``z o (x o y)`` by alternating least squares.

    x and y start as uniform unit vectors and z as the slice means. Each sweep
    solves the three least-squares subproblems in closed form; for a positive
    tensor every update is a sum of positive products, so x and y stay positive
    without explicit constraints. Iteration stops when the largest relative
    factor change drops below ``tol``.
    """
    a = tensor.slices
    t_len, n, _ = a.shape
    norm_a2 = float(np.einsum("tij,tij->", a, a))
    x = np.full(n, 1.0 / math.sqrt(n))
    y = x.copy()
    z = a.mean(axis=(1, 2))
    rng = np.random.default_rng(seed)

    history = [_objective(a, x, y, z)]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        x_old, y_old, z_old = x, y, z
        # y is unit norm, so sum_t z_t^2 ||y||^2 = ||z||^2
        x = np.einsum("t,tij,j->i", z, a, y)
        x_norm = np.linalg.norm(x)
        y = np.einsum("t,tij,i->j", z, a, x / x_norm)
        y_norm = np.linalg.norm(y)
        if min(x_norm, y_norm) < 1e-300:
            x, y, x_norm, y_norm = _escape_degeneracy(a, z, rng)
        x = x / x_norm
        y = y / y_norm
        z = np.einsum("tij,i,j->t", a, x, y)
        obj = _objective(a, x, y, z)
        if obj > history[-1] * (1 + 1e-10) + 1e-12 * norm_a2:
            raise NumericError(
                f"ALS objective increased at sweep {it}: {history[-1]:.6e} -> {obj:.6e}"
            )
        history.append(obj)
        change = max(
            np.linalg.norm(x - x_old),
            np.linalg.norm(y - y_old),
            np.linalg.norm(z - z_old) / max(np.linalg.norm(z), 1e-300),
        )
        if change < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            NoConvergence(f"ALS stopped after {max_iters} sweeps without reaching tol={tol}"),
            RuntimeWarning,
            stacklevel=2,
        )
    rel_error = math.sqrt(max(history[-1], 0.0) / norm_a2)
    return Rank1Factors(x, y, np.maximum(z, 0.0), rel_error, it, converged, tuple(history))


def _escape_degeneracy(a, z, rng):
    n = a.shape[1]
    x = rng.uniform(0.5, 1.5, n)
    y = np.einsum("t,tij,i->j", z, a, x / np.linalg.norm(x))
    x_norm, y_norm = np.linalg.norm(x), np.linalg.norm(y)
    if y_norm < 1e-300:
        raise DegenerateFactor("rank-1 factor collapsed to zero")
    return x, y, x_norm, y_norm


def fcix_series(
    factors: Rank1Factors,
    n: int,
    dates: Sequence[str] | None = None,
    *,
    crosscheck: bool = True,
) -> FcixSeries:
    """Per-slice inconsistency of the consensus tensor.

    The slice ``z_t x y^T`` has Perron root ``z_t (y . x)``. With ``crosscheck``
    each root is recomputed by power iteration on the reconstructed slice and
    a mismatch beyond 1e-10 (relative) raises.
    """
    lam = factors.z * float(factors.y @ factors.x)
    if crosscheck:
        outer = np.outer(factors.x, factors.y)
        for t, z_t in enumerate(factors.z):
            if z_t <= 0:
                continue
            check = rpcm.perron_eigenvalue(z_t * outer).lambda_max
            if abs(check - lam[t]) > 1e-10 * max(1.0, abs(lam[t])):
                raise NumericError(f"slice {t}: analytic root {lam[t]!r} vs power {check!r}")
    psi = (lam - n) / (n - 1)
    if dates is None:
        dates = tuple(str(i) for i in range(len(psi)))
    return FcixSeries(tuple(dates), psi, "daily", int(np.count_nonzero(psi < 0)))


def compute_fcix(
    panel: PricePanel, lag: int = 1, *, tol: float = 1e-10, max_iters: int = 500, seed: int = 0
) -> tuple[FcixSeries, Rank1Factors, ComparisonTensor]:
    returns = lag_returns(panel, lag)
    tensor = build_rpct(returns)
    factors = consensus_decompose(tensor, tol=tol, max_iters=max_iters, seed=seed)
    return fcix_series(factors, tensor.n, tensor.dates), factors, tensor


def _period_label(label: str, period: str) -> str:
    d = _date.fromisoformat(label[:10])
    if period == "monthly":
        return f"{d.year:04d}-{d.month:02d}"
    if period == "quarterly":
        return f"{d.year:04d}-Q{(d.month - 1) // 3 + 1}"
    raise ValueError(f"unknown aggregation period {period!r}")


def aggregate(series: FcixSeries, period: str) -> FcixSeries:
    """Calendar-period means of a daily series; raw values are averaged, then re-counted."""
    if series.aggregation != "daily":
        raise DataError("aggregate expects a daily series")
    try:
        labels = [_period_label(d, period) for d in series.dates]
    except ValueError as exc:
        raise DataError(f"cannot aggregate: {exc}") from None
    order: list[str] = []
    groups: dict[str, list[float]] = {}
    for lab, v in zip(labels, series.psi):
        if lab not in groups:
            order.append(lab)
            groups[lab] = []
        groups[lab].append(float(v))
    means = np.array([math.fsum(groups[k]) / len(groups[k]) for k in order])
    return FcixSeries(tuple(order), means, period, int(np.count_nonzero(means < 0)))


def regularity(psi, m: int = 2, r_frac: float = 0.2) -> float:
    """Approximate entropy of the index with tolerance ``r_frac`` times its sample std."""
    values = psi.psi if isinstance(psi, FcixSeries) else psi
    return entropy.apen_relative(values, m, r_frac)


def regime_diagnostics(
    tensor: ComparisonTensor, t: int, k_threshold: float = 10.0
) -> RegimeDiagnostics:
    """Sensitivity, consistency, discrepancy and homogeneity statistics of slice t."""
    if not 0 <= t < tensor.horizon:
        raise IndexOutOfRange(f"slice index {t} outside [0, {tensor.horizon})")
    if k_threshold < 1:
        raise DataError("homogeneity threshold K must be >= 1")
    a = tensor.slices[t]
    n = tensor.n
    notes = []
    sensitivity = None
    if n <= rpcm.CONDITION_ORDER_CAP:
        adj = rpcm.adjugate(n * np.eye(n) - a)
        sensitivity = float(np.linalg.norm(adj, 2)) / float(n) ** (n - 1)
    else:
        notes.append(f"sensitivity omitted: order {n} exceeds {rpcm.CONDITION_ORDER_CAP}")
    discrepancy = None
    if t + 1 < tensor.horizon:
        b = tensor.slices[t + 1]
        denom = max(np.linalg.norm(a), np.linalg.norm(b))
        discrepancy = float(np.linalg.norm(a - b) / denom)
    else:
        notes.append("discrepancy omitted: last slice has no successor")
    outside = (a < 1.0 / k_threshold) | (a > k_threshold)
    return RegimeDiagnostics(
        sensitivity,
        rpcm.consistency_degree(a),
        discrepancy,
        float(np.count_nonzero(outside)) / a.size,
        tuple(notes),
    )


def lag_scaling_report(
    panel: PricePanel,
    lags: Sequence[int],
    *,
    tol: float = 1e-10,
    max_iters: int = 500,
    seed: int = 0,
    m: int = 2,
    r_frac: float = 0.2,
    workers: int = 1,
) -> dict:
    """Decomposition error and mean index level as functions of the return lag.

    Fits ``log eps`` against ``log l`` and ``psi_bar`` against ``l`` by least
    squares when at least two lags are given. A zero error at any lag leaves
    the error exponent undefined and is flagged rather than fitted.
    """
    lags = [int(l) for l in lags]
    if not lags:
        raise DataError("at least one lag is required")
    if max(lags) >= panel.n_dates:
        raise DataError(f"max lag {max(lags)} must be below {panel.n_dates} dates")

    def run(lag):
        series, factors, _ = compute_fcix(panel, lag, tol=tol, max_iters=max_iters, seed=seed)
        try:
            reg = regularity(series, m, r_frac)
        except DataError:
            reg = None
        return {
            "lag": lag,
            "epsilon": factors.rel_error,
            "psi_bar": float(np.mean(series.psi)),
            "regularity": reg,
            "iterations": factors.iterations,
            "negatives_clamped": series.negatives_clamped,
        }

    if workers > 1 and len(lags) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(run, lags))
    else:
        points = [run(l) for l in lags]

    report: dict = {"points": points, "epsilon_exponent": None, "psi_bar_slope": None, "flags": []}
    if len(lags) < 2:
        report["flags"].append("single lag: no fit")
        return report
    l_arr = np.array(lags, dtype=float)
    eps = np.array([p["epsilon"] for p in points])
    psi_bar = np.array([p["psi_bar"] for p in points])
    if np.any(eps <= 1e-14):
        report["flags"].append("zero decomposition error at some lag: exponent undefined")
    else:
        coef, res, *_ = np.polyfit(np.log(l_arr), np.log(eps), 1, full=True)
        report["epsilon_exponent"] = float(coef[0])
        report["epsilon_intercept"] = float(coef[1])
        report["epsilon_residual"] = float(res[0]) if len(res) else 0.0
    coef, res, *_ = np.polyfit(l_arr, psi_bar, 1, full=True)
    report["psi_bar_slope"] = float(coef[0])
    report["psi_bar_intercept"] = float(coef[1])
    report["psi_bar_residual"] = float(res[0]) if len(res) else 0.0
    return report
