"""Approximate entropy and plug-in information measures (nats).

Sample estimators discretize into quantile bins, count the relevant joint
symbols and hand the resulting probability table to the ``*_pmf`` functions,
which are also usable directly on exact distributions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import ArrayLike, NDArray
from scipy.stats import rankdata

from .errors import (
    DegenerateSeries,
    LengthMismatch,
    NonPositiveTolerance,
    SeriesTooShort,
)

_CHUNK = 2048


def _as_series(series) -> NDArray[np.float64]:
    x = np.asarray(series, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise DegenerateSeries("series contains non-finite values")
    return x


def _match_counts(x: NDArray, m: int, r: float) -> tuple[NDArray, NDArray]:
    """Self-inclusive match counts for templates of length m and m + 1.

    Only the first ``n - m`` templates of length m have an (m+1)-extension; the
    length-m counts cover all ``n - m + 1`` templates.
    """
    n = x.size
    emb = sliding_window_view(x, m)
    k_m = n - m + 1
    count_m = np.empty(k_m)
    count_m1 = np.empty(k_m - 1)
    nxt = x[m:]
    for start in range(0, k_m, _CHUNK):
        stop = min(start + _CHUNK, k_m)
        d = np.max(np.abs(emb[start:stop, None, :] - emb[None, :, :]), axis=2)
        close = d <= r
        count_m[start:stop] = close.sum(axis=1)
        hi = min(stop, k_m - 1)
        if hi > start:
            ext = close[: hi - start, : k_m - 1] & (
                np.abs(nxt[start:hi, None] - nxt[None, :]) <= r
            )
            count_m1[start:hi] = ext.sum(axis=1)
    return count_m, count_m1


def apen(series: ArrayLike, m: int = 2, r: float = 0.2) -> float:
    """Approximate entropy ``Phi^m(r) - Phi^(m+1)(r)`` with absolute tolerance r.

    ``Phi^m`` averages ``log C_i^m(r)`` over templates, where ``C_i^m`` is the
    fraction of length-m templates within Chebyshev distance r of template i
    (self-matches included, so every ``C_i`` is positive).
    """
    x = _as_series(series)
    if m < 1:
        raise ValueError("embedding length m must be >= 1")
    if x.size < m + 2:
        raise SeriesTooShort(f"approximate entropy needs length >= {m + 2}, got {x.size}")
    if not r > 0:
        raise NonPositiveTolerance(f"tolerance r must be > 0, got {r}")
    count_m, count_m1 = _match_counts(x, m, r)
    phi_m = float(np.mean(np.log(count_m / count_m.size)))
    phi_m1 = float(np.mean(np.log(count_m1 / count_m1.size)))
    return phi_m - phi_m1


def apen_relative(series: ArrayLike, m: int = 2, r_frac: float = 0.2) -> float:
    """ApEn with ``r = r_frac * sample std``; a constant series has ApEn 0."""
    x = _as_series(series)
    if x.size < m + 2:
        raise SeriesTooShort(f"approximate entropy needs length >= {m + 2}, got {x.size}")
    if not r_frac > 0:
        raise NonPositiveTolerance(f"r_frac must be > 0, got {r_frac}")
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        return 0.0
    return apen(x, m, r_frac * sd)


def mean_block_similarity(series: ArrayLike, m: int = 2, r: float = 0.2) -> float:
    """Plain average of ``C_i^m(r)`` over templates, without logarithms.

    Kept alongside :func:`apen` for comparison; it measures how often blocks
    recur but is not an entropy.
    """
    x = _as_series(series)
    if x.size < m + 2:
        raise SeriesTooShort(f"needs length >= {m + 2}, got {x.size}")
    if not r > 0:
        raise NonPositiveTolerance(f"tolerance r must be > 0, got {r}")
    count_m, _ = _match_counts(x, m, r)
    return float(np.mean(count_m / count_m.size))


@dataclass(frozen=True)
class DiscretizedSeries:
    symbols: NDArray[np.int64]
    bins: int
    edges: NDArray[np.float64]

    def __len__(self):
        return self.symbols.size


def discretize(series, bins: int = 3) -> DiscretizedSeries:
    """Equal-frequency binning by rank.

    Tied values share their average rank, so equal inputs always land in the
    same bin (an already-symbolic series keeps its coding).
    """
    if isinstance(series, DiscretizedSeries):
        if series.bins != bins:
            raise ValueError(f"series already discretized with {series.bins} bins")
        return series
    if bins < 2:
        raise ValueError("bins must be >= 2")
    x = _as_series(series)
    if np.unique(x).size < bins:
        raise DegenerateSeries(f"fewer than {bins} distinct values")
    ranks = rankdata(x, method="average") - 1.0
    symbols = np.minimum((ranks * bins / x.size).astype(np.int64), bins - 1)
    edges = np.quantile(x, np.linspace(0.0, 1.0, bins + 1))
    return DiscretizedSeries(symbols, bins, edges)


# exact-table measures


def shannon_pmf(p: ArrayLike) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def conditional_pmf(p_zv: ArrayLike) -> float:
    """``H(Z | V)`` from a joint table indexed ``[z, v, ...]`` (trailing axes belong to V)."""
    p = np.asarray(p_zv, dtype=float)
    return shannon_pmf(p) - shannon_pmf(p.sum(axis=0))


def self_entropy_pmf(p_joint: ArrayLike) -> float:
    """``H(Z_t) - H(Z_t | past)`` from a table indexed ``[z_t, past...]``."""
    p = np.asarray(p_joint, dtype=float)
    h_z = shannon_pmf(p.reshape(p.shape[0], -1).sum(axis=1))
    return h_z - conditional_pmf(p)


def transfer_entropy_pmf(p_joint: ArrayLike) -> float:
    """``H(Z_t | Z past) - H(Z_t | Z past, V past)`` from a table indexed ``[z_t, z_past, v_past]``."""
    p = np.asarray(p_joint, dtype=float)
    if p.ndim != 3:
        raise ValueError("expected a 3-axis table [z_t, z_past, v_past]")
    p_zzp = p.sum(axis=2)
    return conditional_pmf(p_zzp) - conditional_pmf(p)


# sample estimators


def _symbols(series, bins) -> NDArray[np.int64]:
    return discretize(series, bins).symbols


def _past_code(sym: NDArray, k: int, bins: int) -> NDArray[np.int64]:
    """Integer code of ``(s_{t-1}, ..., s_{t-k})`` for t = k .. n-1."""
    n = sym.size
    code = np.zeros(n - k, dtype=np.int64)
    for lag in range(1, k + 1):
        code = code * bins + sym[k - lag : n - lag]
    return code


def _table(shape, *codes) -> NDArray[np.float64]:
    flat = np.ravel_multi_index(codes, shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    return counts / counts.sum()


def _check_length(n: int, k: int, bins: int, alphabet_exp: int) -> None:
    if n <= k + 1:
        raise SeriesTooShort(f"series of length {n} too short for order {k}")
    recommended = k + 10 * bins**alphabet_exp
    if n < recommended:
        warnings.warn(
            f"length {n} below the recommended {recommended} for order {k} with {bins} bins; "
            "plug-in estimates will be biased",
            RuntimeWarning,
            stacklevel=3,
        )


def shannon(d: DiscretizedSeries) -> float:
    return shannon_pmf(np.bincount(d.symbols, minlength=d.bins) / len(d))


def conditional(dz: DiscretizedSeries, dv: DiscretizedSeries) -> float:
    if len(dz) != len(dv):
        raise LengthMismatch("conditional entropy needs equal-length series")
    return conditional_pmf(_table((dz.bins, dv.bins), dz.symbols, dv.symbols))


def self_entropy(series, k: int = 1, bins: int = 3) -> float:
    """Mutual information between the present symbol and its k-lag past."""
    sym = _symbols(series, bins)
    _check_length(sym.size, k, bins, k + 1)
    table = _table((bins, bins**k), sym[k:], _past_code(sym, k, bins))
    return self_entropy_pmf(table)


def transfer_entropy(source, target, k: int = 1, bins: int = 3) -> float:
    """Information the source's k-lag past adds about the target's present."""
    v = _symbols(source, bins)
    z = _symbols(target, bins)
    if v.size != z.size:
        raise LengthMismatch(f"source length {v.size} != target length {z.size}")
    _check_length(z.size, k, bins, 2 * k + 1)
    return _te_symbols(v, z, k, bins)


def _te_symbols(v, z, k, bins) -> float:
    shape = (bins, bins**k, bins**k)
    table = _table(shape, z[k:], _past_code(z, k, bins), _past_code(v, k, bins))
    return transfer_entropy_pmf(table)


def shuffle_significance(
    source, target, k: int = 1, bins: int = 3, n_shuffles: int = 99, seed: int = 0
) -> float:
    """Fraction of circular-shift surrogates of the source with TE at least the observed value."""
    if n_shuffles < 99:
        raise ValueError("n_shuffles must be >= 99")
    v = _symbols(source, bins)
    z = _symbols(target, bins)
    if v.size != z.size:
        raise LengthMismatch(f"source length {v.size} != target length {z.size}")
    _check_length(z.size, k, bins, 2 * k + 1)
    observed = _te_symbols(v, z, k, bins)
    rng = np.random.default_rng(seed)
    shifts = rng.integers(1, v.size, size=n_shuffles)
    hits = sum(_te_symbols(np.roll(v, s), z, k, bins) >= observed - 1e-12 for s in shifts)
    return hits / n_shuffles


@dataclass(frozen=True)
class InformationReport:
    shannon: float
    conditional: float
    self_entropy: float
    transfer_source_to_target: float
    transfer_target_to_source: float
    apen: float
    p_source_to_target: float | None = None
    p_target_to_source: float | None = None
    unit: str = "nats"

    def to_dict(self) -> dict:
        return asdict(self)


def information_report(
    target,
    source,
    *,
    k: int = 1,
    bins: int = 3,
    m: int = 2,
    r_frac: float = 0.2,
    n_shuffles: int = 99,
    seed: int = 0,
    log_base: float = math.e,
) -> InformationReport:
    """Entropy summary of ``target`` (Z) and its coupling with ``source`` (V)."""
    dz, dv = discretize(target, bins), discretize(source, bins)
    scale = 1.0 / math.log(log_base)
    p_st = p_ts = None
    if n_shuffles:
        p_st = shuffle_significance(dv, dz, k, bins, n_shuffles, seed)
        p_ts = shuffle_significance(dz, dv, k, bins, n_shuffles, seed + 1)
    unit = "nats" if log_base == math.e else ("bits" if log_base == 2 else f"log{log_base:g}")
    return InformationReport(
        shannon=shannon(dz) * scale,
        conditional=conditional(dz, dv) * scale,
        self_entropy=self_entropy(dz, k, bins) * scale,
        transfer_source_to_target=transfer_entropy(dv, dz, k, bins) * scale,
        transfer_target_to_source=transfer_entropy(dz, dv, k, bins) * scale,
        apen=apen_relative(target, m, r_frac) * scale,
        p_source_to_target=p_st,
        p_target_to_source=p_ts,
        unit=unit,
    )
