"""Long-memory diagnostics and linear response analytics for one or two series."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize_scalar
from scipy.signal import fftconvolve

from . import entropy
from .errors import LengthMismatch, OptimizationFailure, SeriesTooShort, SingularDesign

WHITTLE_EXPONENT = 0.65
WHITTLE_BOUNDS = (-0.5, 0.75)
DIFFERENCE_THRESHOLD = 0.65


def frac_coefficients(u: float, n: int) -> NDArray[np.float64]:
    """``pi_0..pi_{n-1}`` of ``(1 - L)^(-u)``: ``pi_k = pi_{k-1} (u + k - 1) / k``."""
    pi = np.empty(n)
    if n == 0:
        return pi
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[k - 1] * (u + k - 1) / k
    return pi


def frac_diff(series: ArrayLike, d: float) -> NDArray[np.float64]:
    """``(1 - L)^d`` applied with the expansion truncated at the series start."""
    x = np.asarray(series, dtype=float)
    n = x.size
    pi = frac_coefficients(-d, n)
    # nonnegative integer d leaves a finite kernel; direct convolution keeps it exact
    support = np.flatnonzero(pi)
    if support.size:
        pi = pi[: support[-1] + 1]
    if pi.size > 256:
        return fftconvolve(pi, x)[:n]
    return np.convolve(pi, x)[:n]


def simulate_fractional_noise(d: float, n: int, rng: np.random.Generator, burn: int = 512):
    """``(1 - L)^(-d)`` applied to Gaussian white noise, first ``burn`` samples dropped."""
    return frac_diff(rng.standard_normal(n + burn), -d)[burn:]


def acf(series: ArrayLike, max_lag: int) -> NDArray[np.float64]:
    """Sample autocorrelations ``rho_0..rho_max_lag`` with the biased (1/T) normalization."""
    x = np.asarray(series, dtype=float)
    if not 0 <= max_lag < x.size:
        raise SeriesTooShort(f"max_lag must be in [0, {x.size})")
    x = x - x.mean()
    denom = float(x @ x)
    if denom == 0:
        raise SeriesTooShort("autocorrelation of a constant series is undefined")
    return np.array([float(x[: x.size - k] @ x[k:]) / denom for k in range(max_lag + 1)])


def periodogram(series: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``I(lambda_j) = |sum_t x_t e^{-i lambda_j t}|^2 / (2 pi T)`` at ``lambda_j = 2 pi j / T``, j = 1..T/2."""
    x = np.asarray(series, dtype=float)
    n = x.size
    j = np.arange(1, n // 2 + 1)
    ordinates = np.abs(np.fft.fft(x)[j]) ** 2 / (2 * math.pi * n)
    return 2 * math.pi * j / n, ordinates


def xcf(a: ArrayLike, b: ArrayLike, max_lag: int) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Cross-correlations ``corr(a_t, b_{t+p})`` for ``p = -max_lag..max_lag``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size != b.size:
        raise LengthMismatch(f"xcf needs equal lengths, got {a.size} and {b.size}")
    n = a.size
    if not 0 <= max_lag < n:
        raise SeriesTooShort(f"max_lag must be in [0, {n})")
    a = a - a.mean()
    b = b - b.mean()
    scale = math.sqrt(float(a @ a) * float(b @ b))
    lags = np.arange(-max_lag, max_lag + 1)
    out = np.empty(lags.size)
    for i, p in enumerate(lags):
        if p >= 0:
            out[i] = float(a[: n - p] @ b[p:])
        else:
            out[i] = float(a[-p:] @ b[: n + p])
    return lags, out / scale


@dataclass(frozen=True)
class WhittleEstimate:
    d_hat: float
    bandwidth_m: int
    objective: float
    differenced: bool
    first_stage_d: float

    def to_dict(self) -> dict:
        return {
            "d_hat": self.d_hat,
            "bandwidth_m": self.bandwidth_m,
            "objective": self.objective,
            "differenced": self.differenced,
            "first_stage_d": self.first_stage_d,
        }


def whittle_objective(freqs: NDArray, ordinates: NDArray):
    """Local Whittle criterion ``R(d)`` over the given Fourier ordinates.

    The periodogram is captured once; evaluating R at a new d costs O(m).
    """
    log_f = np.log(freqs)
    mean_log_f = float(log_f.mean())

    def objective(d: float) -> float:
        return math.log(float(np.mean(np.exp(2 * d * log_f) * ordinates))) - 2 * d * mean_log_f

    return objective


def _whittle_stage(x: NDArray, m: int) -> tuple[float, float]:
    freqs, ords = periodogram(x)
    obj = whittle_objective(freqs[:m], ords[:m])
    res = minimize_scalar(obj, bounds=WHITTLE_BOUNDS, method="bounded", options={"xatol": 1e-6})
    if not res.success or not math.isfinite(res.fun):
        raise OptimizationFailure(f"local Whittle minimization failed: {res.message}")
    return float(res.x), float(res.fun)


def local_whittle(
    series: ArrayLike, bandwidth_m: int | None = None, *, exponent: float = WHITTLE_EXPONENT
) -> WhittleEstimate:
    """Two-step local Whittle estimate of the fractional order d.

    The first stage searches d over (-0.5, 0.75). If it lands above 0.65 the
    series is first-differenced, re-estimated, and 1 is added back, which
    extends the usable range into the nonstationary region.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 128:
        raise SeriesTooShort(f"local Whittle needs at least 128 observations, got {n}")
    m = int(bandwidth_m) if bandwidth_m is not None else int(math.floor(n**exponent))
    if not 1 <= m <= n // 2:
        raise ValueError(f"bandwidth m={m} must lie in [1, {n // 2}]")
    d1, obj1 = _whittle_stage(x, m)
    if d1 <= DIFFERENCE_THRESHOLD:
        return WhittleEstimate(d1, m, obj1, False, d1)
    dx = np.diff(x)
    m2 = min(m, dx.size // 2)
    d2, obj2 = _whittle_stage(dx, m2)
    return WhittleEstimate(d2 + 1.0, m2, obj2, True, d1)


@dataclass(frozen=True)
class VarModel:
    order: int
    coefs: NDArray[np.float64]  # (p, k, k); coefs[i] multiplies X_{t-i-1}
    intercept: NDArray[np.float64]
    sigma: NDArray[np.float64]
    chol: NDArray[np.float64]
    n_obs: int

    @property
    def k(self) -> int:
        return self.sigma.shape[0]

    def companion(self) -> NDArray[np.float64]:
        p, k = self.order, self.k
        comp = np.zeros((k * p, k * p))
        comp[:k] = np.hstack(list(self.coefs))
        if p > 1:
            comp[k:, :-k] = np.eye(k * (p - 1))
        return comp

    def is_stable(self) -> bool:
        return bool(np.max(np.abs(np.linalg.eigvals(self.companion()))) < 1)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "coefs": self.coefs.tolist(),
            "intercept": self.intercept.tolist(),
            "sigma": self.sigma.tolist(),
            "chol": self.chol.tolist(),
            "n_obs": self.n_obs,
            "stable": self.is_stable(),
        }


def var_from_params(coefs, sigma, intercept=None) -> VarModel:
    """Build a model from known coefficients, e.g. for analytic checks."""
    coefs = np.asarray(coefs, dtype=float)
    if coefs.ndim == 2:
        coefs = coefs[None]
    sigma = np.asarray(sigma, dtype=float)
    k = sigma.shape[0]
    intercept = np.zeros(k) if intercept is None else np.asarray(intercept, dtype=float)
    return VarModel(coefs.shape[0], coefs, intercept, sigma, np.linalg.cholesky(sigma), 0)


def var_fit(data: ArrayLike, p: int = 1) -> VarModel:
    """Equation-by-equation least squares VAR(p) with intercept.

    The residual covariance uses the degrees-of-freedom divisor ``T - k p - 1``.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ValueError("VAR data must be T x k")
    t_len, k = x.shape
    if p < 1:
        raise ValueError("VAR order must be >= 1")
    if t_len - p <= k * p + 1:
        raise SeriesTooShort(f"VAR({p}) with {k} variables needs more than {k * p + 1 + p} rows")
    y = x[p:]
    design = np.hstack([np.ones((t_len - p, 1))] + [x[p - i : t_len - i] for i in range(1, p + 1)])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularDesign("VAR design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    dof = design.shape[0] - design.shape[1]
    sigma = resid.T @ resid / dof
    sigma = (sigma + sigma.T) / 2
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise SingularDesign("residual covariance is not positive definite") from None
    coefs = np.stack([beta[1 + i * k : 1 + (i + 1) * k].T for i in range(p)])
    return VarModel(p, coefs, beta[0], sigma, chol, int(y.shape[0]))


@dataclass(frozen=True)
class IrfTable:
    """``responses[h, i, j]``: response of variable i at horizon h to a unit shock in j."""

    responses: NDArray[np.float64]
    apen_per_path: NDArray[np.float64]

    @property
    def horizon(self) -> int:
        return self.responses.shape[0] - 1

    def path(self, response: int, shock: int) -> NDArray[np.float64]:
        return self.responses[:, response, shock]


def ma_matrices(model: VarModel, horizon: int) -> NDArray[np.float64]:
    """``Phi_0 = I``, ``Phi_h = sum_{i=1}^{min(h, p)} A_i Phi_{h-i}``."""
    k = model.k
    phi = np.zeros((horizon + 1, k, k))
    phi[0] = np.eye(k)
    for h in range(1, horizon + 1):
        for i in range(1, min(h, model.order) + 1):
            phi[h] += model.coefs[i - 1] @ phi[h - i]
    return phi


def orth_irf(model: VarModel, horizon: int = 20, *, m: int = 2, r_frac: float = 0.2) -> IrfTable:
    """Orthogonalized responses ``Theta_h = Phi_h P`` to one-standard-deviation shocks."""
    if not model.is_stable():
        warnings.warn("VAR is not stable; impulse responses do not decay", RuntimeWarning, stacklevel=2)
    theta = ma_matrices(model, horizon) @ model.chol
    k = model.k
    apens = np.full((k, k), np.nan)
    if horizon + 1 >= m + 2:
        for i in range(k):
            for j in range(k):
                apens[i, j] = entropy.apen_relative(theta[:, i, j], m, r_frac)
    return IrfTable(theta, apens)


def long_run_equilibrium(data: ArrayLike, beta: ArrayLike, rho: float) -> NDArray[np.float64]:
    """Error-correction term ``beta . X_t + rho`` for every row of X."""
    x = np.asarray(data, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if x.ndim != 2 or x.shape[1] != beta.size:
        raise LengthMismatch(f"data with shape {x.shape} does not match beta of size {beta.size}")
    return x @ beta + float(rho)
